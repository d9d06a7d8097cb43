#pragma once

#include "errors.hpp"
#include "random.hpp"
#include "numeric.hpp"
#include "market.hpp"
#include "portfolio.hpp"
#include "scoring.hpp"
#include "sharpe_test.hpp"
#include "msm.hpp"
#include "dp_policy.hpp"
#include "arena.hpp"
#include "empirics.hpp"
#include "io.hpp"
#include "pipeline.hpp"
