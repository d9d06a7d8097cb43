#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "random.hpp"

namespace rankarena {

/// Signed weights over the asset universe.
using WeightVector = Eigen::VectorXd;

inline constexpr double kMinGross = 0.25;
inline constexpr double kMaxGross = 1.0;

inline double gross_exposure(const Eigen::Ref<const Eigen::VectorXd>& w) { return w.cwiseAbs().sum(); }

/// Competition constraint 0.25 <= sum|w| <= 1. A relative slack of 1e-12
/// absorbs rounding in weights like 71 x (1/71).
inline bool validate_weights(const Eigen::Ref<const Eigen::VectorXd>& w) {
    const double gross = gross_exposure(w);
    constexpr double slack = 1e-12;
    return gross >= kMinGross * (1.0 - slack) && gross <= kMaxGross * (1.0 + slack);
}

/// Counts of long / zero / short positions of the random baseline portfolio.
struct BaselineTheta {
    int n_plus = 38;
    int n_zero = 29;
    int n_minus = 33;

    int n_assets() const { return n_plus + n_zero + n_minus; }
    int n_active() const { return n_plus + n_minus; }

    void validate() const {
        if (n_plus < 0 || n_zero < 0 || n_minus < 0) throw ParameterError("position counts must be non-negative");
        if (n_active() == 0) throw ParameterError("baseline portfolio needs at least one nonzero position");
    }
    void validate(int n_assets_expected) const {
        validate();
        if (n_assets() != n_assets_expected) throw ParameterError("position counts must sum to the asset count");
    }

    friend bool operator==(const BaselineTheta&, const BaselineTheta&) = default;
    friend auto operator<=>(const BaselineTheta& a, const BaselineTheta& b) {
        if (auto c = a.n_plus <=> b.n_plus; c != 0) return c;
        if (auto c = a.n_zero <=> b.n_zero; c != 0) return c;
        return a.n_minus <=> b.n_minus;
    }
};

/// Writes a baseline draw into `out`, reusing `scratch` (size I) as the index
/// pool. Positions are assigned by a uniform partial shuffle of asset indices.
inline void sample_baseline_into(const BaselineTheta& theta, Engine& rng, std::vector<int>& scratch,
                                 Eigen::Ref<Eigen::VectorXd> out) {
    const int n = theta.n_assets();
    scratch.resize(static_cast<std::size_t>(n));
    std::iota(scratch.begin(), scratch.end(), 0);
    partial_shuffle(std::span<int>(scratch), static_cast<std::size_t>(theta.n_active()), rng);
    const double value = 1.0 / theta.n_active();
    out.setZero();
    for (int j = 0; j < theta.n_plus; ++j) out(scratch[static_cast<std::size_t>(j)]) = value;
    for (int j = theta.n_plus; j < theta.n_active(); ++j) out(scratch[static_cast<std::size_t>(j)]) = -value;
}

inline WeightVector sample_baseline(const BaselineTheta& theta, Engine& rng) {
    theta.validate();
    WeightVector w(theta.n_assets());
    std::vector<int> scratch;
    sample_baseline_into(theta, rng, scratch, w);
    return w;
}

inline WeightVector sample_baseline(const BaselineTheta& theta, std::uint64_t seed) {
    Engine rng = make_engine(seed, Stream::opponents);
    return sample_baseline(theta, rng);
}

/// Rescales raw tangency weights to the gross-exposure cap.
inline WeightVector rescale_to_gross(const Eigen::VectorXd& raw, double gross_cap) {
    const double gross = gross_exposure(raw);
    if (!(gross > 0.0) || !std::isfinite(gross)) throw ParameterError("tangency weights are degenerate (zero vector)");
    return raw * (gross_cap / gross);
}

/// Sigma^{-1} * expected, rescaled so that sum|w| = gross_cap.
inline WeightVector tangency_from_covariance(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& expected,
                                             double gross_cap = 1.0) {
    if (covariance.rows() != covariance.cols() || covariance.rows() != expected.size())
        throw ParameterError("covariance / mean dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success) throw NumericError("covariance matrix is not positive definite");
    return rescale_to_gross(llt.solve(expected), gross_cap);
}

/// Tangency portfolio for a team that knows the interval's predictable
/// returns: Sigma^{-1}((1 - lambda) mu + predictable_sum). Factorizes once so
/// repeated submissions cost one triangular solve each.
class TangencySolver {
public:
    TangencySolver(const MarketModel& model, double gross_cap = 1.0)
        : lambda_(model.lambda), mean_(model.mean()), gross_cap_(gross_cap) {
        model.validate();
        llt_.compute(model.covariance());
        if (llt_.info() != Eigen::Success) throw NumericError("covariance matrix is not positive definite");
    }

    WeightVector operator()(const Eigen::VectorXd& predictable_sum) const {
        if (predictable_sum.size() != mean_.size()) throw ParameterError("predictable_sum has wrong length");
        return rescale_to_gross(llt_.solve((1.0 - lambda_) * mean_ + predictable_sum), gross_cap_);
    }

private:
    double lambda_;
    Eigen::VectorXd mean_;
    double gross_cap_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline WeightVector tangency_weights(const MarketModel& model, const Eigen::VectorXd& predictable_sum,
                                     double gross_cap = 1.0) {
    return TangencySolver(model, gross_cap)(predictable_sum);
}

/// Number of long positions for a long share beta_plus, rounded half up.
inline int long_count(double beta_plus, int n_assets) {
    if (!(beta_plus >= 0.0 && beta_plus <= 1.0)) throw ParameterError("beta_plus must lie in [0, 1]");
    // The small nudge makes 0.3 * 100 = 30.000000000000004 and 0.7 * 100 = 69.99999999999999 round as intended.
    return static_cast<int>(std::floor(beta_plus * n_assets + 0.5 + 1e-9));
}

/// Ternary-free rank-optimization portfolio: round(beta_plus * I) assets at
/// +1/I and the rest at -1/I, assigned uniformly at random.
inline void rank_opt_weights_into(double beta_plus, Engine& rng, std::vector<int>& scratch,
                                  Eigen::Ref<Eigen::VectorXd> out) {
    const int n = static_cast<int>(out.size());
    const int n_long = long_count(beta_plus, n);
    scratch.resize(static_cast<std::size_t>(n));
    std::iota(scratch.begin(), scratch.end(), 0);
    partial_shuffle(std::span<int>(scratch), static_cast<std::size_t>(n_long), rng);
    const double value = 1.0 / n;
    for (int j = 0; j < n; ++j) out(scratch[static_cast<std::size_t>(j)]) = j < n_long ? value : -value;
}

inline WeightVector rank_opt_weights(double beta_plus, int n_assets, Engine& rng) {
    if (n_assets < 1) throw ParameterError("n_assets must be positive");
    WeightVector w(n_assets);
    std::vector<int> scratch;
    rank_opt_weights_into(beta_plus, rng, scratch, w);
    return w;
}

inline WeightVector rank_opt_weights(double beta_plus, int n_assets, std::uint64_t seed) {
    Engine rng = make_engine(seed, Stream::focal);
    return rank_opt_weights(beta_plus, n_assets, rng);
}

} // namespace rankarena
