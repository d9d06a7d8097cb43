#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "errors.hpp"
#include "random.hpp"

namespace rankarena {

/// Return-generating process: homogeneous assets, IID-over-days multivariate
/// normal returns with compound-symmetry covariance, optionally split into an
/// unpredictable share (1 - lambda) and a predictable share lambda.
struct MarketModel {
    double mu_r = 0.00037;
    double sigma_rr = 0.00038;
    double sigma_rr_prime = 0.00013;
    double lambda = 0.0;
    int n_assets = 100;
    int days_per_interval = 20;

    void validate() const {
        if (n_assets < 1) throw ParameterError("n_assets must be positive");
        if (days_per_interval < 1) throw ParameterError("days_per_interval must be positive");
        if (!(sigma_rr > 0.0)) throw ParameterError("sigma_rr must be positive");
        if (!(sigma_rr_prime >= 0.0)) throw ParameterError("sigma_rr_prime must be non-negative");
        if (n_assets >= 2 && !(sigma_rr_prime < sigma_rr))
            throw ParameterError("covariance is not positive definite: sigma_rr_prime must be below sigma_rr");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("lambda must lie in [0, 1]");
    }

    Eigen::VectorXd mean() const { return Eigen::VectorXd::Constant(n_assets, mu_r); }

    /// sigma_rr on the diagonal, sigma_rr_prime elsewhere.
    Eigen::MatrixXd covariance() const {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n_assets, n_assets, sigma_rr_prime);
        cov.diagonal().setConstant(sigma_rr);
        return cov;
    }

    MarketModel with_lambda(double value) const {
        MarketModel copy = *this;
        copy.lambda = value;
        return copy;
    }
};

/// Daily simple returns r[i, t] for I assets over T days, cut into contiguous
/// submission intervals of `days_per_interval` days (the last one may be short
/// when T is not a multiple).
class ReturnPanel {
public:
    ReturnPanel() = default;

    ReturnPanel(Eigen::MatrixXd returns, int days_per_interval)
        : returns_(std::move(returns)), days_per_interval_(days_per_interval) {
        if (days_per_interval_ < 1) throw ParameterError("days_per_interval must be positive");
    }

    ReturnPanel(Eigen::MatrixXd unpredictable, Eigen::MatrixXd predictable, int days_per_interval)
        : returns_(unpredictable + predictable),
          unpredictable_(std::move(unpredictable)),
          predictable_(std::move(predictable)),
          days_per_interval_(days_per_interval) {
        if (days_per_interval_ < 1) throw ParameterError("days_per_interval must be positive");
    }

    const Eigen::MatrixXd& returns() const { return returns_; }
    int n_assets() const { return static_cast<int>(returns_.rows()); }
    int n_days() const { return static_cast<int>(returns_.cols()); }
    int days_per_interval() const { return days_per_interval_; }
    int n_intervals() const { return (n_days() + days_per_interval_ - 1) / days_per_interval_; }
    int interval_of(int day) const { return day / days_per_interval_; }
    int interval_begin(int m) const { return m * days_per_interval_; }
    int interval_length(int m) const {
        return std::min(days_per_interval_, n_days() - interval_begin(m));
    }

    /// Returns of interval m (0-based) as an I x len block.
    auto interval(int m) const {
        return returns_.middleCols(interval_begin(m), interval_length(m));
    }

    bool has_split() const { return predictable_.has_value(); }
    const Eigen::MatrixXd& unpredictable() const { return unpredictable_.value(); }
    const Eigen::MatrixXd& predictable() const { return predictable_.value(); }

    /// Sum of the predictable component over interval m; zeros without a split.
    Eigen::VectorXd predictable_sum(int m) const {
        if (!has_split()) return Eigen::VectorXd::Zero(n_assets());
        return predictable_->middleCols(interval_begin(m), interval_length(m)).rowwise().sum();
    }

private:
    Eigen::MatrixXd returns_;
    std::optional<Eigen::MatrixXd> unpredictable_;
    std::optional<Eigen::MatrixXd> predictable_;
    int days_per_interval_ = 20;
};

namespace detail {

// Compound symmetry admits the one-factor form
//   r_i = mean + sqrt(scale) * (sqrt(s - s') z_i + sqrt(s') f),
// which has exactly covariance scale * Sigma_r.
inline void fill_cs_normals(Eigen::Ref<Eigen::MatrixXd> out, double mean, double sigma_rr,
                            double sigma_rr_prime, double scale, Engine& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double idio = std::sqrt(scale * (sigma_rr - sigma_rr_prime));
    const double common = std::sqrt(scale * sigma_rr_prime);
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
        const double f = common * normal(rng);
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, t) = mean + f + idio * normal(rng);
    }
}

} // namespace detail

/// Draws an n_days panel from the model. With lambda > 0 the panel carries the
/// (unpredictable, predictable) split and r = r_u + r_p.
inline ReturnPanel sample_returns(const MarketModel& model, int n_days, Engine& rng) {
    model.validate();
    if (n_days < 1) throw ParameterError("n_days must be at least 1");
    const int n = model.n_assets;
    if (model.lambda == 0.0) {
        Eigen::MatrixXd r(n, n_days);
        detail::fill_cs_normals(r, model.mu_r, model.sigma_rr, model.sigma_rr_prime, 1.0, rng);
        return ReturnPanel(std::move(r), model.days_per_interval);
    }
    const double lam = model.lambda;
    Eigen::MatrixXd ru(n, n_days), rp(n, n_days);
    detail::fill_cs_normals(ru, (1.0 - lam) * model.mu_r, model.sigma_rr, model.sigma_rr_prime, 1.0 - lam, rng);
    detail::fill_cs_normals(rp, lam * model.mu_r, model.sigma_rr, model.sigma_rr_prime, lam, rng);
    return ReturnPanel(std::move(ru), std::move(rp), model.days_per_interval);
}

inline ReturnPanel sample_returns(const MarketModel& model, int n_days, std::uint64_t seed) {
    Engine rng = make_engine(seed, Stream::returns);
    return sample_returns(model, n_days, rng);
}

struct CompoundSymmetryFit {
    double sigma_rr;
    double sigma_rr_prime;
};

/// Compound-symmetry MLE: averages of the diagonal and off-diagonal entries of
/// the unbiased sample covariance. Uses sum(S) = var(sum_i r_i) so the full
/// I x I matrix is never formed.
inline CompoundSymmetryFit fit_covariance_cs(const Eigen::MatrixXd& returns) {
    const Eigen::Index n_assets = returns.rows();
    const Eigen::Index n_days = returns.cols();
    if (n_assets < 2) throw EstimationError("compound-symmetry fit needs at least two assets");
    if (n_days < 2) throw EstimationError("compound-symmetry fit needs at least two days");
    const Eigen::MatrixXd centered = returns.colwise() - returns.rowwise().mean();
    const double denom = static_cast<double>(n_days - 1);
    const double trace = centered.array().square().sum() / denom;
    const double total = centered.colwise().sum().array().square().sum() / denom;
    const double ni = static_cast<double>(n_assets);
    return {trace / ni, (total - trace) / (ni * (ni - 1.0))};
}

inline CompoundSymmetryFit fit_covariance_cs(const ReturnPanel& panel) {
    return fit_covariance_cs(panel.returns());
}

/// Per-day mean that compounds to `annual_return` over `trading_days`.
inline double daily_mean_from_annual(double annual_return, int trading_days) {
    if (trading_days <= 0) throw ParameterError("trading_days must be positive");
    if (!(annual_return > -1.0)) throw ParameterError("annual return must exceed -100%");
    return std::expm1(std::log1p(annual_return) / trading_days);
}

} // namespace rankarena
