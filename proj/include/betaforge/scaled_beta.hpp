#ifndef BETAFORGE_SCALED_BETA_HPP
#define BETAFORGE_SCALED_BETA_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace betaforge::beta {

// Per-event price summary: the estimator's entire input.
struct SummaryStats {
    double min_price = 0.0;
    double max_price = 0.0;
    double mean_price = 0.0;
    double median_price = 0.0;
};

// Mean and median mapped onto (0,1).
struct ScaledStats {
    double s = 0.0; // scaled mean
    double q = 0.0; // scaled median
};

struct ScaledBetaParams {
    double alpha = 1.0;
    double beta = 1.0;
    double support_min = 0.0;
    double support_max = 1.0;

    double range() const { return support_max - support_min; }
};

enum class EstimationErrorKind {
    ZeroRange,
    StatsOutOfOrder,
    SymmetricUnderdetermined,
    InconsistentStats,
    OutOfDomain,
};

struct EstimationError {
    EstimationErrorKind kind;
    std::string detail;
};

const char* to_string(EstimationErrorKind kind);

// Minimal ok-or-error holder; estimation failures are data, not exceptions.
template <typename T>
class Estimated {
public:
    Estimated(T value) : v_(std::move(value)) {}
    Estimated(EstimationError err) : v_(std::move(err)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const { return std::get<T>(v_); }
    const EstimationError& error() const { return std::get<EstimationError>(v_); }

private:
    std::variant<T, EstimationError> v_;
};

// Tolerance for the q == s singularity of the closed-form estimator.
inline constexpr double kQsEpsilon = 1e-9;
// Shape cap: near-singular inputs that pass the epsilon gate stay bounded.
inline constexpr double kShapeCap = 1e6;

// s = (mean-min)/(max-min), q = (median-min)/(max-min).
Estimated<ScaledStats> scale_stats(const SummaryStats& stats);

// Closed-form inversion of the mean/median pair:
//   alpha = s(2q-1) / (3(q-s)),  beta = (1-s)(2q-1) / (3(q-s)).
// Result lives on [0,1]; attach a real support with estimate_params.
Estimated<ScaledBetaParams> estimate_alpha_beta(const ScaledStats& scaled);

// scale_stats + estimate_alpha_beta with the stats' own support attached.
Estimated<ScaledBetaParams> estimate_params(const SummaryStats& stats);

// mean = min + alpha/(alpha+beta) * (max-min)
double beta_mean(const ScaledBetaParams& params);

// median ~= min + (max-min) * (alpha - 1/3)/(alpha + beta - 2/3),
// applied for any positive shapes; accuracy is audited, not assumed.
double beta_median_approx(const ScaledBetaParams& params);

// Density on the support; 0 outside; diverging endpoints (alpha<1 at the
// lower edge, beta<1 at the upper) return +infinity.
double pdf(const ScaledBetaParams& params, double x);

// P(X <= x) by adaptive Gauss-Kronrod quadrature of the density.
double cdf(const ScaledBetaParams& params, double x, double tol = 1e-10);

// Bisection on cdf until |cdf(v) - 0.5| <= tol. Oracle for the accuracy of
// beta_median_approx.
double numeric_median(const ScaledBetaParams& params, double tol = 1e-9);

// Deterministic draws by inverting a cumulative quadrature table.
std::vector<double> sample(const ScaledBetaParams& params, std::size_t count,
                           std::uint64_t seed);

} // namespace betaforge::beta

#endif
