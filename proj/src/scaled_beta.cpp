#include "betaforge/scaled_beta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "betaforge/rng.hpp"

namespace betaforge::beta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Beta density on [0,1]. Diverging endpoints return +inf, touching
// endpoints with shape exactly 1 take the finite limit.
double pdf01(double a, double b, double t) {
    if (t < 0.0 || t > 1.0) return 0.0;
    const double log_b = log_beta_fn(a, b);
    double lt;
    if (t == 0.0) {
        if (a < 1.0) return kInf;
        if (a > 1.0) return 0.0;
        lt = 0.0;
    } else {
        lt = (a - 1.0) * std::log(t);
    }
    double lu;
    if (t == 1.0) {
        if (b < 1.0) return kInf;
        if (b > 1.0) return 0.0;
        lu = 0.0;
    } else {
        lu = (b - 1.0) * std::log1p(-t);
    }
    return std::exp(lt + lu - log_b);
}

// Gauss-Kronrod 7-15 abscissae/weights on [-1,1], positive half.
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <typename F>
void kronrod15(const F& f, double lo, double hi, double& gauss, double& kron) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    gauss = kWg[3] * f(c);
    kron = kWgk[7] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double fs = f(c - h * kXgk[i]) + f(c + h * kXgk[i]);
        kron += kWgk[i] * fs;
        if (i % 2 == 1) gauss += kWg[i / 2] * fs;
    }
    gauss *= h;
    kron *= h;
}

template <typename F>
double adapt(const F& f, double lo, double hi, double tol, int depth) {
    double g, k;
    kronrod15(f, lo, hi, g, k);
    if (std::abs(k - g) <= tol || depth >= 48) return k;
    const double mid = 0.5 * (lo + hi);
    return adapt(f, lo, mid, tol, depth + 1) + adapt(f, mid, hi, tol, depth + 1);
}

// Integrate the unit-interval density over [0, t]. Splitting at the
// interior mode keeps sharp peaks on panel edges where the subdivision
// can find them.
double cdf01(double a, double b, double t, double tol) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const auto f = [a, b](double u) { return pdf01(a, b, u); };
    const double panel_tol = tol / 64.0;
    double total = 0.0;
    double start = 0.0;
    if (a > 1.0 && b > 1.0) {
        const double mode = (a - 1.0) / (a + b - 2.0);
        if (mode > 0.0 && mode < t) {
            total += adapt(f, 0.0, mode, panel_tol, 0);
            start = mode;
        }
    }
    total += adapt(f, start, t, panel_tol, 0);
    return std::clamp(total, 0.0, 1.0);
}

void check_params(const ScaledBetaParams& p) {
    if (!(p.alpha > 0.0) || !(p.beta > 0.0))
        throw std::invalid_argument("scaled beta shapes must be positive");
    if (!(p.support_max > p.support_min))
        throw std::invalid_argument("scaled beta support must have positive width");
}

} // namespace

const char* to_string(EstimationErrorKind kind) {
    switch (kind) {
        case EstimationErrorKind::ZeroRange: return "ZeroRange";
        case EstimationErrorKind::StatsOutOfOrder: return "StatsOutOfOrder";
        case EstimationErrorKind::SymmetricUnderdetermined: return "SymmetricUnderdetermined";
        case EstimationErrorKind::InconsistentStats: return "InconsistentStats";
        case EstimationErrorKind::OutOfDomain: return "OutOfDomain";
    }
    return "Unknown";
}

Estimated<ScaledStats> scale_stats(const SummaryStats& stats) {
    if (!std::isfinite(stats.min_price) || !std::isfinite(stats.max_price) ||
        !std::isfinite(stats.mean_price) || !std::isfinite(stats.median_price)) {
        return EstimationError{EstimationErrorKind::StatsOutOfOrder,
                               "summary statistics must be finite"};
    }
    const double range = stats.max_price - stats.min_price;
    if (range < 0.0 || stats.mean_price < stats.min_price ||
        stats.mean_price > stats.max_price || stats.median_price < stats.min_price ||
        stats.median_price > stats.max_price) {
        return EstimationError{EstimationErrorKind::StatsOutOfOrder,
                               "summary statistics violate min <= mean,median <= max"};
    }
    if (range == 0.0) {
        return EstimationError{EstimationErrorKind::ZeroRange, "max equals min"};
    }
    const ScaledStats scaled{(stats.mean_price - stats.min_price) / range,
                             (stats.median_price - stats.min_price) / range};
    if (scaled.s <= 0.0 || scaled.s >= 1.0 || scaled.q <= 0.0 || scaled.q >= 1.0) {
        return EstimationError{EstimationErrorKind::OutOfDomain,
                               "scaled mean or median on the boundary of (0,1)"};
    }
    return scaled;
}

Estimated<ScaledBetaParams> estimate_alpha_beta(const ScaledStats& scaled) {
    const double s = scaled.s;
    const double q = scaled.q;
    if (!(s > 0.0 && s < 1.0 && q > 0.0 && q < 1.0)) {
        return EstimationError{EstimationErrorKind::OutOfDomain,
                               "scaled stats outside (0,1)"};
    }
    const double gap = q - s;
    if (std::abs(gap) < kQsEpsilon) {
        if (std::abs(q - 0.5) < kQsEpsilon) {
            return EstimationError{EstimationErrorKind::SymmetricUnderdetermined,
                                   "mean == median == midpoint: shapes underdetermined"};
        }
        return EstimationError{EstimationErrorKind::InconsistentStats,
                               "mean == median away from the midpoint"};
    }
    const double skew = 2.0 * q - 1.0;
    if (skew == 0.0 || (skew > 0.0) != (gap > 0.0)) {
        return EstimationError{EstimationErrorKind::OutOfDomain,
                               "mean/median combination yields non-positive shapes"};
    }
    const double alpha = std::min(s * skew / (3.0 * gap), kShapeCap);
    const double beta = std::min((1.0 - s) * skew / (3.0 * gap), kShapeCap);
    return ScaledBetaParams{alpha, beta, 0.0, 1.0};
}

Estimated<ScaledBetaParams> estimate_params(const SummaryStats& stats) {
    const auto scaled = scale_stats(stats);
    if (!scaled) return scaled.error();
    auto shapes = estimate_alpha_beta(scaled.value());
    if (!shapes) return shapes.error();
    ScaledBetaParams p = shapes.value();
    p.support_min = stats.min_price;
    p.support_max = stats.max_price;
    return p;
}

double beta_mean(const ScaledBetaParams& p) {
    check_params(p);
    return p.support_min + p.alpha / (p.alpha + p.beta) * p.range();
}

double beta_median_approx(const ScaledBetaParams& p) {
    check_params(p);
    return p.support_min + p.range() * (p.alpha - 1.0 / 3.0) / (p.alpha + p.beta - 2.0 / 3.0);
}

double pdf(const ScaledBetaParams& p, double x) {
    check_params(p);
    if (x < p.support_min || x > p.support_max) return 0.0;
    const double t = (x - p.support_min) / p.range();
    const double d = pdf01(p.alpha, p.beta, t);
    return std::isinf(d) ? d : d / p.range();
}

double cdf(const ScaledBetaParams& p, double x, double tol) {
    check_params(p);
    const double t = (x - p.support_min) / p.range();
    return cdf01(p.alpha, p.beta, t, tol);
}

double numeric_median(const ScaledBetaParams& p, double tol) {
    check_params(p);
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const double quad_tol = std::min(tol, 1e-8) / 8.0;
    double lo = 0.0, hi = 1.0, mid = 0.5;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double c = cdf01(p.alpha, p.beta, mid, quad_tol);
        if (std::abs(c - 0.5) <= tol) break;
        if (c < 0.5) lo = mid; else hi = mid;
    }
    return p.support_min + mid * p.range();
}

std::vector<double> sample(const ScaledBetaParams& p, std::size_t count,
                           std::uint64_t seed) {
    check_params(p);
    // cumulative mass table in the unit interval, one Kronrod panel per cell
    constexpr int kCells = 2048;
    std::vector<double> cum(kCells + 1, 0.0);
    const auto f = [&p](double u) { return pdf01(p.alpha, p.beta, u); };
    for (int i = 0; i < kCells; ++i) {
        double g, k;
        kronrod15(f, i / double(kCells), (i + 1) / double(kCells), g, k);
        cum[i + 1] = cum[i] + k;
    }
    const double total = cum[kCells];

    std::vector<double> out;
    out.reserve(count);
    Rng rng(seed);
    for (std::size_t n = 0; n < count; ++n) {
        const double target = rng.uniform() * total;
        // binary search for the bracketing cell, then interpolate inside it
        std::size_t lo = 0, hi = kCells;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (cum[mid] <= target) lo = mid; else hi = mid;
        }
        const double mass = cum[lo + 1] - cum[lo];
        const double frac = mass > 0.0 ? (target - cum[lo]) / mass : 0.5;
        const double t = (static_cast<double>(lo) + frac) / kCells;
        out.push_back(p.support_min + t * p.range());
    }
    return out;
}

} // namespace betaforge::beta
