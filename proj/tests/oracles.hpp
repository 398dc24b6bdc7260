// Test-side oracles, kept independent of the library's numeric paths:
// the incomplete beta uses the classic continued fraction and the
// integrator is adaptive Simpson, not Gauss-Kronrod.
#ifndef BETAFORGE_TESTS_ORACLES_HPP
#define BETAFORGE_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

// regularized incomplete beta I_x(a, b)
inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - lbeta) * betacf(b, a, 1.0 - x) / b;
}

// median of Beta(a,b) on [0,1] by bisection on the continued-fraction CDF
inline double beta_median(double a, double b, double tol = 1e-12) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ibeta(a, b, mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double simpson_rec(const std::function<double(double)>& f, double lo, double hi,
                          double flo, double fmid, double fhi, double whole, double tol,
                          int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double fl = f(lmid);
    const double fr = f(rmid);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
    if (depth >= 40 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, lo, mid, flo, fl, fmid, left, tol / 2.0, depth + 1) +
           simpson_rec(f, mid, hi, fmid, fr, fhi, right, tol / 2.0, depth + 1);
}

// adaptive Simpson; endpoints are nudged inward so integrable endpoint
// singularities stay finite
inline double integrate(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-10, double rel_nudge = 1e-12) {
    const double nudge = (hi - lo) * rel_nudge;
    const double a = lo + nudge, b = hi - nudge;
    const double fa = f(a), fb = f(b);
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

// standard normal upper tail
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

} // namespace oracles

#endif
