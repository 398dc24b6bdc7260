#include "betaforge/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace betaforge::divergence {

namespace {

constexpr double kLogFloor = 1e-12; // floor inside KL/JS logarithms
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double quantile_sorted(const std::vector<double>& sorted, double p) {
    // linear interpolation between order statistics
    const double idx = p * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = idx - lo;
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

void renormalize(std::vector<double>& density, double step) {
    double mass = 0.0;
    for (const double d : density) mass += d;
    mass *= step;
    if (!(mass > 0.0)) throw std::invalid_argument("density has no mass");
    for (double& d : density) d /= mass;
}

// linear interpolation, zero outside the grid
double interp(const GriddedDensity& d, double x) {
    if (x < d.lo() || x > d.hi()) return 0.0;
    const double pos = (x - d.lo()) / d.step();
    const std::size_t i = std::min(static_cast<std::size_t>(pos), d.grid.size() - 2);
    const double frac = pos - i;
    return d.density[i] * (1.0 - frac) + d.density[i + 1] * frac;
}

double kl_discrete(const std::vector<double>& p, const std::vector<double>& q, double step) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        kl += p[i] * std::log(std::max(p[i], kLogFloor) / std::max(q[i], kLogFloor));
    }
    return kl * step;
}

} // namespace

GriddedDensity kde_fit(std::span<const double> samples, std::size_t grid_size,
                       std::optional<double> bandwidth) {
    if (samples.size() < 2) throw std::invalid_argument("kde needs at least two samples");
    if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw std::invalid_argument("degenerate samples: zero spread");

    double h;
    if (bandwidth) {
        h = *bandwidth;
        if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    } else {
        const double n = static_cast<double>(sorted.size());
        double mean = 0.0;
        for (const double x : sorted) mean += x;
        mean /= n;
        double ss = 0.0;
        for (const double x : sorted) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
        double spread = sd;
        if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
        h = 0.9 * spread * std::pow(n, -0.2);
        if (!(h > 0.0)) throw std::invalid_argument("degenerate samples: zero bandwidth");
    }

    GriddedDensity out;
    out.bandwidth = h;
    const double lo = sorted.front() - 3.0 * h;
    const double hi = sorted.back() + 3.0 * h;
    const double step = (hi - lo) / static_cast<double>(grid_size - 1);
    out.grid.resize(grid_size);
    out.density.assign(grid_size, 0.0);
    const double scale = 1.0 / (static_cast<double>(sorted.size()) * h);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double x = lo + step * static_cast<double>(i);
        out.grid[i] = x;
        double acc = 0.0;
        for (const double s : sorted) {
            const double u = (x - s) / h;
            acc += kInvSqrt2Pi * std::exp(-0.5 * u * u);
        }
        out.density[i] = acc * scale;
    }
    renormalize(out.density, step);
    return out;
}

DivergenceReport compare(const GriddedDensity& d1, const GriddedDensity& d2) {
    if (d1.grid.size() < 2 || d2.grid.size() < 2)
        throw std::invalid_argument("densities must be gridded");

    const double lo = std::min(d1.lo(), d2.lo());
    const double hi = std::max(d1.hi(), d2.hi());
    const std::size_t grid_size = std::max(d1.grid.size(), d2.grid.size());
    const double step = (hi - lo) / static_cast<double>(grid_size - 1);

    std::vector<double> p(grid_size), q(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double x = lo + step * static_cast<double>(i);
        p[i] = interp(d1, x);
        q[i] = interp(d2, x);
    }
    renormalize(p, step);
    renormalize(q, step);

    DivergenceReport report;
    double hell = 0.0, tv = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double ds = std::sqrt(p[i]) - std::sqrt(q[i]);
        hell += ds * ds;
        tv += std::abs(p[i] - q[i]);
    }
    report.hellinger = std::sqrt(0.5 * hell * step);
    report.tv = 0.5 * tv * step;

    std::vector<double> mix(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) mix[i] = 0.5 * (p[i] + q[i]);
    report.js_nats = 0.5 * kl_discrete(p, mix, step) + 0.5 * kl_discrete(q, mix, step);
    report.kl_forward = kl_discrete(p, q, step);
    report.kl_reverse = kl_discrete(q, p, step);

    report.theorem3_lhs = report.js_nats;
    report.theorem3_rhs = report.tv * report.tv / (2.0 * std::log(2.0));
    report.theorem3_holds = report.theorem3_lhs <= report.theorem3_rhs;
    return report;
}

std::vector<FeatureDivergence> feature_divergence_table(const pipeline::LabeledDataset& ds,
                                                        std::size_t grid_size) {
    std::vector<FeatureDivergence> table;
    for (std::size_t f = 0; f < ds.width(); ++f) {
        std::vector<double> class0, class1;
        for (std::size_t r = 0; r < ds.n_rows(); ++r)
            (ds.labels[r] == 0 ? class0 : class1).push_back(ds.at(r, f));
        if (class0.size() < 2 || class1.size() < 2)
            throw std::invalid_argument("each class needs at least two rows per feature");
        try {
            const auto k0 = kde_fit(class0, grid_size);
            const auto k1 = kde_fit(class1, grid_size);
            table.push_back({ds.feature_names[f], compare(k0, k1)});
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("feature " + ds.feature_names[f] + ": " + e.what());
        }
    }
    std::stable_sort(table.begin(), table.end(),
                     [](const FeatureDivergence& a, const FeatureDivergence& b) {
                         return a.report.hellinger > b.report.hellinger;
                     });
    return table;
}

} // namespace betaforge::divergence
