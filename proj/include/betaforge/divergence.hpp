#ifndef BETAFORGE_DIVERGENCE_HPP
#define BETAFORGE_DIVERGENCE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betaforge/dataset.hpp"

namespace betaforge::divergence {

// Density values on a uniform grid, normalized so sum(density)*step == 1.
struct GriddedDensity {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;

    double step() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
    double lo() const { return grid.front(); }
    double hi() const { return grid.back(); }
};

struct DivergenceReport {
    double hellinger = 0.0;     // in [0,1]
    double js_nats = 0.0;       // in [0, ln 2]
    double kl_forward = 0.0;
    double kl_reverse = 0.0;
    double tv = 0.0;            // in [0,1]
    double theorem3_lhs = 0.0;  // js_nats
    double theorem3_rhs = 0.0;  // tv^2 / (2 ln 2)
    bool theorem3_holds = false;
};

// Gaussian-kernel density on a uniform grid spanning [min-3h, max+3h].
// Bandwidth defaults to Silverman's rule 0.9*min(sd, IQR/1.34)*E^(-1/5).
GriddedDensity kde_fit(std::span<const double> samples, std::size_t grid_size = 512,
                       std::optional<double> bandwidth = std::nullopt);

// Discrete-integral Hellinger / Jensen-Shannon / KL / total variation after
// re-gridding both densities onto the union span.
DivergenceReport compare(const GriddedDensity& d1, const GriddedDensity& d2);

struct FeatureDivergence {
    std::string feature;
    DivergenceReport report;
};

// Per-feature class-0 vs class-1 divergences for a two-class dataset,
// sorted by Hellinger distance, most separable first.
std::vector<FeatureDivergence> feature_divergence_table(const pipeline::LabeledDataset& ds,
                                                        std::size_t grid_size = 512);

} // namespace betaforge::divergence

#endif
