#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cutsel {

// How candidate cutpoints are derived for a predictor.
struct GridSpec {
    enum class Kind { percentile, uniform, explicit_values };

    Kind kind = Kind::percentile;
    // percentile: levels in percent, strictly inside [0, 100].
    // Default is the 19 vigintiles 5, 10, ..., 95.
    std::vector<double> levels;
    // uniform: number of evenly spaced cutpoints over the observed range.
    int count = 19;
    // explicit_values: per-predictor cutpoints, keyed by predictor name.
    // Every predictor of the dataset must be listed.
    std::map<std::string, std::vector<double>> values;

    static GridSpec vigintiles();
    static GridSpec percentiles(std::vector<double> levels);
    static GridSpec uniform(int count);
    static GridSpec explicit_values_for(std::map<std::string, std::vector<double>> values);

    void validate() const;
};

// Ordered candidate cutoffs per predictor. Each cutpoint lies strictly inside
// the observed range of its predictor, so no indicator column is constant.
struct CutpointGrid {
    std::vector<std::vector<double>> cutpoints;  // per predictor, strictly increasing
    GridSpec spec;                               // how the grid was derived

    std::int64_t predictors() const { return static_cast<std::int64_t>(cutpoints.size()); }
    std::int64_t total_cutpoints() const;
    // First design-matrix column index of predictor j under the canonical
    // predictor-major column layout.
    std::int64_t column_offset(std::int64_t predictor) const;
};

// Linear-interpolation quantile between order statistics (the "type 7" rule):
// position (n-1)*p into the sorted sample, interpolating between neighbours.
double quantile_sorted(std::span<const double> sorted, double p);

// Builds the candidate cutpoints for one predictor. Candidates that induce
// identical indicator columns are collapsed to one cutpoint (candidates that
// land on tied observed values are reported as the midpoint of the two
// distinct values they separate); candidates whose column would be constant
// are dropped.
std::vector<double> build_cutpoint_grid(std::span<const double> x, const GridSpec& spec,
                                        const std::string& name = "");

// Builds grids for every predictor of the dataset.
CutpointGrid build_grids(const Dataset& data, const GridSpec& spec);

}  // namespace cutsel
