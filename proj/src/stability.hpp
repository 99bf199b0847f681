#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"
#include "grid.hpp"
#include "solver.hpp"

namespace cutsel {

// Configuration of the subsample-and-refit loop.
struct StabilityConfig {
    enum class LambdaRule {
        fraction_of_max,  // lambda = lambda_fraction * lambda_max per subsample
        fixed,            // one lambda for every subsample
        ebic              // per-subsample path, EBIC-selected point
    };

    int subsamples = 100;      // B
    double fraction = 0.5;     // subsample fraction, without replacement, class-stratified
    LambdaRule lambda_rule = LambdaRule::fraction_of_max;
    // Tight enough that pure-noise runs keep selection probabilities low,
    // loose enough that a correlated block of real effects survives; 0.1
    // admits dozens of noise columns at realistic sample sizes.
    double lambda_fraction = 0.3;
    double lambda_value = 0.0;  // used by LambdaRule::fixed
    double ebic_gamma = 0.5;
    PathSpec ebic_path;
    double threshold = 0.75;   // selection-probability threshold pi_thr
    std::uint64_t seed = 0;
    int workers = 0;           // 0: resolve from environment/hardware
    FitOptions fit;

    void validate() const;
};

// Selection probabilities per design column plus run metadata.
struct StabilityResult {
    std::vector<double> probabilities;       // aligned to `columns`
    std::vector<ColumnInfo> columns;         // design column back-map
    std::vector<std::int32_t> nonzero_counts;  // per subsample; -1 where the fit failed
    int subsamples = 0;                      // requested B
    int failed = 0;                          // excluded from the denominator
    double omega = 1.0;                      // resolved row weight
    std::vector<std::string> warnings;
};

// One recommended cutoff after thresholding and neighbor merging.
struct CutoffRecommendation {
    std::int32_t predictor = 0;
    double cutoff = 0.0;
    double probability = 0.0;
    bool merged = false;                    // absorbed at least one grid neighbor
    std::vector<double> absorbed;           // cutpoints merged into this one
};

// Class-stratified subsample row sets (ascending, without replacement),
// generated serially from cfg.seed; subsample b uses stream b. Exposed so
// callers can reproduce or inject membership sets.
std::vector<std::vector<std::int32_t>> subsample_memberships(const Dataset& data,
                                                             const StabilityConfig& cfg);

// Runs the lasso on each membership set and aggregates nonzero indicators
// into selection probabilities. Deterministic given cfg.seed; fits run in
// parallel but are indexed by subsample, so scheduling cannot change results.
StabilityResult stability_selection_with_memberships(
    const Dataset& data, const CutpointGrid& grids, const WeightSpec& w,
    const StabilityConfig& cfg, const std::vector<std::vector<std::int32_t>>& memberships);

StabilityResult stability_selection(const Dataset& data, const CutpointGrid& grids,
                                    const WeightSpec& w, const StabilityConfig& cfg);

// Thresholds the probabilities and merges adjacent selected cutpoints of the
// same predictor into one recommendation at the highest-probability member.
// Sorted by probability descending (ties: predictor, then cutoff).
std::vector<CutoffRecommendation> select_cutoffs(const StabilityResult& res,
                                                 const CutpointGrid& grids, double threshold);

}  // namespace cutsel
