#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "grid.hpp"
#include "solver.hpp"
#include "stability.hpp"

namespace cutsel {

// Standard normal CDF.
double normal_cdf(double z);

// Marginal distribution of one synthetic predictor. Values are produced by a
// monotone transform of a standard normal draw, so rank correlations are
// governed entirely by the copula.
struct Marginal {
    enum class Kind { normal, lognormal, uniform, quantile_table };

    Kind kind = Kind::normal;
    double a = 0.0;             // mean | log-mean | lower bound
    double b = 1.0;             // sd | log-sd | upper bound
    std::vector<double> table;  // sorted values for Kind::quantile_table

    static Marginal normal(double mean, double sd);
    static Marginal lognormal(double log_mean, double log_sd);
    static Marginal uniform(double lo, double hi);
    static Marginal quantile_table(std::vector<double> values);

    void validate() const;
    // Maps a standard normal draw to a value of this marginal.
    double transform(double z) const;
};

// Synthetic feature generator: named marginals tied together by a Gaussian
// copula with the given correlation matrix.
struct FeatureModel {
    std::vector<std::string> names;
    std::vector<Marginal> marginals;
    std::vector<double> correlation;  // p x p, row-major

    std::int32_t predictors() const { return static_cast<std::int32_t>(names.size()); }
    double correlation_at(std::int32_t i, std::int32_t j) const;
    void set_correlation(std::int32_t i, std::int32_t j, double rho);
    // Index of a named predictor, -1 when absent.
    std::int32_t index_of(const std::string& name) const;

    // Shapes, marginal validity, symmetry, unit diagonal, positive
    // semi-definiteness. Throws InvalidArgument; PSD failures are reported at
    // load so they cannot surface at draw time.
    void validate() const;

    static FeatureModel independent(std::vector<std::string> names,
                                    std::vector<Marginal> marginals);
    // Shipped 20-predictor blood-count-like model: a strongly correlated
    // red-cell block (Hg, Ht, Er), a cell-size pair (MCV, MCHC), a leukocyte
    // block around Le, differential counts paired with their percentages, and
    // an uncorrelated age. Built from a factor decomposition, so the
    // correlation matrix is positive definite by construction.
    static FeatureModel default_cbc();
};

// Row-major draw of synthetic features.
struct FeatureMatrix {
    std::vector<double> values;  // n x p
    std::int64_t n = 0;
    std::int32_t p = 0;

    double value(std::int64_t row, std::int32_t col) const {
        return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(p) +
                      static_cast<std::size_t>(col)];
    }
    std::vector<double> column(std::int32_t col) const;
};

// Draws n rows from the model. Deterministic per seed; n = 0 is valid.
FeatureMatrix generate_features(const FeatureModel& model, std::int64_t n, std::uint64_t seed);

// One relevant predictor of a scenario: the true cutoff sits at the given
// quantile level of the predictor and shifts the log-odds by beta above it.
struct ScenarioEffect {
    std::int32_t predictor = -1;
    double percentile = 0.5;
    double beta = 0.0;
};

// A ScenarioEffect resolved against a concrete feature draw.
struct TrueCutoff {
    std::int32_t predictor = -1;
    double percentile = 0.5;
    double beta = 0.0;
    double cutoff = 0.0;  // empirical quantile of the drawn predictor
};

// Evaluates each effect's percentile on the drawn features.
std::vector<TrueCutoff> resolve_effects(const FeatureMatrix& x,
                                        const std::vector<ScenarioEffect>& effects);

// Sum of the step effects per row: eta_i = sum_e beta_e * 1{x_ie > cutoff_e}.
std::vector<double> effect_offsets(const FeatureMatrix& x,
                                   const std::vector<TrueCutoff>& effects);

// Intercept b0 such that mean_i sigmoid(b0 + offset_i) = target_rate to
// within 1e-6. The mean is strictly increasing in b0, so bisection finds the
// unique root.
double calibrate_intercept(const FeatureMatrix& x, const std::vector<TrueCutoff>& effects,
                           double target_rate);

// Independent Bernoulli(sigmoid(intercept + offset_i)) draws.
std::vector<std::int8_t> generate_outcomes(const FeatureMatrix& x,
                                           const std::vector<TrueCutoff>& effects,
                                           double intercept, std::uint64_t seed);

// Simulation scenario: which predictors carry an effect, where their cutoffs
// sit, and how the relevant predictors are correlated.
struct ScenarioSpec {
    enum class Profile {
        low,   // relevant predictors mutually low-correlated
        block  // relevant predictors form a correlated block
    };

    std::string id = "custom";
    std::vector<ScenarioEffect> relevant;
    double target_rate = 0.07;
    std::int64_t n = 9594;
    int replications = 100;
    Profile profile = Profile::low;
    double block_rho = 0.7;       // within-block correlation under Profile::block
    double background_rho = 0.1;  // relevant-to-rest (and within, under Profile::low)
    bool fresh_features = false;  // redraw features every replication

    // Generic invariants (indices in range, one nonzero beta per relevant
    // predictor, rates and correlations in bounds) plus the structural rules
    // of the built-in ids: A/B have 2 relevant predictors, C/D have 5; A/D
    // cutoffs sit in the extreme percentiles (<= 5th or >= 95th), B/C in the
    // central ones (25th-75th); C/D use a block profile with rho >= 0.6
    // inside and |rho| <= 0.2 to the rest.
    void validate(const FeatureModel& model) const;

    // Built-in scenarios A-D over the named predictors of the model
    // (A/B: Hg, Le; C/D: Hg, Ht, Er, MCV, MCHC), plus "null" with no
    // relevant predictors.
    static ScenarioSpec builtin(const std::string& id, const FeatureModel& model);
};

// The model with the scenario's correlation profile applied: correlations
// among relevant predictors become block_rho (block) or background_rho (low),
// and correlations between relevant and all other predictors background_rho.
FeatureModel scenario_model(const FeatureModel& model, const ScenarioSpec& spec);

// Global design column whose cutpoint is nearest to value (ties: lower).
std::int64_t nearest_column(const CutpointGrid& grid, std::int32_t predictor, double value);

// Outcome of one simulation replication.
struct ReplicationRecord {
    bool ok = false;
    std::string error;                  // failure reason when !ok
    double event_rate = 0.0;            // mean of the generated outcomes
    double mean_nonzeros = 0.0;         // mean lasso support size over subsample fits
    std::vector<double> probabilities;  // selection probability per design column
    // Per true cutoff: probability reached the selection threshold.
    std::vector<std::uint8_t> detected_selected;
    // Per true cutoff: present among the recommended cutoffs (directly or
    // absorbed into a merged neighbor).
    std::vector<std::uint8_t> detected_cutoff;
};

// Aggregated scenario run. Columns, grid, true cutoffs and intercept refer to
// the reference feature draw; with fresh_features each replication re-resolves
// them on its own draw and per-column aggregation is by grid position.
struct ScenarioResult {
    ScenarioSpec spec;
    std::vector<std::string> names;      // predictor names
    CutpointGrid grid;                   // reference draw's cutpoint grid
    std::vector<ColumnInfo> columns;     // design column back-map
    std::vector<TrueCutoff> true_cutoffs;
    double intercept = 0.0;              // calibrated on the reference draw
    std::vector<ReplicationRecord> replications;
    int failed = 0;
    double mean_event_rate = 0.0;            // over successful replications
    std::vector<double> mean_probability;    // per column, over successful replications
    std::vector<double> detection_selected;  // per true cutoff
    std::vector<double> detection_cutoff;    // per true cutoff
    std::vector<std::string> warnings;
};

// Draws features (once, or per replication with fresh_features), generates
// outcomes under the true model, runs stability selection per replication and
// aggregates detection rates and mean selection probabilities. Failed
// replications are recorded and skipped; more than 10% failing is an error.
// Replications run in parallel on cfg.workers, each on an RNG stream derived
// from (seed, replication), so scheduling cannot change results.
ScenarioResult run_scenario(const ScenarioSpec& spec, const FeatureModel& model,
                            const WeightSpec& w, const GridSpec& grid_spec,
                            const StabilityConfig& cfg, std::uint64_t seed);

}  // namespace cutsel
