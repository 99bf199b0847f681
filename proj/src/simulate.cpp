#include "simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace cutsel {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / 1.4142135623730950488);
}

Marginal Marginal::normal(double mean, double sd) {
    Marginal m;
    m.kind = Kind::normal;
    m.a = mean;
    m.b = sd;
    return m;
}

Marginal Marginal::lognormal(double log_mean, double log_sd) {
    Marginal m;
    m.kind = Kind::lognormal;
    m.a = log_mean;
    m.b = log_sd;
    return m;
}

Marginal Marginal::uniform(double lo, double hi) {
    Marginal m;
    m.kind = Kind::uniform;
    m.a = lo;
    m.b = hi;
    return m;
}

Marginal Marginal::quantile_table(std::vector<double> values) {
    Marginal m;
    m.kind = Kind::quantile_table;
    m.table = std::move(values);
    return m;
}

void Marginal::validate() const {
    switch (kind) {
        case Kind::normal:
        case Kind::lognormal:
            if (!std::isfinite(a) || !std::isfinite(b) || b <= 0.0) {
                throw InvalidArgument("marginal: scale must be positive and finite");
            }
            return;
        case Kind::uniform:
            if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
                throw InvalidArgument("marginal: uniform bounds must satisfy lo < hi");
            }
            return;
        case Kind::quantile_table:
            if (table.empty()) {
                throw InvalidArgument("marginal: empty quantile table");
            }
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (!std::isfinite(table[i])) {
                    throw InvalidArgument("marginal: non-finite quantile table entry");
                }
                if (i > 0 && table[i] < table[i - 1]) {
                    throw InvalidArgument("marginal: quantile table must be sorted ascending");
                }
            }
            return;
    }
    throw InvalidArgument("marginal: unknown kind");
}

double Marginal::transform(double z) const {
    switch (kind) {
        case Kind::normal:
            return a + b * z;
        case Kind::lognormal:
            return std::exp(a + b * z);
        case Kind::uniform:
            return a + (b - a) * normal_cdf(z);
        case Kind::quantile_table:
            return quantile_sorted(table, normal_cdf(z));
    }
    throw InvalidArgument("marginal: unknown kind");
}

double FeatureModel::correlation_at(std::int32_t i, std::int32_t j) const {
    return correlation[static_cast<std::size_t>(i) * static_cast<std::size_t>(predictors()) +
                       static_cast<std::size_t>(j)];
}

void FeatureModel::set_correlation(std::int32_t i, std::int32_t j, double rho) {
    const auto p = static_cast<std::size_t>(predictors());
    correlation[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)] = rho;
    correlation[static_cast<std::size_t>(j) * p + static_cast<std::size_t>(i)] = rho;
}

std::int32_t FeatureModel::index_of(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == name) {
            return static_cast<std::int32_t>(j);
        }
    }
    return -1;
}

void FeatureModel::validate() const {
    const auto p = static_cast<std::size_t>(predictors());
    if (p == 0) {
        throw InvalidArgument("feature model: no predictors");
    }
    if (marginals.size() != p) {
        throw InvalidArgument("feature model: need one marginal per predictor");
    }
    std::set<std::string> seen;
    for (const std::string& name : names) {
        if (name.empty()) {
            throw InvalidArgument("feature model: empty predictor name");
        }
        if (!seen.insert(name).second) {
            throw InvalidArgument("feature model: duplicate predictor name " + name);
        }
    }
    for (const Marginal& m : marginals) {
        m.validate();
    }
    if (correlation.size() != p * p) {
        throw InvalidArgument("feature model: correlation matrix must be p x p");
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double v = correlation[i * p + j];
            if (!std::isfinite(v) || std::fabs(v) > 1.0 + 1e-12) {
                throw InvalidArgument("feature model: correlations must lie in [-1, 1]");
            }
            if (std::fabs(v - correlation[j * p + i]) > 1e-12) {
                throw InvalidArgument("feature model: correlation matrix must be symmetric");
            }
        }
        if (std::fabs(correlation[i * p + i] - 1.0) > 1e-12) {
            throw InvalidArgument("feature model: correlation matrix needs a unit diagonal");
        }
    }
    try {
        cholesky_lower(correlation, p);
    } catch (const NumericError&) {
        throw InvalidArgument("feature model: correlation matrix is not positive semi-definite");
    }
}

FeatureModel FeatureModel::independent(std::vector<std::string> names,
                                       std::vector<Marginal> marginals) {
    FeatureModel m;
    m.names = std::move(names);
    m.marginals = std::move(marginals);
    const auto p = m.names.size();
    m.correlation.assign(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        m.correlation[i * p + i] = 1.0;
    }
    m.validate();
    return m;
}

FeatureModel FeatureModel::default_cbc() {
    // Loadings on latent factors: 0 red-cell mass, 1 cell size, 2 leukocyte
    // count, 3 differential shift (neutrophils up / lymphocytes down), 4-8
    // one factor per count/percentage pair. Correlation = L L^T off the
    // diagonal, which keeps the matrix positive definite as long as every
    // row's squared loadings sum below 1.
    struct Row {
        const char* name;
        Marginal marginal;
        std::vector<std::pair<int, double>> loadings;
    };
    const std::vector<Row> rows = {
        {"Hg", Marginal::normal(14.0, 1.8), {{0, 0.92}}},
        {"Ht", Marginal::normal(42.0, 4.5), {{0, 0.93}}},
        {"MCHC", Marginal::normal(33.5, 1.1), {{0, 0.18}, {1, 0.62}}},
        {"MCV", Marginal::normal(90.0, 6.0), {{0, 0.15}, {1, 0.68}}},
        {"Er", Marginal::normal(4.8, 0.55), {{0, 0.88}}},
        {"P", Marginal::lognormal(std::log(250.0), 0.35), {{2, 0.15}}},
        {"RDW-CV", Marginal::lognormal(std::log(13.5), 0.12), {{0, -0.25}, {1, -0.20}}},
        {"Le", Marginal::lognormal(std::log(7.5), 0.35), {{2, 0.85}}},
        {"IG", Marginal::lognormal(std::log(0.3), 0.60), {{2, 0.30}, {3, 0.20}}},
        {"N", Marginal::lognormal(std::log(4.4), 0.40), {{2, 0.70}, {3, 0.55}, {8, 0.40}}},
        {"B", Marginal::lognormal(std::log(0.03), 0.50), {{2, 0.20}, {4, 0.70}}},
        {"Eo", Marginal::lognormal(std::log(0.15), 0.70), {{2, 0.25}, {3, -0.10}, {5, 0.70}}},
        {"M", Marginal::lognormal(std::log(0.5), 0.35), {{2, 0.45}, {6, 0.60}}},
        {"Ly", Marginal::lognormal(std::log(2.1), 0.40), {{2, 0.50}, {3, -0.50}, {7, 0.40}}},
        {"N%", Marginal::normal(58.0, 10.0), {{2, 0.30}, {3, 0.85}, {8, 0.40}}},
        {"B%", Marginal::lognormal(std::log(0.5), 0.50), {{3, -0.10}, {4, 0.70}}},
        {"Eo%", Marginal::lognormal(std::log(2.0), 0.70), {{3, -0.20}, {5, 0.70}}},
        {"M%", Marginal::normal(7.0, 2.0), {{3, -0.25}, {6, 0.60}}},
        {"Ly%", Marginal::normal(31.0, 9.0), {{2, 0.10}, {3, -0.85}, {7, 0.40}}},
        {"age", Marginal::uniform(18.0, 95.0), {}},
    };
    FeatureModel m;
    const std::size_t p = rows.size();
    m.correlation.assign(p * p, 0.0);
    for (const Row& r : rows) {
        m.names.emplace_back(r.name);
        m.marginals.push_back(r.marginal);
    }
    for (std::size_t i = 0; i < p; ++i) {
        m.correlation[i * p + i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            double sum = 0.0;
            for (const auto& [fi, li] : rows[i].loadings) {
                for (const auto& [fj, lj] : rows[j].loadings) {
                    if (fi == fj) {
                        sum += li * lj;
                    }
                }
            }
            m.correlation[i * p + j] = sum;
            m.correlation[j * p + i] = sum;
        }
    }
    m.validate();
    return m;
}

std::vector<double> FeatureMatrix::column(std::int32_t col) const {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = value(i, col);
    }
    return out;
}

FeatureMatrix generate_features(const FeatureModel& model, std::int64_t n, std::uint64_t seed) {
    model.validate();
    if (n < 0) {
        throw InvalidArgument("generate features: negative sample size");
    }
    const auto p = static_cast<std::size_t>(model.predictors());
    const std::vector<double> chol = cholesky_lower(model.correlation, p);
    FeatureMatrix x;
    x.n = n;
    x.p = static_cast<std::int32_t>(p);
    x.values.resize(static_cast<std::size_t>(n) * p);
    Rng rng(seed);
    std::vector<double> raw(p);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            raw[j] = rng.normal();
        }
        double* row = x.values.data() + static_cast<std::size_t>(i) * p;
        for (std::size_t j = 0; j < p; ++j) {
            double z = 0.0;
            for (std::size_t k = 0; k <= j; ++k) {
                z += chol[j * p + k] * raw[k];
            }
            row[j] = model.marginals[j].transform(z);
        }
    }
    return x;
}

std::vector<TrueCutoff> resolve_effects(const FeatureMatrix& x,
                                        const std::vector<ScenarioEffect>& effects) {
    if (x.n < 1 && !effects.empty()) {
        throw InvalidArgument("resolve effects: empty feature draw");
    }
    std::vector<TrueCutoff> out;
    out.reserve(effects.size());
    for (const ScenarioEffect& e : effects) {
        if (e.predictor < 0 || e.predictor >= x.p) {
            throw InvalidArgument("resolve effects: predictor index out of range");
        }
        if (!(e.percentile > 0.0 && e.percentile < 1.0)) {
            throw InvalidArgument("resolve effects: percentile must lie in (0, 1)");
        }
        std::vector<double> col = x.column(e.predictor);
        std::sort(col.begin(), col.end());
        out.push_back({e.predictor, e.percentile, e.beta, quantile_sorted(col, e.percentile)});
    }
    return out;
}

std::vector<double> effect_offsets(const FeatureMatrix& x,
                                   const std::vector<TrueCutoff>& effects) {
    std::vector<double> eta(static_cast<std::size_t>(x.n), 0.0);
    for (const TrueCutoff& e : effects) {
        if (e.predictor < 0 || e.predictor >= x.p) {
            throw InvalidArgument("effect offsets: predictor index out of range");
        }
        for (std::int64_t i = 0; i < x.n; ++i) {
            if (x.value(i, e.predictor) > e.cutoff) {
                eta[static_cast<std::size_t>(i)] += e.beta;
            }
        }
    }
    return eta;
}

double calibrate_intercept(const FeatureMatrix& x, const std::vector<TrueCutoff>& effects,
                           double target_rate) {
    if (!(target_rate > 0.0 && target_rate < 1.0) || !std::isfinite(target_rate)) {
        throw InvalidArgument("calibrate intercept: target rate must lie in (0, 1)");
    }
    if (x.n < 1) {
        throw InvalidArgument("calibrate intercept: empty feature sample");
    }
    const std::vector<double> offsets = effect_offsets(x, effects);
    const auto rate = [&](double b0) {
        double s = 0.0;
        for (double o : offsets) {
            s += sigmoid(b0 + o);
        }
        return s / static_cast<double>(x.n);
    };
    double lo = -60.0;
    double hi = 60.0;
    // Widen until the bracket straddles the target; only reachable with
    // offsets beyond +-60, i.e. extreme custom effect sizes.
    for (int it = 0; it < 64 && rate(lo) > target_rate; ++it) {
        lo -= 60.0;
    }
    for (int it = 0; it < 64 && rate(hi) < target_rate; ++it) {
        hi += 60.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate(mid);
        if (std::fabs(r - target_rate) <= 1e-7) {
            return mid;
        }
        (r < target_rate ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::int8_t> generate_outcomes(const FeatureMatrix& x,
                                           const std::vector<TrueCutoff>& effects,
                                           double intercept, std::uint64_t seed) {
    if (!std::isfinite(intercept)) {
        throw InvalidArgument("generate outcomes: non-finite intercept");
    }
    const std::vector<double> offsets = effect_offsets(x, effects);
    std::vector<std::int8_t> y(static_cast<std::size_t>(x.n), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.bernoulli(sigmoid(intercept + offsets[i])) ? 1 : 0;
    }
    return y;
}

void ScenarioSpec::validate(const FeatureModel& model) const {
    if (id.empty()) {
        throw InvalidArgument("scenario: empty id");
    }
    if (!(target_rate > 0.0 && target_rate < 1.0) || !std::isfinite(target_rate)) {
        throw InvalidArgument("scenario: target rate must lie in (0, 1)");
    }
    if (n < 0) {
        throw InvalidArgument("scenario: negative sample size");
    }
    if (replications < 1) {
        throw InvalidArgument("scenario: need at least one replication");
    }
    if (!(std::fabs(block_rho) <= 1.0) || !(std::fabs(background_rho) <= 1.0)) {
        throw InvalidArgument("scenario: correlations must lie in [-1, 1]");
    }
    std::vector<bool> seen(static_cast<std::size_t>(model.predictors()), false);
    for (const ScenarioEffect& e : relevant) {
        if (e.predictor < 0 || e.predictor >= model.predictors()) {
            throw InvalidArgument("scenario: relevant predictor index out of range");
        }
        if (seen[static_cast<std::size_t>(e.predictor)]) {
            throw InvalidArgument("scenario: predictor " +
                                  model.names[static_cast<std::size_t>(e.predictor)] +
                                  " listed twice; one effect per predictor");
        }
        seen[static_cast<std::size_t>(e.predictor)] = true;
        if (!(e.percentile > 0.0 && e.percentile < 1.0)) {
            throw InvalidArgument("scenario: cutoff percentile must lie in (0, 1)");
        }
        if (e.beta == 0.0 || !std::isfinite(e.beta)) {
            throw InvalidArgument("scenario: relevant predictors need a nonzero finite effect");
        }
    }
    const bool pair_id = id == "A" || id == "B";
    const bool block_id = id == "C" || id == "D";
    const bool extreme_id = id == "A" || id == "D";
    if (pair_id && relevant.size() != 2) {
        throw InvalidArgument("scenario " + id + ": exactly 2 relevant predictors expected");
    }
    if (block_id && relevant.size() != 5) {
        throw InvalidArgument("scenario " + id + ": exactly 5 relevant predictors expected");
    }
    if (pair_id || block_id) {
        for (const ScenarioEffect& e : relevant) {
            if (extreme_id && !(e.percentile >= 0.95 || e.percentile <= 0.05)) {
                throw InvalidArgument("scenario " + id +
                                      ": true cutoffs must sit in the extreme percentiles "
                                      "(<= 5th or >= 95th)");
            }
            if (!extreme_id && !(e.percentile >= 0.25 && e.percentile <= 0.75)) {
                throw InvalidArgument("scenario " + id +
                                      ": true cutoffs must sit in the central percentiles "
                                      "(25th-75th)");
            }
        }
    }
    if (block_id) {
        if (profile != Profile::block) {
            throw InvalidArgument("scenario " + id + ": needs a correlated relevant block");
        }
        if (!(block_rho >= 0.6)) {
            throw InvalidArgument("scenario " + id +
                                  ": within-block correlation must be at least 0.6");
        }
        if (!(std::fabs(background_rho) <= 0.2)) {
            throw InvalidArgument("scenario " + id +
                                  ": correlation to non-relevant predictors must stay within 0.2");
        }
    }
    if (pair_id) {
        if (profile != Profile::low || !(std::fabs(background_rho) <= 0.2)) {
            throw InvalidArgument("scenario " + id +
                                  ": relevant predictors must be low-correlated (|rho| <= 0.2)");
        }
    }
}

ScenarioSpec ScenarioSpec::builtin(const std::string& id, const FeatureModel& model) {
    std::string key = id;
    if (key.size() == 1 && key[0] >= 'a' && key[0] <= 'z') {
        key[0] = static_cast<char>(key[0] - 'a' + 'A');
    }
    ScenarioSpec s;
    s.id = key;
    const auto need = [&](const char* name) {
        const std::int32_t j = model.index_of(name);
        if (j < 0) {
            throw InvalidArgument("scenario " + key + ": feature model lacks predictor " + name);
        }
        return j;
    };
    // Extreme-cutoff scenarios put positive effects in the upper tail and
    // negative effects in the lower tail, so both tails carry the same
    // information: a small fraction of rows whose event odds differ from the
    // bulk by e^{|beta|}. A negative effect in the upper tail would instead
    // shift 95+% of rows and leave almost nothing to detect. The depths
    // (0.98/0.015 for A, 0.99/0.01 for D) are tuned so detection degrades
    // relative to the central-cutoff scenarios without vanishing; D sits
    // deeper because its within-block correlation otherwise keeps detection
    // saturated.
    if (key == "A" || key == "B") {
        const double hi = key == "A" ? 0.98 : 0.5;
        const double lo = key == "A" ? 0.015 : 0.5;
        s.relevant = {{need("Hg"), hi, 1.5}, {need("Le"), lo, -1.5}};
        s.profile = Profile::low;
    } else if (key == "C" || key == "D") {
        const double hi = key == "D" ? 0.99 : 0.5;
        const double lo = key == "D" ? 0.01 : 0.5;
        s.relevant = {{need("Hg"), hi, 1.5},
                      {need("Ht"), lo, -1.5},
                      {need("Er"), hi, 1.5},
                      {need("MCV"), lo, -1.5},
                      {need("MCHC"), hi, 1.5}};
        s.profile = Profile::block;
    } else if (key == "null") {
        s.relevant.clear();
    } else {
        throw InvalidArgument("unknown scenario id: " + id);
    }
    s.validate(model);
    return s;
}

FeatureModel scenario_model(const FeatureModel& model, const ScenarioSpec& spec) {
    model.validate();
    spec.validate(model);
    FeatureModel m = model;
    const double within =
        spec.profile == ScenarioSpec::Profile::block ? spec.block_rho : spec.background_rho;
    std::vector<bool> rel(static_cast<std::size_t>(model.predictors()), false);
    for (const ScenarioEffect& e : spec.relevant) {
        rel[static_cast<std::size_t>(e.predictor)] = true;
    }
    for (const ScenarioEffect& e : spec.relevant) {
        for (std::int32_t k = 0; k < model.predictors(); ++k) {
            if (k == e.predictor) {
                continue;
            }
            m.set_correlation(e.predictor, k,
                              rel[static_cast<std::size_t>(k)] ? within : spec.background_rho);
        }
    }
    m.validate();
    return m;
}

std::int64_t nearest_column(const CutpointGrid& grid, std::int32_t predictor, double value) {
    if (predictor < 0 || predictor >= grid.predictors()) {
        throw InvalidArgument("nearest column: predictor index out of range");
    }
    const std::vector<double>& cuts = grid.cutpoints[static_cast<std::size_t>(predictor)];
    if (cuts.empty()) {
        throw InvalidArgument("nearest column: predictor has no cutpoints");
    }
    const auto it = std::lower_bound(cuts.begin(), cuts.end(), value);
    std::size_t k;
    if (it == cuts.begin()) {
        k = 0;
    } else if (it == cuts.end()) {
        k = cuts.size() - 1;
    } else {
        k = static_cast<std::size_t>(it - cuts.begin());
        if (value - cuts[k - 1] <= cuts[k] - value) {
            --k;
        }
    }
    return grid.column_offset(predictor) + static_cast<std::int64_t>(k);
}

namespace {

// Cutpoint grids depend only on the drawn features, never the outcomes.
CutpointGrid features_grid(const FeatureMatrix& x, const std::vector<std::string>& names,
                           const GridSpec& spec) {
    CutpointGrid g;
    g.spec = spec;
    g.cutpoints.reserve(static_cast<std::size_t>(x.p));
    for (std::int32_t j = 0; j < x.p; ++j) {
        g.cutpoints.push_back(
            build_cutpoint_grid(x.column(j), spec, names[static_cast<std::size_t>(j)]));
    }
    return g;
}

std::vector<ColumnInfo> grid_columns(const CutpointGrid& grid) {
    std::vector<ColumnInfo> cols;
    cols.reserve(static_cast<std::size_t>(grid.total_cutpoints()));
    for (std::int64_t j = 0; j < grid.predictors(); ++j) {
        const auto& cuts = grid.cutpoints[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            cols.push_back({static_cast<std::int32_t>(j), static_cast<std::int32_t>(k), cuts[k]});
        }
    }
    return cols;
}

bool same_layout(const CutpointGrid& a, const CutpointGrid& b) {
    if (a.predictors() != b.predictors()) {
        return false;
    }
    for (std::size_t j = 0; j < a.cutpoints.size(); ++j) {
        if (a.cutpoints[j].size() != b.cutpoints[j].size()) {
            return false;
        }
    }
    return true;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const FeatureModel& model,
                            const WeightSpec& w, const GridSpec& grid_spec,
                            const StabilityConfig& cfg, std::uint64_t seed) {
    model.validate();
    spec.validate(model);
    cfg.validate();
    grid_spec.validate();
    if (spec.n < 2) {
        throw InvalidArgument("scenario: need at least 2 rows per replication");
    }

    const FeatureModel effective = scenario_model(model, spec);
    const int workers = resolve_workers(cfg.workers);

    ScenarioResult out;
    out.spec = spec;
    out.names = model.names;

    const FeatureMatrix reference =
        generate_features(effective, spec.n, Rng::derive_seed(seed, 0));
    out.grid = features_grid(reference, model.names, grid_spec);
    out.columns = grid_columns(out.grid);
    out.true_cutoffs = resolve_effects(reference, spec.relevant);
    out.intercept = calibrate_intercept(reference, out.true_cutoffs, spec.target_rate);

    const auto replication_count = static_cast<std::size_t>(spec.replications);
    out.replications.assign(replication_count, {});
    parallel_for(replication_count, workers, [&](std::size_t r) {
        ReplicationRecord& rec = out.replications[r];
        try {
            const std::uint64_t stream = static_cast<std::uint64_t>(r) * 3;
            const std::uint64_t outcome_seed = Rng::derive_seed(seed, stream + 1);
            const std::uint64_t feature_seed = Rng::derive_seed(seed, stream + 2);
            const std::uint64_t stability_seed = Rng::derive_seed(seed, stream + 3);

            const FeatureMatrix* x = &reference;
            const CutpointGrid* grid = &out.grid;
            const std::vector<TrueCutoff>* cutoffs = &out.true_cutoffs;
            double intercept = out.intercept;
            FeatureMatrix local_x;
            CutpointGrid local_grid;
            std::vector<TrueCutoff> local_cutoffs;
            if (spec.fresh_features) {
                local_x = generate_features(effective, spec.n, feature_seed);
                local_grid = features_grid(local_x, model.names, grid_spec);
                if (!same_layout(local_grid, out.grid)) {
                    throw NumericError(
                        "replication grid layout differs from the reference draw");
                }
                local_cutoffs = resolve_effects(local_x, spec.relevant);
                intercept = calibrate_intercept(local_x, local_cutoffs, spec.target_rate);
                x = &local_x;
                grid = &local_grid;
                cutoffs = &local_cutoffs;
            }

            std::vector<std::int8_t> y = generate_outcomes(*x, *cutoffs, intercept, outcome_seed);
            double rate = 0.0;
            for (std::int8_t v : y) {
                rate += v;
            }
            rec.event_rate = y.empty() ? 0.0 : rate / static_cast<double>(y.size());

            Dataset data(x->values, std::move(y), model.names);
            StabilityConfig rep_cfg = cfg;
            rep_cfg.seed = stability_seed;
            rep_cfg.workers = 1;  // parallelism lives at the replication level
            StabilityResult res = stability_selection(data, *grid, w, rep_cfg);
            const std::vector<CutoffRecommendation> recs =
                select_cutoffs(res, *grid, cfg.threshold);

            double nz = 0.0;
            int ok_fits = 0;
            for (std::int32_t c : res.nonzero_counts) {
                if (c >= 0) {
                    nz += c;
                    ++ok_fits;
                }
            }
            rec.mean_nonzeros = ok_fits > 0 ? nz / ok_fits : 0.0;
            rec.probabilities = std::move(res.probabilities);
            rec.detected_selected.resize(cutoffs->size(), 0);
            rec.detected_cutoff.resize(cutoffs->size(), 0);
            for (std::size_t e = 0; e < cutoffs->size(); ++e) {
                const TrueCutoff& tc = (*cutoffs)[e];
                const std::int64_t col = nearest_column(*grid, tc.predictor, tc.cutoff);
                const double grid_cut =
                    grid->cutpoints[static_cast<std::size_t>(tc.predictor)]
                                   [static_cast<std::size_t>(col - grid->column_offset(tc.predictor))];
                rec.detected_selected[e] =
                    rec.probabilities[static_cast<std::size_t>(col)] >= cfg.threshold ? 1 : 0;
                bool covered = false;
                for (const CutoffRecommendation& rc : recs) {
                    if (rc.predictor != tc.predictor) {
                        continue;
                    }
                    if (rc.cutoff == grid_cut ||
                        std::find(rc.absorbed.begin(), rc.absorbed.end(), grid_cut) !=
                            rc.absorbed.end()) {
                        covered = true;
                        break;
                    }
                }
                rec.detected_cutoff[e] = covered ? 1 : 0;
            }
            rec.ok = true;
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    });

    const std::size_t columns = static_cast<std::size_t>(out.grid.total_cutpoints());
    out.mean_probability.assign(columns, 0.0);
    out.detection_selected.assign(spec.relevant.size(), 0.0);
    out.detection_cutoff.assign(spec.relevant.size(), 0.0);
    int ok = 0;
    std::string first_error;
    for (const ReplicationRecord& rec : out.replications) {
        if (!rec.ok) {
            ++out.failed;
            if (first_error.empty()) {
                first_error = rec.error;
            }
            continue;
        }
        ++ok;
        out.mean_event_rate += rec.event_rate;
        for (std::size_t c = 0; c < columns; ++c) {
            out.mean_probability[c] += rec.probabilities[c];
        }
        for (std::size_t e = 0; e < spec.relevant.size(); ++e) {
            out.detection_selected[e] += rec.detected_selected[e];
            out.detection_cutoff[e] += rec.detected_cutoff[e];
        }
    }
    if (out.failed > 0) {
        if (10 * out.failed > spec.replications) {
            throw NumericError("scenario " + spec.id + ": " + std::to_string(out.failed) +
                               " of " + std::to_string(spec.replications) +
                               " replications failed (first error: " + first_error + ")");
        }
        out.warnings.push_back("scenario " + spec.id + ": " + std::to_string(out.failed) +
                               " of " + std::to_string(spec.replications) +
                               " replications failed and were excluded (first error: " +
                               first_error + ")");
    }
    out.mean_event_rate /= ok;
    for (double& v : out.mean_probability) {
        v /= ok;
    }
    for (std::size_t e = 0; e < spec.relevant.size(); ++e) {
        out.detection_selected[e] /= ok;
        out.detection_cutoff[e] /= ok;
    }
    return out;
}

}  // namespace cutsel
