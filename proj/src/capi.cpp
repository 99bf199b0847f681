// C ABI wrapper around the core library: opaque handles, status codes, and
// JSON-configured entry points for the fit / stability / simulate pipelines.

#include "cutsel/cutsel.h"

#include <cstdint>
#include <ctime>
#include <exception>
#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "design.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "simulate.hpp"
#include "solver.hpp"
#include "stability.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

struct cutsel_dataset {
    cutsel::Dataset data;
    std::int64_t dropped = 0;
};

struct cutsel_result {
    std::string report_json;
};

namespace {

thread_local std::string t_last_error;

cutsel_status fail(cutsel_status code, std::string message) {
    t_last_error = std::move(message);
    return code;
}

cutsel_status status_of(const cutsel::Error& e) {
    switch (e.kind()) {
        case cutsel::ErrorKind::invalid_argument: return CUTSEL_ERROR_INVALID_ARGUMENT;
        case cutsel::ErrorKind::data: return CUTSEL_ERROR_DATA;
        case cutsel::ErrorKind::io: return CUTSEL_ERROR_IO;
        case cutsel::ErrorKind::numeric: return CUTSEL_ERROR_NUMERIC;
    }
    return CUTSEL_ERROR_INTERNAL;
}

template <typename Fn>
cutsel_status guarded(Fn&& fn) {
    try {
        fn();
        return CUTSEL_OK;
    } catch (const cutsel::Error& e) {
        return fail(status_of(e), e.what());
    } catch (const std::exception& e) {
        return fail(CUTSEL_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(CUTSEL_ERROR_INTERNAL, "unknown failure");
    }
}

std::string now_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// JSON configuration helpers. Every lookup is typed and every object rejects
// keys it does not know, so misspelled settings fail loudly instead of
// silently running with defaults.

json parse_json_text(const char* text, const std::string& what) {
    if (text == nullptr || *text == '\0') return json::object();
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) {
        throw cutsel::InvalidArgument(what + " is not valid JSON");
    }
    if (!parsed.is_object() && !parsed.is_string()) {
        throw cutsel::InvalidArgument(what + " must be a JSON object");
    }
    return parsed;
}

std::string joined(std::initializer_list<const char*> names) {
    std::string out;
    for (const char* name : names) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (item.key() == name) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw cutsel::InvalidArgument("config: unrecognized key \"" + item.key() +
                                          "\" in " + where + " (allowed: " + joined(allowed) +
                                          ")");
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw cutsel::InvalidArgument("config: " + where + " must be a number");
    return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw cutsel::InvalidArgument("config: " + where + " must be an integer");
    }
    return v.get<std::int64_t>();
}

bool as_boolean(const json& v, const std::string& where) {
    if (!v.is_boolean()) throw cutsel::InvalidArgument("config: " + where + " must be a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw cutsel::InvalidArgument("config: " + where + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_number_array(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw cutsel::InvalidArgument("config: " + where + " must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& item : v) out.push_back(as_number(item, where + " entries"));
    return out;
}

// ---------------------------------------------------------------------------
// Sections shared by every mode.

struct CommonConfig {
    std::uint64_t seed = 0;
    int workers = 0;
    std::string timestamp;  // empty: stamp with the current UTC time
    cutsel::GridSpec grid = cutsel::GridSpec::vigintiles();
    cutsel::WeightSpec weights = cutsel::WeightSpec::balanced();
    double tolerance = 1e-7;
};

cutsel::GridSpec parse_grid(const json& obj) {
    reject_unknown(obj, "grid", {"strategy", "levels", "count", "cutpoints"});
    std::string strategy = "percentile";
    if (const json* v = find(obj, "strategy")) strategy = as_string(*v, "grid.strategy");
    if (strategy == "percentile") {
        reject_unknown(obj, "grid (percentile strategy)", {"strategy", "levels"});
        if (const json* v = find(obj, "levels")) {
            return cutsel::GridSpec::percentiles(as_number_array(*v, "grid.levels"));
        }
        return cutsel::GridSpec::vigintiles();
    }
    if (strategy == "uniform") {
        reject_unknown(obj, "grid (uniform strategy)", {"strategy", "count"});
        int count = 19;
        if (const json* v = find(obj, "count")) {
            count = static_cast<int>(as_integer(*v, "grid.count"));
        }
        return cutsel::GridSpec::uniform(count);
    }
    if (strategy == "explicit") {
        reject_unknown(obj, "grid (explicit strategy)", {"strategy", "cutpoints"});
        const json* v = find(obj, "cutpoints");
        if (v == nullptr || !v->is_object()) {
            throw cutsel::InvalidArgument(
                "config: grid.cutpoints must be an object of per-predictor arrays");
        }
        std::map<std::string, std::vector<double>> values;
        for (const auto& item : v->items()) {
            values[item.key()] = as_number_array(item.value(), "grid.cutpoints." + item.key());
        }
        return cutsel::GridSpec::explicit_values_for(std::move(values));
    }
    throw cutsel::InvalidArgument("config: grid.strategy must be \"percentile\", \"uniform\" or "
                                  "\"explicit\", got \"" +
                                  strategy + "\"");
}

cutsel::WeightSpec parse_weights(const json& obj) {
    reject_unknown(obj, "weights", {"rule", "omega"});
    std::string rule = "balanced";
    if (const json* v = find(obj, "rule")) rule = as_string(*v, "weights.rule");
    if (rule == "balanced") {
        if (find(obj, "omega") != nullptr) {
            throw cutsel::InvalidArgument(
                "config: weights.omega only applies to the \"explicit\" rule");
        }
        return cutsel::WeightSpec::balanced();
    }
    if (rule == "explicit") {
        const json* v = find(obj, "omega");
        if (v == nullptr) {
            throw cutsel::InvalidArgument("config: weights.rule \"explicit\" requires weights.omega");
        }
        double omega = as_number(*v, "weights.omega");
        if (!(omega >= 1.0)) {
            throw cutsel::InvalidArgument("config: weights.omega must be >= 1");
        }
        return cutsel::WeightSpec::explicit_value(omega);
    }
    throw cutsel::InvalidArgument("config: weights.rule must be \"balanced\" or \"explicit\", got \"" +
                                  rule + "\"");
}

CommonConfig parse_common(const json& cfg) {
    CommonConfig out;
    if (const json* v = find(cfg, "seed")) {
        std::int64_t seed = as_integer(*v, "seed");
        if (seed < 0) throw cutsel::InvalidArgument("config: seed must be non-negative");
        out.seed = static_cast<std::uint64_t>(seed);
    }
    if (const json* v = find(cfg, "workers")) {
        std::int64_t workers = as_integer(*v, "workers");
        if (workers < 0) throw cutsel::InvalidArgument("config: workers must be >= 0");
        out.workers = static_cast<int>(workers);
    }
    if (const json* v = find(cfg, "timestamp")) out.timestamp = as_string(*v, "timestamp");
    if (const json* v = find(cfg, "grid")) {
        if (!v->is_object()) throw cutsel::InvalidArgument("config: grid must be an object");
        out.grid = parse_grid(*v);
    }
    if (const json* v = find(cfg, "weights")) {
        if (!v->is_object()) throw cutsel::InvalidArgument("config: weights must be an object");
        out.weights = parse_weights(*v);
    }
    if (const json* v = find(cfg, "tolerance")) {
        out.tolerance = as_number(*v, "tolerance");
        if (!(out.tolerance > 0.0)) {
            throw cutsel::InvalidArgument("config: tolerance must be positive");
        }
    }
    out.grid.validate();
    return out;
}

cutsel::PathSpec parse_path(const json& obj, const std::string& where) {
    reject_unknown(obj, where, {"count", "min_ratio"});
    cutsel::PathSpec path;
    if (const json* v = find(obj, "count")) {
        path.count = static_cast<int>(as_integer(*v, where + ".count"));
        if (path.count < 1) {
            throw cutsel::InvalidArgument("config: " + where + ".count must be >= 1");
        }
    }
    if (const json* v = find(obj, "min_ratio")) {
        path.min_ratio = as_number(*v, where + ".min_ratio");
        if (!(path.min_ratio > 0.0 && path.min_ratio < 1.0)) {
            throw cutsel::InvalidArgument("config: " + where + ".min_ratio must be in (0, 1)");
        }
    }
    return path;
}

// The penalty rule of a plain fit: a full path (default), one fixed lambda,
// or one lambda at a fraction of lambda_max.
struct FitLambda {
    enum class Kind { path, fixed, fraction };
    Kind kind = Kind::path;
    double value = 0.0;
    double fraction = 0.0;
};

FitLambda parse_fit_lambda(const json& obj) {
    reject_unknown(obj, "lambda", {"rule", "value", "fraction"});
    FitLambda out;
    std::string rule = "path";
    if (const json* v = find(obj, "rule")) rule = as_string(*v, "lambda.rule");
    if (rule == "path") {
        reject_unknown(obj, "lambda (path rule)", {"rule"});
        return out;
    }
    if (rule == "fixed") {
        reject_unknown(obj, "lambda (fixed rule)", {"rule", "value"});
        const json* v = find(obj, "value");
        if (v == nullptr) {
            throw cutsel::InvalidArgument("config: lambda.rule \"fixed\" requires lambda.value");
        }
        out.kind = FitLambda::Kind::fixed;
        out.value = as_number(*v, "lambda.value");
        if (!(out.value >= 0.0)) {
            throw cutsel::InvalidArgument("config: lambda.value must be >= 0");
        }
        return out;
    }
    if (rule == "fraction_of_max") {
        reject_unknown(obj, "lambda (fraction_of_max rule)", {"rule", "fraction"});
        out.kind = FitLambda::Kind::fraction;
        out.fraction = cutsel::StabilityConfig{}.lambda_fraction;
        if (const json* v = find(obj, "fraction")) {
            out.fraction = as_number(*v, "lambda.fraction");
        }
        if (!(out.fraction > 0.0 && out.fraction <= 1.0)) {
            throw cutsel::InvalidArgument("config: lambda.fraction must be in (0, 1]");
        }
        return out;
    }
    throw cutsel::InvalidArgument(
        "config: lambda.rule must be \"path\", \"fixed\" or \"fraction_of_max\", got \"" + rule +
        "\"");
}

// Applies the "lambda" and "stability" sections onto a default-initialized
// StabilityConfig; bounds are then checked by StabilityConfig::validate.
cutsel::StabilityConfig parse_stability(const json& cfg, const CommonConfig& common) {
    cutsel::StabilityConfig out;
    out.seed = common.seed;
    out.workers = common.workers;
    out.fit.tolerance = common.tolerance;
    if (const json* sect = find(cfg, "stability")) {
        if (!sect->is_object()) {
            throw cutsel::InvalidArgument("config: stability must be an object");
        }
        reject_unknown(*sect, "stability", {"subsamples", "fraction", "threshold"});
        if (const json* v = find(*sect, "subsamples")) {
            out.subsamples = static_cast<int>(as_integer(*v, "stability.subsamples"));
        }
        if (const json* v = find(*sect, "fraction")) {
            out.fraction = as_number(*v, "stability.fraction");
        }
        if (const json* v = find(*sect, "threshold")) {
            out.threshold = as_number(*v, "stability.threshold");
        }
    }
    if (const json* sect = find(cfg, "lambda")) {
        if (!sect->is_object()) throw cutsel::InvalidArgument("config: lambda must be an object");
        reject_unknown(*sect, "lambda", {"rule", "fraction", "value", "gamma", "path"});
        std::string rule = "fraction_of_max";
        if (const json* v = find(*sect, "rule")) rule = as_string(*v, "lambda.rule");
        if (rule == "fraction_of_max") {
            reject_unknown(*sect, "lambda (fraction_of_max rule)", {"rule", "fraction"});
            out.lambda_rule = cutsel::StabilityConfig::LambdaRule::fraction_of_max;
            if (const json* v = find(*sect, "fraction")) {
                out.lambda_fraction = as_number(*v, "lambda.fraction");
            }
        } else if (rule == "fixed") {
            reject_unknown(*sect, "lambda (fixed rule)", {"rule", "value"});
            out.lambda_rule = cutsel::StabilityConfig::LambdaRule::fixed;
            const json* v = find(*sect, "value");
            if (v == nullptr) {
                throw cutsel::InvalidArgument("config: lambda.rule \"fixed\" requires lambda.value");
            }
            out.lambda_value = as_number(*v, "lambda.value");
        } else if (rule == "ebic") {
            reject_unknown(*sect, "lambda (ebic rule)", {"rule", "gamma", "path"});
            out.lambda_rule = cutsel::StabilityConfig::LambdaRule::ebic;
            if (const json* v = find(*sect, "gamma")) {
                out.ebic_gamma = as_number(*v, "lambda.gamma");
                if (out.ebic_gamma < 0.0) {
                    throw cutsel::InvalidArgument("config: lambda.gamma must be >= 0");
                }
            }
            if (const json* v = find(*sect, "path")) {
                if (!v->is_object()) {
                    throw cutsel::InvalidArgument("config: lambda.path must be an object");
                }
                out.ebic_path = parse_path(*v, "lambda.path");
            }
        } else {
            throw cutsel::InvalidArgument(
                "config: lambda.rule must be \"fraction_of_max\", \"fixed\" or \"ebic\", got \"" +
                rule + "\"");
        }
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Simulation sections.

cutsel::Marginal parse_marginal(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw cutsel::InvalidArgument("config: " + where + " must be an object");
    const json* kind_v = find(obj, "kind");
    if (kind_v == nullptr) {
        throw cutsel::InvalidArgument("config: " + where + " requires a \"kind\"");
    }
    std::string kind = as_string(*kind_v, where + ".kind");
    auto number = [&](const char* key) {
        const json* v = find(obj, key);
        if (v == nullptr) {
            throw cutsel::InvalidArgument("config: " + where + " (" + kind + ") requires \"" +
                                          key + "\"");
        }
        return as_number(*v, where + "." + key);
    };
    if (kind == "normal") {
        reject_unknown(obj, where, {"kind", "mean", "sd"});
        return cutsel::Marginal::normal(number("mean"), number("sd"));
    }
    if (kind == "lognormal") {
        reject_unknown(obj, where, {"kind", "log_mean", "log_sd"});
        return cutsel::Marginal::lognormal(number("log_mean"), number("log_sd"));
    }
    if (kind == "uniform") {
        reject_unknown(obj, where, {"kind", "low", "high"});
        return cutsel::Marginal::uniform(number("low"), number("high"));
    }
    if (kind == "quantile_table") {
        reject_unknown(obj, where, {"kind", "values"});
        const json* v = find(obj, "values");
        if (v == nullptr) {
            throw cutsel::InvalidArgument("config: " + where +
                                          " (quantile_table) requires \"values\"");
        }
        return cutsel::Marginal::quantile_table(as_number_array(*v, where + ".values"));
    }
    throw cutsel::InvalidArgument("config: " + where +
                                  ".kind must be \"normal\", \"lognormal\", \"uniform\" or "
                                  "\"quantile_table\", got \"" +
                                  kind + "\"");
}

cutsel::FeatureModel parse_model(const json& cfg) {
    const json* v = find(cfg, "model");
    if (v == nullptr) return cutsel::FeatureModel::default_cbc();
    if (v->is_string()) {
        std::string name = v->get<std::string>();
        if (name == "cbc") return cutsel::FeatureModel::default_cbc();
        throw cutsel::InvalidArgument("config: unknown model preset \"" + name +
                                      "\" (available: cbc)");
    }
    if (!v->is_object()) {
        throw cutsel::InvalidArgument("config: model must be \"cbc\" or an object");
    }
    reject_unknown(*v, "model", {"predictors", "correlation"});
    const json* preds = find(*v, "predictors");
    if (preds == nullptr || !preds->is_array() || preds->empty()) {
        throw cutsel::InvalidArgument(
            "config: model.predictors must be a non-empty array of {name, marginal}");
    }
    std::vector<std::string> names;
    std::vector<cutsel::Marginal> marginals;
    for (std::size_t i = 0; i < preds->size(); ++i) {
        const json& entry = (*preds)[i];
        std::string where = "model.predictors[" + std::to_string(i) + "]";
        if (!entry.is_object()) {
            throw cutsel::InvalidArgument("config: " + where + " must be an object");
        }
        reject_unknown(entry, where, {"name", "marginal"});
        const json* name_v = find(entry, "name");
        if (name_v == nullptr) {
            throw cutsel::InvalidArgument("config: " + where + " requires a \"name\"");
        }
        names.push_back(as_string(*name_v, where + ".name"));
        const json* marg_v = find(entry, "marginal");
        marginals.push_back(marg_v == nullptr ? cutsel::Marginal::normal(0.0, 1.0)
                                              : parse_marginal(*marg_v, where + ".marginal"));
    }
    cutsel::FeatureModel model =
        cutsel::FeatureModel::independent(std::move(names), std::move(marginals));
    if (const json* corr = find(*v, "correlation")) {
        if (!corr->is_array() || corr->size() != static_cast<std::size_t>(model.predictors())) {
            throw cutsel::InvalidArgument(
                "config: model.correlation must be a p x p array of rows");
        }
        std::vector<double> flat;
        for (std::size_t i = 0; i < corr->size(); ++i) {
            std::vector<double> row =
                as_number_array((*corr)[i], "model.correlation[" + std::to_string(i) + "]");
            if (row.size() != corr->size()) {
                throw cutsel::InvalidArgument(
                    "config: model.correlation rows must all have length p");
            }
            flat.insert(flat.end(), row.begin(), row.end());
        }
        model.correlation = std::move(flat);
    }
    model.validate();
    return model;
}

cutsel::ScenarioSpec parse_scenario(const json& cfg, const cutsel::FeatureModel& model) {
    const json* v = find(cfg, "scenario");
    if (v == nullptr) {
        throw cutsel::InvalidArgument(
            "config: simulate requires a \"scenario\" (\"A\", \"B\", \"C\", \"D\", \"null\" or an "
            "object)");
    }
    if (v->is_string()) {
        return cutsel::ScenarioSpec::builtin(v->get<std::string>(), model);
    }
    if (!v->is_object()) {
        throw cutsel::InvalidArgument("config: scenario must be a string id or an object");
    }
    reject_unknown(*v, "scenario",
                   {"id", "n", "replications", "target_rate", "fresh_features", "relevant",
                    "profile", "block_rho", "background_rho"});
    cutsel::ScenarioSpec spec;
    bool from_builtin = false;
    if (const json* id_v = find(*v, "id")) {
        std::string id = as_string(*id_v, "scenario.id");
        if (id != "custom" && find(*v, "relevant") == nullptr) {
            spec = cutsel::ScenarioSpec::builtin(id, model);
            from_builtin = true;
        } else {
            spec.id = id;
        }
    }
    if (const json* n_v = find(*v, "n")) spec.n = as_integer(*n_v, "scenario.n");
    if (const json* r_v = find(*v, "replications")) {
        spec.replications = static_cast<int>(as_integer(*r_v, "scenario.replications"));
    }
    if (const json* t_v = find(*v, "target_rate")) {
        spec.target_rate = as_number(*t_v, "scenario.target_rate");
    }
    if (const json* f_v = find(*v, "fresh_features")) {
        spec.fresh_features = as_boolean(*f_v, "scenario.fresh_features");
    }
    if (const json* p_v = find(*v, "profile")) {
        std::string profile = as_string(*p_v, "scenario.profile");
        if (profile == "low") {
            spec.profile = cutsel::ScenarioSpec::Profile::low;
        } else if (profile == "block") {
            spec.profile = cutsel::ScenarioSpec::Profile::block;
        } else {
            throw cutsel::InvalidArgument(
                "config: scenario.profile must be \"low\" or \"block\", got \"" + profile + "\"");
        }
    }
    if (const json* b_v = find(*v, "block_rho")) {
        spec.block_rho = as_number(*b_v, "scenario.block_rho");
    }
    if (const json* b_v = find(*v, "background_rho")) {
        spec.background_rho = as_number(*b_v, "scenario.background_rho");
    }
    if (const json* rel_v = find(*v, "relevant")) {
        if (from_builtin) {
            throw cutsel::InvalidArgument(
                "config: scenario.relevant cannot be combined with a builtin id");
        }
        if (!rel_v->is_array()) {
            throw cutsel::InvalidArgument(
                "config: scenario.relevant must be an array of {predictor, percentile, beta}");
        }
        for (std::size_t i = 0; i < rel_v->size(); ++i) {
            const json& entry = (*rel_v)[i];
            std::string where = "scenario.relevant[" + std::to_string(i) + "]";
            if (!entry.is_object()) {
                throw cutsel::InvalidArgument("config: " + where + " must be an object");
            }
            reject_unknown(entry, where, {"predictor", "percentile", "beta"});
            const json* pred_v = find(entry, "predictor");
            if (pred_v == nullptr) {
                throw cutsel::InvalidArgument("config: " + where + " requires \"predictor\"");
            }
            cutsel::ScenarioEffect effect;
            if (pred_v->is_string()) {
                std::string name = pred_v->get<std::string>();
                effect.predictor = model.index_of(name);
                if (effect.predictor < 0) {
                    throw cutsel::InvalidArgument("config: " + where + " names unknown predictor \"" +
                                                  name + "\"");
                }
            } else {
                effect.predictor = static_cast<std::int32_t>(
                    as_integer(*pred_v, where + ".predictor"));
            }
            if (const json* pct_v = find(entry, "percentile")) {
                effect.percentile = as_number(*pct_v, where + ".percentile");
            }
            const json* beta_v = find(entry, "beta");
            if (beta_v == nullptr) {
                throw cutsel::InvalidArgument("config: " + where + " requires \"beta\"");
            }
            effect.beta = as_number(*beta_v, where + ".beta");
            spec.relevant.push_back(effect);
        }
    }
    spec.validate(model);
    return spec;
}

// ---------------------------------------------------------------------------
// Resolved-configuration echo: every default materialized, so a run can be
// reproduced from its own report.

ordered_json grid_to_json(const cutsel::GridSpec& grid) {
    ordered_json out;
    switch (grid.kind) {
        case cutsel::GridSpec::Kind::percentile:
            out["strategy"] = "percentile";
            out["levels"] = grid.levels;
            break;
        case cutsel::GridSpec::Kind::uniform:
            out["strategy"] = "uniform";
            out["count"] = grid.count;
            break;
        case cutsel::GridSpec::Kind::explicit_values:
            out["strategy"] = "explicit";
            out["cutpoints"] = grid.values;
            break;
    }
    return out;
}

ordered_json weights_to_json(const cutsel::WeightSpec& w) {
    ordered_json out;
    if (w.rule == cutsel::WeightSpec::Rule::balanced) {
        out["rule"] = "balanced";
    } else {
        out["rule"] = "explicit";
        out["omega"] = w.omega;
    }
    return out;
}

ordered_json stability_to_json(const cutsel::StabilityConfig& cfg) {
    ordered_json lambda;
    switch (cfg.lambda_rule) {
        case cutsel::StabilityConfig::LambdaRule::fraction_of_max:
            lambda["rule"] = "fraction_of_max";
            lambda["fraction"] = cfg.lambda_fraction;
            break;
        case cutsel::StabilityConfig::LambdaRule::fixed:
            lambda["rule"] = "fixed";
            lambda["value"] = cfg.lambda_value;
            break;
        case cutsel::StabilityConfig::LambdaRule::ebic:
            lambda["rule"] = "ebic";
            lambda["gamma"] = cfg.ebic_gamma;
            lambda["path"] = {{"count", cfg.ebic_path.count},
                              {"min_ratio", cfg.ebic_path.min_ratio}};
            break;
    }
    ordered_json out;
    out["lambda"] = std::move(lambda);
    out["stability"] = {{"subsamples", cfg.subsamples},
                        {"fraction", cfg.fraction},
                        {"threshold", cfg.threshold}};
    return out;
}

ordered_json common_to_json(const CommonConfig& common, const char* mode) {
    ordered_json out;
    out["mode"] = mode;
    out["seed"] = common.seed;
    out["workers"] = common.workers;
    out["grid"] = grid_to_json(common.grid);
    out["weights"] = weights_to_json(common.weights);
    out["tolerance"] = common.tolerance;
    return out;
}

ordered_json scenario_to_json(const cutsel::ScenarioSpec& spec,
                              const cutsel::FeatureModel& model) {
    ordered_json relevant = ordered_json::array();
    for (const auto& effect : spec.relevant) {
        relevant.push_back({{"predictor", model.names[static_cast<std::size_t>(effect.predictor)]},
                            {"percentile", effect.percentile},
                            {"beta", effect.beta}});
    }
    ordered_json out;
    out["id"] = spec.id;
    out["n"] = spec.n;
    out["replications"] = spec.replications;
    out["target_rate"] = spec.target_rate;
    out["profile"] = spec.profile == cutsel::ScenarioSpec::Profile::low ? "low" : "block";
    out["block_rho"] = spec.block_rho;
    out["background_rho"] = spec.background_rho;
    out["fresh_features"] = spec.fresh_features;
    out["relevant"] = std::move(relevant);
    return out;
}

// ---------------------------------------------------------------------------
// Report assembly shared by the three modes.

void finish(cutsel::Report& report, const CommonConfig& common, const char* out_dir,
            cutsel_result** out) {
    report.seed = common.seed;
    report.timestamp = common.timestamp.empty() ? now_utc() : common.timestamp;
    if (out_dir != nullptr && *out_dir != '\0') {
        cutsel::write_report(report, out_dir);
    }
    if (out != nullptr) {
        auto result = std::make_unique<cutsel_result>();
        result->report_json = cutsel::report_to_json(report).dump(2);
        *out = result.release();
    }
}

void run_fit_impl(const cutsel_dataset& handle, const char* config_json, const char* out_dir,
                  cutsel_result** out) {
    json cfg = parse_json_text(config_json, "config");
    reject_unknown(cfg, "config",
                   {"seed", "workers", "timestamp", "grid", "weights", "tolerance", "lambda",
                    "path"});
    CommonConfig common = parse_common(cfg);
    FitLambda lambda;
    if (const json* v = find(cfg, "lambda")) {
        if (!v->is_object()) throw cutsel::InvalidArgument("config: lambda must be an object");
        lambda = parse_fit_lambda(*v);
    }
    cutsel::PathSpec path;
    if (const json* v = find(cfg, "path")) {
        if (!v->is_object()) throw cutsel::InvalidArgument("config: path must be an object");
        path = parse_path(*v, "path");
    }

    const cutsel::Dataset& data = handle.data;
    data.require_both_classes();
    cutsel::CutpointGrid grids = cutsel::build_grids(data, common.grid);
    cutsel::DesignMatrix design = cutsel::DesignMatrix::expand(data, grids);
    cutsel::FitOptions opts;
    opts.tolerance = common.tolerance;

    cutsel::Report report;
    report.mode = "fit";
    report.predictor_names = data.names();
    report.grid = grids;

    ordered_json resolved = common_to_json(common, "fit");
    cutsel::FitResult selected;
    if (lambda.kind == FitLambda::Kind::path) {
        cutsel::LassoPath lasso = cutsel::fit_path(design, data.outcome(), common.weights, path,
                                                   opts);
        std::size_t best = cutsel::ebic_best_index(design, data.outcome(), common.weights, lasso);
        selected = lasso.fits[best];
        ordered_json points = ordered_json::array();
        for (std::size_t i = 0; i < lasso.lambdas.size(); ++i) {
            const cutsel::FitResult& fit = lasso.fits[i];
            points.push_back({{"lambda", lasso.lambdas[i]},
                              {"intercept", fit.intercept},
                              {"nonzeros", fit.nonzeros()},
                              {"objective", fit.objective},
                              {"kkt_violation", fit.kkt_violation},
                              {"ebic", cutsel::ebic(design, data.outcome(), common.weights, fit)}});
        }
        report.extra["path"] = std::move(points);
        report.extra["selected_index"] = best;
        report.notes.push_back("lambda path of " + std::to_string(lasso.lambdas.size()) +
                               " points from lambda_max; step functions reported at the "
                               "EBIC-selected point");
        resolved["lambda"] = {{"rule", "path"}};
        resolved["path"] = {{"count", path.count}, {"min_ratio", path.min_ratio}};
    } else {
        double value = lambda.value;
        ordered_json lambda_echo;
        if (lambda.kind == FitLambda::Kind::fraction) {
            value = lambda.fraction *
                    cutsel::lambda_max(design, data.outcome(), common.weights);
            lambda_echo = {{"rule", "fraction_of_max"}, {"fraction", lambda.fraction}};
        } else {
            lambda_echo = {{"rule", "fixed"}, {"value", lambda.value}};
        }
        selected = cutsel::fit(design, data.outcome(), common.weights, value, opts);
        resolved["lambda"] = std::move(lambda_echo);
    }
    report.extra["selected_fit"] = {{"lambda", selected.lambda},
                                    {"intercept", selected.intercept},
                                    {"nonzeros", selected.nonzeros()},
                                    {"objective", selected.objective},
                                    {"kkt_violation", selected.kkt_violation},
                                    {"iterations", selected.iterations}};
    report.extra["dataset"] = {{"rows", data.rows()},
                               {"predictors", data.cols()},
                               {"dropped_rows", handle.dropped}};
    for (std::int64_t j = 0; j < grids.predictors(); ++j) {
        report.step_functions.push_back(
            cutsel::fitted_function(selected.coefficients, grids, j));
    }
    report.config = std::move(resolved);
    finish(report, common, out_dir, out);
}

void run_stability_impl(const cutsel_dataset& handle, const char* config_json,
                        const char* out_dir, cutsel_result** out) {
    json cfg = parse_json_text(config_json, "config");
    reject_unknown(cfg, "config",
                   {"seed", "workers", "timestamp", "grid", "weights", "tolerance", "lambda",
                    "stability"});
    CommonConfig common = parse_common(cfg);
    cutsel::StabilityConfig stab = parse_stability(cfg, common);

    const cutsel::Dataset& data = handle.data;
    cutsel::CutpointGrid grids = cutsel::build_grids(data, common.grid);
    cutsel::StabilityResult res = cutsel::stability_selection(data, grids, common.weights, stab);

    cutsel::Report report;
    report.mode = "stability";
    report.predictor_names = data.names();
    report.grid = grids;
    report.threshold = stab.threshold;
    report.cutoffs = cutsel::select_cutoffs(res, grids, stab.threshold);
    report.stability = std::move(res);
    report.extra["dataset"] = {{"rows", data.rows()},
                               {"predictors", data.cols()},
                               {"dropped_rows", handle.dropped}};

    ordered_json resolved = common_to_json(common, "stability");
    ordered_json stab_echo = stability_to_json(stab);
    resolved["lambda"] = std::move(stab_echo["lambda"]);
    resolved["stability"] = std::move(stab_echo["stability"]);
    report.config = std::move(resolved);
    finish(report, common, out_dir, out);
}

void run_simulate_impl(const char* config_json, const char* out_dir, cutsel_result** out) {
    json cfg = parse_json_text(config_json, "config");
    reject_unknown(cfg, "config",
                   {"seed", "workers", "timestamp", "grid", "weights", "tolerance", "lambda",
                    "stability", "scenario", "model"});
    CommonConfig common = parse_common(cfg);
    cutsel::StabilityConfig stab = parse_stability(cfg, common);
    cutsel::FeatureModel model = parse_model(cfg);
    cutsel::ScenarioSpec spec = parse_scenario(cfg, model);

    cutsel::ScenarioResult res =
        cutsel::run_scenario(spec, model, common.weights, common.grid, stab, common.seed);

    cutsel::Report report;
    report.mode = "simulate";
    report.predictor_names = res.names;
    report.grid = res.grid;
    report.threshold = stab.threshold;

    // The probability table reports the mean selection probability per column
    // over successful replications, which is also what the cutoff table and
    // the plot summarize.
    cutsel::StabilityResult mean_res;
    mean_res.probabilities = res.mean_probability;
    mean_res.columns = res.columns;
    mean_res.subsamples = stab.subsamples;
    mean_res.failed = 0;
    mean_res.omega = common.weights.rule == cutsel::WeightSpec::Rule::balanced
                         ? (res.mean_event_rate > 0.0
                                ? (1.0 - res.mean_event_rate) / res.mean_event_rate
                                : 1.0)
                         : common.weights.omega;
    mean_res.warnings = res.warnings;
    report.cutoffs = cutsel::select_cutoffs(mean_res, res.grid, stab.threshold);
    report.stability = std::move(mean_res);
    report.notes.push_back(
        "probabilities are means over replications; omega echoes the balanced rule at the mean "
        "simulated event rate");

    ordered_json detections = ordered_json::array();
    for (std::size_t e = 0; e < res.true_cutoffs.size(); ++e) {
        const cutsel::TrueCutoff& tc = res.true_cutoffs[e];
        detections.push_back(
            {{"predictor", res.names[static_cast<std::size_t>(tc.predictor)]},
             {"percentile", tc.percentile},
             {"beta", tc.beta},
             {"cutoff", tc.cutoff},
             {"selected_rate", res.detection_selected[e]},
             {"cutoff_rate", res.detection_cutoff[e]}});
    }
    report.extra["scenario"] = {{"id", spec.id},
                                {"replications_failed", res.failed},
                                {"mean_event_rate", res.mean_event_rate},
                                {"calibrated_intercept", res.intercept},
                                {"true_cutoffs", std::move(detections)}};

    ordered_json resolved = common_to_json(common, "simulate");
    ordered_json stab_echo = stability_to_json(stab);
    resolved["lambda"] = std::move(stab_echo["lambda"]);
    resolved["stability"] = std::move(stab_echo["stability"]);
    resolved["scenario"] = scenario_to_json(spec, model);
    resolved["model"] = find(cfg, "model") != nullptr && !find(cfg, "model")->is_string()
                            ? ordered_json("custom")
                            : ordered_json("cbc");
    report.config = std::move(resolved);
    finish(report, common, out_dir, out);
}

}  // namespace

// ---------------------------------------------------------------------------
// Exported C surface.

extern "C" {

const char* cutsel_version(void) { return "0.1.0"; }

const char* cutsel_last_error(void) { return t_last_error.c_str(); }

cutsel_status cutsel_dataset_read_csv(const char* path, const char* schema_json,
                                      cutsel_dataset** out) {
    if (out == nullptr) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT, "cutsel_dataset_read_csv: out is null");
    }
    *out = nullptr;
    if (path == nullptr) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT, "cutsel_dataset_read_csv: path is null");
    }
    return guarded([&] {
        cutsel::CsvSchema schema;
        json parsed = parse_json_text(schema_json, "schema");
        if (parsed.is_string()) {
            std::string preset = parsed.get<std::string>();
            if (preset != "cbc") {
                throw cutsel::InvalidArgument("schema: unknown preset \"" + preset +
                                              "\" (available: cbc)");
            }
            schema = cutsel::CsvSchema::default_cbc();
        } else if (!parsed.empty()) {
            reject_unknown(parsed, "schema",
                           {"preset", "outcome", "predictors", "delimiter", "outcome_values"});
            if (const json* v = find(parsed, "preset")) {
                std::string preset = as_string(*v, "schema.preset");
                if (preset != "cbc") {
                    throw cutsel::InvalidArgument("schema: unknown preset \"" + preset +
                                                  "\" (available: cbc)");
                }
                schema = cutsel::CsvSchema::default_cbc();
            }
            if (const json* v = find(parsed, "outcome")) {
                schema.outcome = as_string(*v, "schema.outcome");
            }
            if (const json* v = find(parsed, "delimiter")) {
                std::string d = as_string(*v, "schema.delimiter");
                if (d.size() != 1) {
                    throw cutsel::InvalidArgument(
                        "schema: delimiter must be a single character");
                }
                schema.delimiter = d[0];
            }
            if (const json* v = find(parsed, "outcome_values")) {
                if (!v->is_object()) {
                    throw cutsel::InvalidArgument(
                        "schema: outcome_values must map text to 0 or 1");
                }
                schema.outcome_values.clear();
                for (const auto& item : v->items()) {
                    std::int64_t mapped = as_integer(item.value(),
                                                     "schema.outcome_values." + item.key());
                    schema.outcome_values[item.key()] = static_cast<int>(mapped);
                }
            }
            if (const json* v = find(parsed, "predictors")) {
                if (!v->is_array()) {
                    throw cutsel::InvalidArgument("schema: predictors must be an array");
                }
                schema.predictors.clear();
                for (const auto& entry : *v) {
                    cutsel::CsvColumn column;
                    if (entry.is_string()) {
                        column.name = entry.get<std::string>();
                    } else if (entry.is_object()) {
                        reject_unknown(entry, "schema.predictors entry", {"name", "kind"});
                        const json* name_v = find(entry, "name");
                        if (name_v == nullptr) {
                            throw cutsel::InvalidArgument(
                                "schema: predictor entries require a \"name\"");
                        }
                        column.name = as_string(*name_v, "schema.predictors name");
                        if (const json* kind_v = find(entry, "kind")) {
                            std::string kind = as_string(*kind_v, "schema.predictors kind");
                            if (kind == "continuous") {
                                column.kind = cutsel::CsvColumn::Kind::continuous;
                            } else if (kind == "binary") {
                                column.kind = cutsel::CsvColumn::Kind::binary;
                            } else {
                                throw cutsel::InvalidArgument(
                                    "schema: predictor kind must be \"continuous\" or "
                                    "\"binary\", got \"" +
                                    kind + "\"");
                            }
                        }
                    } else {
                        throw cutsel::InvalidArgument(
                            "schema: predictors entries must be names or {name, kind}");
                    }
                    schema.predictors.push_back(std::move(column));
                }
            }
        }
        schema.validate();
        cutsel::ReadResult read = cutsel::read_dataset(path, schema);
        auto handle = std::make_unique<cutsel_dataset>();
        handle->data = std::move(read.data);
        handle->dropped = read.dropped;
        *out = handle.release();
    });
}

cutsel_status cutsel_dataset_from_arrays(const double* features, const int32_t* outcome,
                                         int64_t n, int64_t p, const char* const* names,
                                         cutsel_dataset** out) {
    if (out == nullptr) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT, "cutsel_dataset_from_arrays: out is null");
    }
    *out = nullptr;
    if (n < 0 || p <= 0) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT,
                    "cutsel_dataset_from_arrays: need n >= 0 and p >= 1");
    }
    if (n > 0 && (features == nullptr || outcome == nullptr)) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT,
                    "cutsel_dataset_from_arrays: features/outcome are null");
    }
    return guarded([&] {
        std::vector<double> values(features, features + n * p);
        std::vector<std::int8_t> y;
        y.reserve(static_cast<std::size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            if (outcome[i] != 0 && outcome[i] != 1) {
                throw cutsel::DataError("outcome value " + std::to_string(outcome[i]) +
                                        " at row " + std::to_string(i) + " is outside {0,1}");
            }
            y.push_back(static_cast<std::int8_t>(outcome[i]));
        }
        std::vector<std::string> predictor_names;
        predictor_names.reserve(static_cast<std::size_t>(p));
        for (int64_t j = 0; j < p; ++j) {
            if (names != nullptr && names[j] != nullptr) {
                predictor_names.emplace_back(names[j]);
            } else {
                predictor_names.push_back("x" + std::to_string(j + 1));
            }
        }
        auto handle = std::make_unique<cutsel_dataset>();
        handle->data = cutsel::Dataset(std::move(values), std::move(y),
                                       std::move(predictor_names));
        *out = handle.release();
    });
}

int64_t cutsel_dataset_rows(const cutsel_dataset* data) {
    return data == nullptr ? 0 : data->data.rows();
}

int64_t cutsel_dataset_predictors(const cutsel_dataset* data) {
    return data == nullptr ? 0 : data->data.cols();
}

int64_t cutsel_dataset_dropped_rows(const cutsel_dataset* data) {
    return data == nullptr ? 0 : data->dropped;
}

const char* cutsel_dataset_predictor_name(const cutsel_dataset* data, int64_t j) {
    if (data == nullptr || j < 0 || j >= data->data.cols()) return nullptr;
    return data->data.name(j).c_str();
}

void cutsel_dataset_free(cutsel_dataset* data) { delete data; }

cutsel_status cutsel_run_fit(const cutsel_dataset* data, const char* config_json,
                             const char* out_dir, cutsel_result** out) {
    if (out != nullptr) *out = nullptr;
    if (data == nullptr) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT, "cutsel_run_fit: data is null");
    }
    return guarded([&] { run_fit_impl(*data, config_json, out_dir, out); });
}

cutsel_status cutsel_run_stability(const cutsel_dataset* data, const char* config_json,
                                   const char* out_dir, cutsel_result** out) {
    if (out != nullptr) *out = nullptr;
    if (data == nullptr) {
        return fail(CUTSEL_ERROR_INVALID_ARGUMENT, "cutsel_run_stability: data is null");
    }
    return guarded([&] { run_stability_impl(*data, config_json, out_dir, out); });
}

cutsel_status cutsel_run_simulate(const char* config_json, const char* out_dir,
                                  cutsel_result** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] { run_simulate_impl(config_json, out_dir, out); });
}

const char* cutsel_result_report_json(const cutsel_result* result) {
    return result == nullptr ? nullptr : result->report_json.c_str();
}

void cutsel_result_free(cutsel_result* result) { delete result; }

}  // extern "C"
