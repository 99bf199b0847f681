// cutpoint-select command line tool.
//
// Thin orchestration over the shared C API: parses flags, merges them over an
// optional JSON config file, reads the input dataset, runs one of the three
// pipelines and reports where the outputs went. All numerical work happens
// behind the C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <cutsel/cutsel.h>

using nlohmann::ordered_json;

namespace {

// Exit contract: 0 success, 1 configuration error, 2 data error, 3 numerical
// failure.
int exit_code_of(cutsel_status status) {
    switch (status) {
        case CUTSEL_OK: return 0;
        case CUTSEL_ERROR_INVALID_ARGUMENT: return 1;
        case CUTSEL_ERROR_DATA: return 2;
        case CUTSEL_ERROR_IO: return 2;
        case CUTSEL_ERROR_NUMERIC: return 3;
        case CUTSEL_ERROR_INTERNAL: return 3;
    }
    return 3;
}

int fail(cutsel_status status) {
    std::fprintf(stderr, "error: %s\n", cutsel_last_error());
    return exit_code_of(status);
}

int config_error(const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return 1;
}

struct Options {
    std::string mode;
    std::string input;
    std::string config_path;
    std::string out_dir = "out";
    std::string scenario;
    std::string timestamp;
    std::optional<std::int64_t> seed;
    std::optional<int> workers;
    std::optional<double> omega;
    std::optional<double> threshold;
    std::optional<int> replications;
};

// Reads the config file (if any) and layers the command-line flags on top;
// flags win. Returns false with a message on malformed input.
bool build_config(const Options& opt, ordered_json& config, std::string& error) {
    config = ordered_json::object();
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path, std::ios::binary);
        if (!in) {
            error = "cannot open config file " + opt.config_path;
            return false;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        config = ordered_json::parse(buffer.str(), nullptr, false);
        if (config.is_discarded() || !config.is_object()) {
            error = "config file " + opt.config_path + " is not a JSON object";
            return false;
        }
    }
    if (opt.seed) config["seed"] = *opt.seed;
    if (opt.workers) config["workers"] = *opt.workers;
    if (!opt.timestamp.empty()) config["timestamp"] = opt.timestamp;
    if (opt.omega) {
        config["weights"] = {{"rule", "explicit"}, {"omega", *opt.omega}};
    }
    if (opt.threshold) {
        if (!config.contains("stability") || !config["stability"].is_object()) {
            config["stability"] = ordered_json::object();
        }
        config["stability"]["threshold"] = *opt.threshold;
    }
    if (!opt.scenario.empty()) config["scenario"] = opt.scenario;
    if (opt.replications) {
        if (!config.contains("scenario")) {
            error = "--replications needs a scenario (flag or config)";
            return false;
        }
        if (config["scenario"].is_string()) {
            config["scenario"] = {{"id", config["scenario"].get<std::string>()}};
        }
        config["scenario"]["replications"] = *opt.replications;
    }
    return true;
}

// The input schema travels in the config file under "schema"; the run
// configuration passed across the C API must not contain it.
std::string extract_schema(ordered_json& config) {
    std::string schema_text;
    if (config.contains("schema")) {
        schema_text = config["schema"].dump();
        config.erase("schema");
    }
    return schema_text;
}

// A run must always record the seed it used; invent one when absent.
void materialize_seed(ordered_json& config) {
    if (config.contains("seed")) return;
    std::random_device device;
    std::uint32_t seed = device();
    config["seed"] = seed;
    std::fprintf(stderr, "note: no seed given; using %u\n", seed);
}

bool apply_workers_env(ordered_json& config, std::string& error) {
    if (config.contains("workers")) return true;
    const char* env = std::getenv("CUTPOINT_SELECT_WORKERS");
    if (env == nullptr || *env == '\0') return true;
    char* end = nullptr;
    long value = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || value < 0) {
        error = std::string("CUTPOINT_SELECT_WORKERS must be a non-negative integer, got \"") +
                env + "\"";
        return false;
    }
    config["workers"] = value;
    return true;
}

void print_summary(const Options& opt, const cutsel_result* result) {
    const char* text = cutsel_result_report_json(result);
    if (text == nullptr) return;
    ordered_json report = ordered_json::parse(text, nullptr, false);
    if (report.is_discarded()) return;
    std::printf("mode: %s  seed: %llu\n", opt.mode.c_str(),
                static_cast<unsigned long long>(report["meta"]["seed"].get<std::uint64_t>()));
    if (report.contains("extra") && report["extra"].contains("dataset")) {
        const auto& ds = report["extra"]["dataset"];
        std::printf("dataset: %lld rows, %lld predictors (%lld dropped)\n",
                    ds["rows"].get<long long>(), ds["predictors"].get<long long>(),
                    ds["dropped_rows"].get<long long>());
    }
    if (opt.mode == "simulate" && report.contains("extra") &&
        report["extra"].contains("scenario")) {
        const auto& sc = report["extra"]["scenario"];
        std::printf("scenario %s: mean event rate %.4f, %lld failed replications\n",
                    sc["id"].get<std::string>().c_str(), sc["mean_event_rate"].get<double>(),
                    sc["replications_failed"].get<long long>());
        for (const auto& tc : sc["true_cutoffs"]) {
            std::printf("  true cutoff %s > %.6g: detected in %.0f%% of replications\n",
                        tc["predictor"].get<std::string>().c_str(),
                        tc["cutoff"].get<double>(), 100.0 * tc["selected_rate"].get<double>());
        }
    }
    if (opt.mode != "fit") {
        std::printf("recommended cutoffs: %zu (threshold %g)\n", report["cutoffs"].size(),
                    report["meta"].contains("threshold")
                        ? report["meta"]["threshold"].get<double>()
                        : report["stability"]["threshold"].get<double>());
    } else if (report.contains("extra") && report["extra"].contains("selected_fit")) {
        const auto& fit = report["extra"]["selected_fit"];
        std::printf("selected fit: lambda %.6g, %lld nonzero coefficients\n",
                    fit["lambda"].get<double>(), fit["nonzeros"].get<long long>());
    }
    std::printf("wrote %s/{selection_probabilities.csv, cutoffs.csv, report.json, "
                "selection_probabilities.svg}\n",
                opt.out_dir.c_str());
}

int run(const Options& opt) {
    ordered_json config;
    std::string error;
    if (!build_config(opt, config, error)) return config_error(error);
    if (!apply_workers_env(config, error)) return config_error(error);
    materialize_seed(config);
    std::string schema_text = extract_schema(config);
    std::string config_text = config.dump();

    cutsel_dataset* data = nullptr;
    cutsel_result* result = nullptr;
    cutsel_status status = CUTSEL_OK;
    if (opt.mode == "simulate") {
        status = cutsel_run_simulate(config_text.c_str(), opt.out_dir.c_str(), &result);
    } else {
        status = cutsel_dataset_read_csv(opt.input.c_str(),
                                         schema_text.empty() ? nullptr : schema_text.c_str(),
                                         &data);
        if (status == CUTSEL_OK) {
            status = opt.mode == "fit"
                         ? cutsel_run_fit(data, config_text.c_str(), opt.out_dir.c_str(),
                                          &result)
                         : cutsel_run_stability(data, config_text.c_str(), opt.out_dir.c_str(),
                                                &result);
        }
    }
    int code = 0;
    if (status != CUTSEL_OK) {
        code = fail(status);
    } else {
        print_summary(opt, result);
    }
    cutsel_result_free(result);
    cutsel_dataset_free(data);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Cutoff identification in continuous predictors via penalized additive "
                 "logistic regression with stability selection"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        if (needs_input) {
            sub->add_option("--input", opt.input, "Input CSV file")->required();
        }
        sub->add_option("--config", opt.config_path, "JSON config file; flags override it");
        sub->add_option("--out", opt.out_dir, "Output directory (default: out)");
        sub->add_option("--seed", opt.seed, "RNG seed (default: generated and logged)");
        sub->add_option("--workers", opt.workers,
                        "Worker threads; 0 = automatic (env CUTPOINT_SELECT_WORKERS)");
        sub->add_option("--omega", opt.omega, "Weight on outcome-1 rows (>= 1)");
        sub->add_option("--timestamp", opt.timestamp,
                        "Fixed report timestamp, for reproducible output bytes");
    };

    CLI::App* fit = app.add_subcommand("fit", "One penalized fit over a lambda path");
    add_common(fit, true);

    CLI::App* stability =
        app.add_subcommand("stability", "Selection probabilities over subsample refits");
    add_common(stability, true);
    stability->add_option("--threshold", opt.threshold,
                          "Selection probability threshold in (0.5, 1]");

    CLI::App* simulate = app.add_subcommand("simulate", "Synthetic scenario study");
    add_common(simulate, false);
    simulate->add_option("--scenario", opt.scenario, "Scenario id: A, B, C, D or null");
    simulate->add_option("--replications", opt.replications, "Outcome replications");
    simulate->add_option("--threshold", opt.threshold,
                         "Selection probability threshold in (0.5, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    opt.mode = app.get_subcommands().front()->get_name();
    return run(opt);
}
