// Acceptance harness. Runs the nine release criteria end to end and prints
// one [PASS]/[FAIL] line per criterion with the measured numbers; exits
// nonzero if any criterion fails. The scenario criteria run the full-size
// simulation study (n = 9,594, 50 outcome replications per scenario), so a
// complete run takes tens of minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "design.hpp"
#include "grid.hpp"
#include "simulate.hpp"
#include "solver.hpp"
#include "stability.hpp"
#include "util.hpp"

using namespace cutsel;

namespace {

constexpr std::uint64_t kSeed = 20260823;

int g_failures = 0;

void report(bool ok, const char* fmt, ...) {
    std::printf("%s ", ok ? "[PASS]" : "[FAIL]");
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stdout, fmt, args);
    va_end(args);
    std::printf("\n");
    std::fflush(stdout);
    if (!ok) {
        ++g_failures;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> row_weights(std::span<const std::int8_t> y, double omega) {
    std::vector<double> w(y.size(), 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) {
            w[i] = omega;
        }
    }
    return w;
}

// Random small instances, sized to stay within 500 rows and 30 design
// columns. `attempt` reseeds a fresh draw when a previous one turns out to be
// quasi-separable (a saturated single-predictor basis can leave a class-pure
// cell, in which case no finite MLE exists and the draw violates the
// non-separability requirement).
testutil::Instance small_instance(int k, int attempt) {
    std::uint64_t seed = kSeed + static_cast<std::uint64_t>(k) +
                         40000ULL * static_cast<std::uint64_t>(attempt);
    switch (k % 3) {
        case 0:
            // Saturated single-predictor basis; at least ~12 rows per cell so
            // the unpenalized problem stays numerically tractable.
            return testutil::make_instance(seed, 240 + 10 * k, 1, GridSpec::vigintiles());
        case 1:
            return testutil::make_instance(
                seed, 200 + 8 * k, 3,
                GridSpec::percentiles({10, 20, 30, 40, 50, 60, 70, 80, 90}));
        default:
            return testutil::make_instance(seed, 120 + 12 * k, 2,
                                           GridSpec::percentiles({25, 50, 75}));
    }
}

WeightSpec instance_weights(int k) {
    return k % 2 == 0 ? WeightSpec::balanced() : WeightSpec::explicit_value(2.5);
}

// ---------------------------------------------------------------------------
// 1. Unpenalized fits match an independent damped-Newton MLE oracle.
// 2. Fits just above lambda_max are exactly zero with the closed-form
//    intercept.

void criteria_solver_exactness() {
    auto t0 = std::chrono::steady_clock::now();
    double worst_gap = 0.0;
    double worst_kkt = 0.0;
    double worst_zero_intercept = 0.0;
    bool all_zero = true;
    bool converged = true;

    for (int k = 0; k < 25; ++k) {
        WeightSpec w = instance_weights(k);

        // Reject quasi-separable draws: the oracle's failure to converge is
        // an instance property (no finite MLE), not a solver property.
        std::optional<testutil::Instance> inst;
        testutil::NewtonFit oracle;
        double omega = 1.0;
        for (int attempt = 0; attempt < 20; ++attempt) {
            auto candidate = small_instance(k, attempt);
            omega = w.resolve(candidate.data.outcome());
            auto dense = testutil::dense_columns(candidate.design);
            auto wrow = row_weights(candidate.data.outcome(), omega);
            oracle = testutil::newton_logistic(dense, candidate.data.outcome(), wrow);
            if (oracle.converged) {
                inst = std::move(candidate);
                break;
            }
        }
        if (!inst) {
            converged = false;
            continue;
        }

        FitOptions opts;
        opts.tolerance = 1e-8;
        try {
            auto mle = fit(inst->design, inst->data.outcome(), w, 0.0, opts);
            worst_kkt = std::max(worst_kkt, mle.kkt_violation);
            worst_gap = std::max(worst_gap, std::fabs(mle.intercept - oracle.intercept));
            for (std::size_t c = 0; c < oracle.beta.size(); ++c) {
                worst_gap =
                    std::max(worst_gap, std::fabs(mle.coefficients[c] - oracle.beta[c]));
            }

            double lm = lambda_max(inst->design, inst->data.outcome(), w);
            auto null_fit = fit(inst->design, inst->data.outcome(), w, 1.01 * lm, opts);
            worst_kkt = std::max(worst_kkt, null_fit.kkt_violation);
            all_zero = all_zero && null_fit.nonzeros() == 0;
            worst_zero_intercept =
                std::max(worst_zero_intercept,
                         std::fabs(null_fit.intercept -
                                   weighted_prevalence_logit(inst->data.outcome(), omega)));
        } catch (const ConvergenceError& e) {
            converged = false;
            worst_kkt = std::max(worst_kkt, e.best().kkt_violation);
        }
    }

    double secs = seconds_since(t0);
    report(converged && worst_gap < 1e-6 && worst_kkt <= 1e-7 && secs < 10.0,
           "criterion 1: solver exactness — max |coef - Newton oracle| %.2e (< 1e-6), "
           "max KKT residual %.2e (<= 1e-7), 25 instances in %.1f s (< 10 s)",
           worst_gap, worst_kkt, secs);
    report(all_zero && worst_zero_intercept < 1e-8,
           "criterion 2: lambda_max property — all penalized coefficients exactly zero at "
           "1.01*lambda_max, max |intercept - weighted prevalence logit| %.2e (< 1e-8)",
           worst_zero_intercept);
}

// ---------------------------------------------------------------------------
// 3. Analytic gradient of the weighted loss matches central finite
//    differences.

void criterion_gradient() {
    Rng rng(kSeed);
    double worst_rel = 0.0;
    int points = 0;
    for (int k = 0; k < 4; ++k) {
        auto inst = small_instance(k, 0);
        WeightSpec w = instance_weights(k);
        const std::size_t cols = static_cast<std::size_t>(inst.design.cols());
        for (int rep = 0; rep < 25; ++rep) {
            double b0 = 0.5 * rng.normal();
            std::vector<double> beta(cols);
            for (double& b : beta) {
                b = 0.5 * rng.normal();
            }
            auto [g0, g] = gradient(inst.design, inst.data.outcome(), w, b0, beta);
            auto [f0, f] = testutil::fd_gradient(inst.design, inst.data.outcome(), w, b0, beta);
            double scale = std::max(1.0, std::fabs(f0));
            worst_rel = std::max(worst_rel, std::fabs(g0 - f0) / scale);
            for (std::size_t c = 0; c < cols; ++c) {
                scale = std::max(1.0, std::fabs(f[c]));
                worst_rel = std::max(worst_rel, std::fabs(g[c] - f[c]) / scale);
            }
            ++points;
        }
    }
    report(points == 100 && worst_rel < 1e-5,
           "criterion 3: gradient check — max relative error vs central differences %.2e "
           "(< 1e-5) over %d random points",
           worst_rel, points);
}

// ---------------------------------------------------------------------------
// 4. Integer row weight omega = 3 equals physically replicating positive rows.

void criterion_weight_semantics() {
    double worst = 0.0;
    bool fit_ok = true;
    for (int k : {3, 8}) {
        auto inst = small_instance(k, 0);

        std::vector<double> feats;
        std::vector<std::int8_t> y;
        for (std::int64_t i = 0; i < inst.data.rows(); ++i) {
            int copies = inst.data.outcome()[static_cast<std::size_t>(i)] ? 3 : 1;
            for (int r = 0; r < copies; ++r) {
                for (std::int64_t j = 0; j < inst.data.cols(); ++j) {
                    feats.push_back(inst.data.value(i, j));
                }
                y.push_back(inst.data.outcome()[static_cast<std::size_t>(i)]);
            }
        }
        Dataset repl(std::move(feats), std::move(y), inst.data.names());
        auto repl_design = DesignMatrix::expand(repl, inst.grid);

        FitOptions opts;
        opts.tolerance = 1e-10;
        try {
            for (double frac : {0.0, 0.2}) {
                double lambda = frac * lambda_max(inst.design, inst.data.outcome(),
                                                  WeightSpec::explicit_value(3.0));
                auto weighted = fit(inst.design, inst.data.outcome(),
                                    WeightSpec::explicit_value(3.0), lambda, opts);
                auto replicated = fit(repl_design, repl.outcome(),
                                      WeightSpec::explicit_value(1.0), lambda, opts);
                worst = std::max(worst, std::fabs(weighted.intercept - replicated.intercept));
                for (std::size_t c = 0; c < weighted.coefficients.size(); ++c) {
                    worst = std::max(
                        worst, std::fabs(weighted.coefficients[c] - replicated.coefficients[c]));
                }
            }
        } catch (const ConvergenceError&) {
            fit_ok = false;
        }
    }
    report(fit_ok && worst < 1e-8,
           "criterion 4: weight semantics — max |omega=3 fit - row-replication fit| %.2e "
           "(< 1e-8) across two instances and two lambdas",
           worst);
}

// ---------------------------------------------------------------------------
// 5. Intercept calibration hits the 7%% target event rate on a large Monte
//    Carlo draw.

void criterion_calibration() {
    auto t0 = std::chrono::steady_clock::now();
    FeatureModel model = FeatureModel::default_cbc();
    ScenarioSpec spec = ScenarioSpec::builtin("B", model);
    FeatureModel adjusted = scenario_model(model, spec);

    const std::int64_t draws = 200000;
    FeatureMatrix x = generate_features(adjusted, draws, kSeed);
    auto effects = resolve_effects(x, spec.relevant);
    double b0 = calibrate_intercept(x, effects, spec.target_rate);
    auto y = generate_outcomes(x, effects, b0, kSeed + 1);

    double rate = 0.0;
    for (std::int8_t v : y) {
        rate += v;
    }
    rate /= static_cast<double>(draws);
    double secs = seconds_since(t0);
    report(std::fabs(rate - 0.07) < 0.003 && secs < 5.0,
           "criterion 5: calibration — realized event rate %.4f vs target 0.0700 "
           "(|diff| %.4f < 0.0030) on %lld draws in %.1f s (< 5 s)",
           rate, std::fabs(rate - 0.07), static_cast<long long>(draws), secs);
}

// ---------------------------------------------------------------------------
// Scenario machinery shared by criteria 6-8.

ScenarioResult run_builtin(const std::string& id, double* minutes) {
    auto t0 = std::chrono::steady_clock::now();
    FeatureModel model = FeatureModel::default_cbc();
    ScenarioSpec spec = ScenarioSpec::builtin(id, model);
    spec.replications = 50;
    StabilityConfig cfg;
    ScenarioResult res = run_scenario(spec, model, WeightSpec::balanced(),
                                      GridSpec::vigintiles(), cfg, kSeed);
    *minutes = seconds_since(t0) / 60.0;
    return res;
}

std::string rates_text(const ScenarioResult& res) {
    std::string out;
    for (std::size_t t = 0; t < res.true_cutoffs.size(); ++t) {
        if (!out.empty()) {
            out += " ";
        }
        out += res.names[static_cast<std::size_t>(res.true_cutoffs[t].predictor)];
        char buf[16];
        std::snprintf(buf, sizeof buf, "=%.2f", res.detection_selected[t]);
        out += buf;
    }
    return out;
}

// Highest mean selection probability among columns of predictors that carry
// no true effect.
double max_irrelevant(const ScenarioResult& res) {
    std::set<std::int32_t> relevant;
    for (const TrueCutoff& tc : res.true_cutoffs) {
        relevant.insert(tc.predictor);
    }
    double worst = 0.0;
    for (std::size_t c = 0; c < res.columns.size(); ++c) {
        if (!relevant.count(res.columns[c].predictor)) {
            worst = std::max(worst, res.mean_probability[c]);
        }
    }
    return worst;
}

bool all_detected(const ScenarioResult& res, double floor) {
    for (double d : res.detection_selected) {
        if (d < floor) {
            return false;
        }
    }
    return true;
}

void criteria_scenarios() {
    // 6. Central-cutoff recovery in the low-correlation (B) and correlated
    //    block (C) regimes.
    double min_b = 0.0;
    double min_c = 0.0;
    ScenarioResult b = run_builtin("B", &min_b);
    ScenarioResult c = run_builtin("C", &min_c);
    double irr_b = max_irrelevant(b);
    double irr_c = max_irrelevant(c);
    report(all_detected(b, 0.85) && all_detected(c, 0.85) && irr_b <= 0.3 && irr_c <= 0.3 &&
               min_b + min_c < 20.0,
           "criterion 6: scenario B/C recovery — detection B: %s, C: %s (each >= 0.85); "
           "max irrelevant mean probability B %.3f, C %.3f (<= 0.3); runtime %.1f min "
           "single-core (< 20 min)",
           rates_text(b).c_str(), rates_text(c).c_str(), irr_b, irr_c, min_b + min_c);

    // 7. Extreme-percentile scenarios degrade: A within [0.3, 0.85] and below
    //    B for the same predictors; D strictly below C per true cutoff.
    double min_a = 0.0;
    double min_d = 0.0;
    ScenarioResult a = run_builtin("A", &min_a);
    ScenarioResult d = run_builtin("D", &min_d);

    std::map<std::int32_t, double> b_rate;
    for (std::size_t t = 0; t < b.true_cutoffs.size(); ++t) {
        b_rate[b.true_cutoffs[t].predictor] = b.detection_selected[t];
    }
    bool a_ok = true;
    for (std::size_t t = 0; t < a.true_cutoffs.size(); ++t) {
        double rate = a.detection_selected[t];
        a_ok = a_ok && rate >= 0.3 && rate <= 0.85 &&
               rate < b_rate.at(a.true_cutoffs[t].predictor);
    }
    bool d_ok = d.true_cutoffs.size() == c.true_cutoffs.size();
    for (std::size_t t = 0; d_ok && t < d.true_cutoffs.size(); ++t) {
        d_ok = d.true_cutoffs[t].predictor == c.true_cutoffs[t].predictor &&
               d.detection_selected[t] < c.detection_selected[t];
    }
    report(a_ok && d_ok,
           "criterion 7: scenario A/D degradation — A: %s (each in [0.3, 0.85], below B), "
           "D: %s (each strictly below C); runtime %.1f min",
           rates_text(a).c_str(), rates_text(d).c_str(), min_a + min_d);

    // 8. A zero-effect scenario never crosses the background ceiling.
    double min_null = 0.0;
    ScenarioResult null_res = run_builtin("null", &min_null);
    double worst = 0.0;
    for (double p : null_res.mean_probability) {
        worst = std::max(worst, p);
    }
    report(null_res.true_cutoffs.empty() && worst <= 0.3,
           "criterion 8: null control — max mean selection probability %.3f over %zu "
           "columns (<= 0.3); runtime %.1f min",
           worst, null_res.mean_probability.size(), min_null);
}

// ---------------------------------------------------------------------------
// 9. CLI runs repeated with the same seed and timestamp are byte-identical.

void criterion_determinism() {
    const char* files[] = {"report.json", "selection_probabilities.csv", "cutoffs.csv",
                           "selection_probabilities.svg"};
    bool ok = true;
    std::string detail;

    auto compare_runs = [&](const std::string& label, const std::string& args) {
        testutil::TempDir first(label + "-1");
        testutil::TempDir second(label + "-2");
        for (const auto* dir : {&first, &second}) {
            auto r = testutil::run_cli(args + " --out " + dir->path().string());
            if (r.exit_code != 0) {
                ok = false;
                detail += " " + label + ":exit=" + std::to_string(r.exit_code);
                return;
            }
        }
        for (const char* name : files) {
            if (testutil::read_file(first.path() / name) !=
                testutil::read_file(second.path() / name)) {
                ok = false;
                detail += " " + label + ":" + name + " differs";
            }
        }
    };

    compare_runs("accept-stab",
                 std::string("stability --input ") + CUTSEL_EXAMPLE_CSV +
                     " --seed 42 --timestamp 2026-01-01T00:00:00Z");
    {
        testutil::TempDir cfg_dir("accept-sim-cfg");
        auto cfg = cfg_dir.path() / "config.json";
        testutil::write_file(
            cfg, R"({"scenario": {"id": "B", "n": 500}, "stability": {"subsamples": 10}})");
        compare_runs("accept-sim", "simulate --config " + cfg.string() +
                                       " --replications 2 --seed 7 --timestamp "
                                       "2026-01-01T00:00:00Z");
    }

    report(ok,
           "criterion 9: determinism — repeated stability and simulate runs with fixed seed "
           "and timestamp produce byte-identical CSV/JSON/SVG outputs%s",
           ok ? "" : detail.c_str());
}

}  // namespace

int main() {
    std::printf("acceptance run: seed %llu, full-size scenarios (n = 9594, 50 replications)\n",
                static_cast<unsigned long long>(kSeed));
    std::fflush(stdout);

    criteria_solver_exactness();
    criterion_gradient();
    criterion_weight_semantics();
    criterion_calibration();
    criteria_scenarios();
    criterion_determinism();

    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return EXIT_SUCCESS;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return EXIT_FAILURE;
}
