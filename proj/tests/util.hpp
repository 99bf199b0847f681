#pragma once

// Shared fixtures and independent reference implementations ("oracles") used
// by the test binaries. Oracles deliberately avoid the library's solver code
// paths: dense matrices, textbook Newton iterations, brute-force summation.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "design.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "solver.hpp"

namespace testutil {

// ---------------------------------------------------------------------------
// Dense helpers

// Dense 0/1 copy of every design column.
inline std::vector<std::vector<double>> dense_columns(const cutsel::DesignMatrix& design) {
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(design.cols()));
    for (std::int64_t c = 0; c < design.cols(); ++c) {
        auto& col = cols[static_cast<std::size_t>(c)];
        col.assign(static_cast<std::size_t>(design.rows()), 0.0);
        for (std::int32_t r : design.support(c)) {
            col[static_cast<std::size_t>(r)] = 1.0;
        }
    }
    return cols;
}

// Brute-force indicator expansion straight from the definition.
inline std::vector<std::vector<double>> dense_expand_oracle(const cutsel::Dataset& data,
                                                            const cutsel::CutpointGrid& grid) {
    std::vector<std::vector<double>> cols;
    for (std::int64_t j = 0; j < grid.predictors(); ++j) {
        for (double q : grid.cutpoints[static_cast<std::size_t>(j)]) {
            std::vector<double> col(static_cast<std::size_t>(data.rows()));
            for (std::int64_t i = 0; i < data.rows(); ++i) {
                col[static_cast<std::size_t>(i)] = data.value(i, j) > q ? 1.0 : 0.0;
            }
            cols.push_back(std::move(col));
        }
    }
    return cols;
}

// ---------------------------------------------------------------------------
// Newton oracle for the unpenalized weighted logistic MLE

struct NewtonFit {
    double intercept = 0.0;
    std::vector<double> beta;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Damped Newton on the dense design: solves grad = 0 for (b0, beta) of the
// weighted negative log-likelihood. Independent of the library solver; uses
// full Hessian solves and halving line search.
inline NewtonFit newton_logistic(const std::vector<std::vector<double>>& cols,
                                 std::span<const std::int8_t> y,
                                 std::span<const double> wrow, int max_iter = 200,
                                 double tol = 1e-9) {
    const std::size_t n = y.size();
    const std::size_t c = cols.size();
    const std::size_t d = c + 1;

    auto objective = [&](const std::vector<double>& th) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = th[0];
            for (std::size_t k = 0; k < c; ++k) {
                eta += th[k + 1] * cols[k][i];
            }
            f += wrow[i] * (cutsel::log1pexp(eta) - (y[i] ? eta : 0.0));
        }
        return f;
    };

    std::vector<double> theta(d, 0.0);
    double f = objective(theta);
    NewtonFit out;
    std::vector<double> grad(d), hess(d * d), x(d);

    for (int it = 0; it < max_iter; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[0] = 1.0;
            double eta = theta[0];
            for (std::size_t k = 0; k < c; ++k) {
                x[k + 1] = cols[k][i];
                eta += theta[k + 1] * cols[k][i];
            }
            double p = cutsel::sigmoid(eta);
            double g = wrow[i] * (p - static_cast<double>(y[i]));
            double h = wrow[i] * p * (1.0 - p);
            for (std::size_t a = 0; a < d; ++a) {
                grad[a] += g * x[a];
                for (std::size_t b = 0; b < d; ++b) {
                    hess[a * d + b] += h * x[a] * x[b];
                }
            }
        }

        double gn = 0.0;
        for (double g : grad) {
            gn = std::max(gn, std::fabs(g));
        }
        out.grad_norm = gn;
        out.iterations = it;
        if (gn <= tol) {
            out.converged = true;
            break;
        }

        // Small ridge keeps the solve stable when p saturates.
        std::vector<double> h = hess;
        for (std::size_t a = 0; a < d; ++a) {
            h[a * d + a] += 1e-10;
        }
        std::vector<double> neg(d);
        for (std::size_t a = 0; a < d; ++a) {
            neg[a] = -grad[a];
        }
        std::vector<double> step = cutsel::cholesky_solve(h, neg, d);

        double t = 1.0;
        for (int half = 0; half < 60; ++half) {
            std::vector<double> trial = theta;
            for (std::size_t a = 0; a < d; ++a) {
                trial[a] += t * step[a];
            }
            double ft = objective(trial);
            // Tiny slack: near the optimum the true decrease drops below
            // double rounding and strict descent would stall the iteration.
            if (ft <= f + 1e-12 * (1.0 + std::fabs(f))) {
                theta = std::move(trial);
                f = ft;
                break;
            }
            t *= 0.5;
        }
    }

    out.intercept = theta[0];
    out.beta.assign(theta.begin() + 1, theta.end());
    return out;
}

// ---------------------------------------------------------------------------
// Random test instances

struct Instance {
    cutsel::Dataset data;
    cutsel::CutpointGrid grid;
    cutsel::DesignMatrix design;
};

// Continuous features with a mild logistic signal; guaranteed to contain both
// classes and (with n >= 100 and these effect sizes) to be non-separable for
// practical purposes. Deterministic per seed.
inline Instance make_instance(std::uint64_t seed, std::int64_t n, std::int64_t p,
                              const cutsel::GridSpec& spec, double effect = 1.0,
                              double base_logit = -0.5) {
    cutsel::Rng rng(seed);
    std::vector<double> feat(static_cast<std::size_t>(n * p));
    for (double& v : feat) {
        v = rng.normal();
    }
    std::vector<std::int8_t> y(static_cast<std::size_t>(n));
    bool has0 = false;
    bool has1 = false;
    for (std::int64_t i = 0; i < n; ++i) {
        double eta = base_logit;
        for (std::int64_t j = 0; j < std::min<std::int64_t>(p, 2); ++j) {
            double x = feat[static_cast<std::size_t>(i * p + j)];
            eta += (j % 2 == 0 ? effect : -effect) * (x > 0.3 ? 1.0 : 0.0);
        }
        y[static_cast<std::size_t>(i)] =
            static_cast<std::int8_t>(rng.bernoulli(cutsel::sigmoid(eta)));
        (y[static_cast<std::size_t>(i)] ? has1 : has0) = true;
    }
    // Both classes are overwhelmingly likely at these sizes; force the issue
    // so fixtures never depend on luck.
    if (!has0) {
        y[0] = 0;
    }
    if (!has1) {
        y[1] = 1;
    }

    std::vector<std::string> names;
    for (std::int64_t j = 0; j < p; ++j) {
        names.push_back("x" + std::to_string(j));
    }
    Instance inst;
    inst.data = cutsel::Dataset(std::move(feat), std::move(y), std::move(names));
    inst.grid = cutsel::build_grids(inst.data, spec);
    inst.design = cutsel::DesignMatrix::expand(inst.data, inst.grid);
    return inst;
}

// ---------------------------------------------------------------------------
// Finite differences

// Central finite-difference gradient of weighted_nll in (intercept, beta).
inline std::pair<double, std::vector<double>> fd_gradient(const cutsel::DesignMatrix& design,
                                                          std::span<const std::int8_t> y,
                                                          const cutsel::WeightSpec& w,
                                                          double intercept,
                                                          std::vector<double> beta,
                                                          double h = 1e-5) {
    auto f = [&](double b0, std::span<const double> b) {
        return cutsel::weighted_nll(design, y, w, b0, b);
    };
    double g0 = (f(intercept + h, beta) - f(intercept - h, beta)) / (2.0 * h);
    std::vector<double> g(beta.size());
    for (std::size_t c = 0; c < beta.size(); ++c) {
        double keep = beta[c];
        beta[c] = keep + h;
        double up = f(intercept, beta);
        beta[c] = keep - h;
        double dn = f(intercept, beta);
        beta[c] = keep;
        g[c] = (up - dn) / (2.0 * h);
    }
    return {g0, g};
}

// ---------------------------------------------------------------------------
// Filesystem and process helpers

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int k = 0; k < 10000; ++k) {
            auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(k));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

// Runs the CLI binary (path injected by the build) with the given argument
// string; captures combined output.
inline CliResult run_cli(const std::string& args) {
#ifndef CUTSEL_CLI_PATH
    throw std::runtime_error("CLI path not configured for this test binary");
#else
    TempDir cap("cli-capture");
    auto outfile = cap.path() / "out.txt";
    std::string cmd = std::string(CUTSEL_CLI_PATH) + " " + args + " > " +
                      outfile.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    CliResult res;
    res.output = read_file(outfile);
    if (rc == -1) {
        res.exit_code = -1;
    } else {
        res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }
    return res;
#endif
}

// ---------------------------------------------------------------------------
// Minimal XML well-formedness check (tag balance), enough to confirm an SVG
// is parseable without pulling in an XML library.

inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    std::size_t elements = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        std::size_t close = text.find('>', i);
        if (close == std::string::npos) {
            return false;
        }
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) {
            return false;
        }
        if (tag[0] == '?' || tag[0] == '!') {
            continue;  // declaration or comment
        }
        if (tag[0] == '/') {
            std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) {
                return false;
            }
            stack.pop_back();
            continue;
        }
        bool self_closing = tag.back() == '/';
        std::string name = tag.substr(0, tag.find_first_of(" \t\n\r/"));
        if (name.empty()) {
            return false;
        }
        ++elements;
        if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty() && elements > 0;
}

}  // namespace testutil
