#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cutsel {

double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// ln(1 + e^x) without overflow; piecewise thresholds follow the usual
// accuracy analysis of this function.
double log1pexp(double x) {
    if (x <= -37.0) {
        return std::exp(x);
    }
    if (x <= 18.0) {
        return std::log1p(std::exp(x));
    }
    if (x <= 33.3) {
        return x + std::exp(-x);
    }
    return x;
}

double WeightSpec::resolve(std::span<const std::int8_t> y) const {
    if (rule == Rule::explicit_value) {
        if (!(omega >= 1.0) || !std::isfinite(omega)) {
            throw InvalidArgument("class weight omega must be >= 1");
        }
        return omega;
    }
    std::int64_t n1 = 0;
    for (std::int8_t v : y) {
        n1 += v;
    }
    std::int64_t n0 = static_cast<std::int64_t>(y.size()) - n1;
    if (n1 == 0) {
        throw DataError("balanced weights need at least one outcome-1 row");
    }
    double w = static_cast<double>(n0) / static_cast<double>(n1);
    return w < 1.0 ? 1.0 : w;
}

std::int64_t FitResult::nonzeros() const {
    std::int64_t k = 0;
    for (double b : coefficients) {
        k += (b != 0.0);
    }
    return k;
}

namespace {

double soft_threshold(double z, double t) {
    if (z > t) {
        return z - t;
    }
    if (z < -t) {
        return z + t;
    }
    return 0.0;
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += std::fabs(x);
    }
    return s;
}

double nll_from_eta(std::span<const double> eta, std::span<const std::int8_t> y,
                    std::span<const double> wrow) {
    double total = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        total += wrow[i] * (log1pexp(eta[i]) - (y[i] ? eta[i] : 0.0));
    }
    return total;
}

// Column sums of -s over each support, via per-predictor prefix sums over the
// nested-order rows. Shared by lambda_max and the solver's gradient pass so
// the two agree bit for bit.
std::vector<double> column_neg_scores(const DesignMatrix& design, std::span<const double> s) {
    std::vector<double> g(static_cast<std::size_t>(design.cols()));
    std::vector<double> prefix;
    for (std::int32_t j = 0; j < design.predictors(); ++j) {
        auto ord = design.prefix_order(j);
        prefix.assign(ord.size() + 1, 0.0);
        for (std::size_t t = 0; t < ord.size(); ++t) {
            prefix[t + 1] = prefix[t] + s[static_cast<std::size_t>(ord[t])];
        }
        auto [c0, c1] = design.column_range(j);
        for (std::int64_t c = c0; c < c1; ++c) {
            g[static_cast<std::size_t>(c)] = -prefix[design.support(c).size()];
        }
    }
    return g;
}

double stationarity_residual(double grad, double beta, double lambda) {
    if (beta != 0.0) {
        return std::fabs(grad + (beta > 0.0 ? lambda : -lambda));
    }
    double v = std::fabs(grad) - lambda;
    return v > 0.0 ? v : 0.0;
}

}  // namespace

double weighted_nll(const DesignMatrix& design, std::span<const std::int8_t> y,
                    const WeightSpec& w, double intercept, std::span<const double> beta) {
    if (y.size() != static_cast<std::size_t>(design.rows())) {
        throw InvalidArgument("outcome length does not match design rows");
    }
    double omega = w.resolve(y);
    std::vector<double> eta = design.linear_predictor(intercept, beta);
    double total = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        double wi = y[i] ? omega : 1.0;
        total += wi * (log1pexp(eta[i]) - (y[i] ? eta[i] : 0.0));
    }
    return total;
}

std::pair<double, std::vector<double>> gradient(const DesignMatrix& design,
                                                std::span<const std::int8_t> y,
                                                const WeightSpec& w, double intercept,
                                                std::span<const double> beta) {
    if (y.size() != static_cast<std::size_t>(design.rows())) {
        throw InvalidArgument("outcome length does not match design rows");
    }
    double omega = w.resolve(y);
    std::vector<double> eta = design.linear_predictor(intercept, beta);
    std::vector<double> s(eta.size());
    double total = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        double wi = y[i] ? omega : 1.0;
        s[i] = wi * (static_cast<double>(y[i]) - sigmoid(eta[i]));
        total += s[i];
    }
    return {-total, column_neg_scores(design, s)};
}

double weighted_prevalence_logit(std::span<const std::int8_t> y, double omega) {
    std::int64_t n1 = 0;
    for (std::int8_t v : y) {
        n1 += v;
    }
    std::int64_t n0 = static_cast<std::int64_t>(y.size()) - n1;
    if (n1 == 0 || n0 == 0) {
        throw DataError("outcome has a single class; fitting needs both");
    }
    return std::log(omega * static_cast<double>(n1) / static_cast<double>(n0));
}

double lambda_max(const DesignMatrix& design, std::span<const std::int8_t> y,
                  const WeightSpec& w) {
    if (y.size() != static_cast<std::size_t>(design.rows())) {
        throw InvalidArgument("outcome length does not match design rows");
    }
    double omega = w.resolve(y);
    std::int64_t n1 = 0;
    for (std::int8_t v : y) {
        n1 += v;
    }
    std::int64_t n0 = static_cast<std::int64_t>(y.size()) - n1;
    if (n1 == 0 || n0 == 0) {
        throw DataError("outcome has a single class; fitting needs both");
    }
    double pbar = omega * static_cast<double>(n1) /
                  (static_cast<double>(n0) + omega * static_cast<double>(n1));
    std::vector<double> s(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        s[i] = y[i] ? omega * (1.0 - pbar) : -pbar;
    }
    std::vector<double> g = column_neg_scores(design, s);
    double lm = 0.0;
    for (double v : g) {
        lm = std::max(lm, std::fabs(v));
    }
    if (lm <= 0.0) {
        throw NumericError("no signal: all columns are orthogonal to the intercept-only residuals");
    }
    return lm;
}

FitResult fit(const DesignMatrix& design, std::span<const std::int8_t> y, const WeightSpec& w,
              double lambda, const FitOptions& opts) {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be finite and >= 0");
    }
    if (!(opts.tolerance > 0.0)) {
        throw InvalidArgument("tolerance must be > 0");
    }
    if (opts.max_iterations < 1) {
        throw InvalidArgument("max_iterations must be >= 1");
    }
    if (y.size() != static_cast<std::size_t>(design.rows())) {
        throw InvalidArgument("outcome length does not match design rows");
    }
    const std::size_t n = y.size();
    const std::int64_t ncols = design.cols();
    const double omega = w.resolve(y);
    weighted_prevalence_logit(y, omega);  // rejects single-class outcomes

    std::vector<double> wrow(n);
    for (std::size_t i = 0; i < n; ++i) {
        wrow[i] = y[i] ? omega : 1.0;
    }

    std::vector<double> beta(static_cast<std::size_t>(ncols), 0.0);
    double beta0;
    if (opts.warm_coefficients) {
        if (opts.warm_coefficients->size() != beta.size()) {
            throw InvalidArgument("warm-start coefficients do not match design columns");
        }
        beta = *opts.warm_coefficients;
        beta0 = opts.warm_intercept ? *opts.warm_intercept
                                    : weighted_prevalence_logit(y, omega);
    } else {
        beta0 = opts.warm_intercept ? *opts.warm_intercept
                                    : weighted_prevalence_logit(y, omega);
    }

    // Active set: all nonzero columns plus any column whose stationarity
    // residual exceeds the tolerance. Kept sorted so sweeps visit columns in
    // column-map order and results are deterministic.
    std::vector<std::int32_t> active;
    std::vector<std::uint8_t> in_active(static_cast<std::size_t>(ncols), 0);
    for (std::int64_t c = 0; c < ncols; ++c) {
        if (beta[static_cast<std::size_t>(c)] != 0.0) {
            active.push_back(static_cast<std::int32_t>(c));
            in_active[static_cast<std::size_t>(c)] = 1;
        }
    }

    std::vector<double> eta = design.linear_predictor(beta0, beta);
    std::vector<double> p(n), s(n), v(n), u(n);

    // Per-predictor scratch for prefix-sum sweeps: within a predictor every
    // support is a prefix of design.prefix_order(j), so one cumulative pass
    // prices all its coordinates.
    const std::int32_t npred = design.predictors();
    std::size_t maxw = 0;
    for (std::int32_t j = 0; j < npred; ++j) {
        maxw = std::max(maxw, design.prefix_order(j).size());
    }
    std::vector<double> pu(maxw + 1);
    std::vector<std::vector<double>> pv(static_cast<std::size_t>(npred));
    std::vector<std::size_t> upd_m;
    std::vector<double> upd_prefix;

    int sweeps = 0;
    double prev_objective = std::numeric_limits<double>::infinity();
    double best_kkt = std::numeric_limits<double>::infinity();
    FitResult best;

    const double clamp_lo = 1e-12;
    const double clamp_hi = 1.0 - 1e-12;

    for (;;) {
        // Stats at the current linearization point.
        double ssum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = sigmoid(eta[i]);
            s[i] = wrow[i] * (static_cast<double>(y[i]) - p[i]);
            ssum += s[i];
        }
        const double g0 = -ssum;
        std::vector<double> g = column_neg_scores(design, s);

        double kkt = std::fabs(g0);
        for (std::int64_t c = 0; c < ncols; ++c) {
            kkt = std::max(kkt, stationarity_residual(g[static_cast<std::size_t>(c)],
                                                      beta[static_cast<std::size_t>(c)], lambda));
        }

        const double objective = nll_from_eta(eta, y, wrow) + lambda * l1_norm(beta);
        if (opts.check_objective_decrease &&
            objective > prev_objective + 1e-9 * (1.0 + std::fabs(prev_objective))) {
            throw NumericError("penalized objective increased across solver iterations");
        }
        prev_objective = objective;

        if (kkt < best_kkt) {
            best_kkt = kkt;
            best.intercept = beta0;
            best.coefficients = beta;
            best.lambda = lambda;
            best.objective = objective;
            best.kkt_violation = kkt;
            best.iterations = sweeps;
        }

        if (kkt <= opts.tolerance) {
            FitResult out;
            out.intercept = beta0;
            out.coefficients = std::move(beta);
            out.lambda = lambda;
            out.objective = objective;
            out.kkt_violation = kkt;
            out.iterations = sweeps;
            return out;
        }

        // Far from the optimum the local quadratic is a rough model anyway:
        // polishing it to full tolerance wastes sweeps. Tighten the stall
        // threshold as the true KKT residual shrinks.
        const double stall = std::max(0.25 * opts.tolerance, 0.01 * kkt);

        for (std::int64_t c = 0; c < ncols; ++c) {
            std::size_t ci = static_cast<std::size_t>(c);
            if (!in_active[ci] &&
                std::fabs(g[ci]) - lambda > opts.tolerance) {
                active.insert(std::lower_bound(active.begin(), active.end(),
                                               static_cast<std::int32_t>(c)),
                              static_cast<std::int32_t>(c));
                in_active[ci] = 1;
            }
        }

        // IRLS quadratic at this point.
        double d0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pc = std::min(std::max(p[i], clamp_lo), clamp_hi);
            v[i] = wrow[i] * pc * (1.0 - pc);
            u[i] = s[i];
            d0 += v[i];
        }

        // Predictors with at least one active column this outer round, and
        // the widest active support per predictor (fixed within the round).
        std::vector<std::size_t> pred_width(static_cast<std::size_t>(npred), 0);
        for (std::int32_t c : active) {
            std::size_t j = static_cast<std::size_t>(design.info(c).predictor);
            pred_width[j] = std::max(pred_width[j], design.support(c).size());
        }
        for (std::int32_t j = 0; j < npred; ++j) {
            std::size_t w = pred_width[static_cast<std::size_t>(j)];
            if (w == 0) {
                continue;
            }
            auto ord = design.prefix_order(j);
            auto& pvj = pv[static_cast<std::size_t>(j)];
            pvj.assign(w + 1, 0.0);
            for (std::size_t t = 0; t < w; ++t) {
                pvj[t + 1] = pvj[t] + v[static_cast<std::size_t>(ord[t])];
            }
        }

        // Coordinate descent on the quadratic until its updates stall. Each
        // predictor is swept through prefix sums: with u frozen at the sweep's
        // entry to the predictor, the residual sum for column c is
        // PU[m_c] - S_delta * PV[m_c], because every previously updated
        // column of the same predictor covers c's support entirely.
        for (;;) {
            double maxstep = 0.0;

            double num0 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                num0 += u[i];
            }
            double delta0 = num0 / d0;
            if (delta0 != 0.0) {
                beta0 += delta0;
                for (std::size_t i = 0; i < n; ++i) {
                    u[i] -= delta0 * v[i];
                }
                maxstep = std::max(maxstep, std::fabs(num0));
            }

            for (std::int32_t j = 0; j < npred; ++j) {
                const std::size_t w = pred_width[static_cast<std::size_t>(j)];
                if (w == 0) {
                    continue;
                }
                auto ord = design.prefix_order(j);
                const auto& pvj = pv[static_cast<std::size_t>(j)];
                pu[0] = 0.0;
                for (std::size_t t = 0; t < w; ++t) {
                    pu[t + 1] = pu[t] + u[static_cast<std::size_t>(ord[t])];
                }

                upd_m.clear();
                upd_prefix.clear();
                double s_delta = 0.0;
                auto [c0, c1] = design.column_range(j);
                for (std::int64_t c = c0; c < c1; ++c) {
                    std::size_t ci = static_cast<std::size_t>(c);
                    if (!in_active[ci]) {
                        continue;
                    }
                    const std::size_t m = design.support(c).size();
                    const double d = pvj[m];
                    if (d <= 0.0) {
                        beta[ci] = 0.0;  // no support rows in this subset
                        continue;
                    }
                    double z = pu[m] - s_delta * pvj[m] + d * beta[ci];
                    double bnew = soft_threshold(z, lambda) / d;
                    double delta = bnew - beta[ci];
                    if (delta != 0.0) {
                        beta[ci] = bnew;
                        s_delta += delta;
                        upd_m.push_back(m);
                        upd_prefix.push_back(s_delta);
                        maxstep = std::max(maxstep, d * std::fabs(delta));
                    }
                }

                // Flush the accumulated deltas into u. Supports shrink along
                // the update list, so walking ranks upward peels updates off
                // the back; rank t receives the prefix sum of the updates
                // still covering it.
                if (!upd_m.empty()) {
                    std::size_t live = upd_m.size();
                    for (std::size_t t = 0; t < upd_m.front(); ++t) {
                        while (live > 0 && upd_m[live - 1] <= t) {
                            --live;
                        }
                        if (live == 0) {
                            break;
                        }
                        std::size_t r = static_cast<std::size_t>(ord[t]);
                        u[r] -= upd_prefix[live - 1] * v[r];
                    }
                }
            }

            ++sweeps;
            if (sweeps >= opts.max_iterations) {
                char msg[128];
                std::snprintf(msg, sizeof(msg),
                              "solver did not converge in %d sweeps (best KKT residual %.3e)",
                              opts.max_iterations, best_kkt);
                throw ConvergenceError(msg, best);
            }
            if (maxstep <= stall) {
                break;
            }
        }

        eta = design.linear_predictor(beta0, beta);
    }
}

LassoPath fit_path(const DesignMatrix& design, std::span<const std::int8_t> y,
                   const WeightSpec& w, const PathSpec& path, const FitOptions& opts) {
    if (path.count < 1) {
        throw InvalidArgument("path: count must be >= 1");
    }
    if (!(path.min_ratio > 0.0 && path.min_ratio <= 1.0)) {
        throw InvalidArgument("path: min_ratio must be in (0, 1]");
    }
    const double lm = lambda_max(design, y, w);

    LassoPath out;
    out.lambdas.reserve(static_cast<std::size_t>(path.count));
    for (int t = 0; t < path.count; ++t) {
        double frac = path.count == 1
                          ? 0.0
                          : static_cast<double>(t) / static_cast<double>(path.count - 1);
        out.lambdas.push_back(lm * std::pow(path.min_ratio, frac));
    }

    FitOptions step = opts;
    for (std::size_t t = 0; t < out.lambdas.size(); ++t) {
        if (t > 0) {
            step.warm_intercept = out.fits.back().intercept;
            step.warm_coefficients = out.fits.back().coefficients;
        }
        try {
            out.fits.push_back(fit(design, y, w, out.lambdas[t], step));
        } catch (const ConvergenceError& e) {
            char msg[160];
            std::snprintf(msg, sizeof(msg), "path fit failed at lambda=%.6e: %s",
                          out.lambdas[t], e.what());
            throw ConvergenceError(msg, e.best());
        }
    }
    return out;
}

std::vector<double> predict_probabilities(const DesignMatrix& design, const FitResult& fit) {
    std::vector<double> eta = design.linear_predictor(fit.intercept, fit.coefficients);
    for (double& e : eta) {
        e = sigmoid(e);
    }
    return eta;
}

double ebic(const DesignMatrix& design, std::span<const std::int8_t> y, const WeightSpec& w,
            const FitResult& fit, double gamma) {
    double nll = weighted_nll(design, y, w, fit.intercept, fit.coefficients);
    double k = static_cast<double>(fit.nonzeros());
    double n = static_cast<double>(design.rows());
    double cols = static_cast<double>(design.cols());
    return 2.0 * nll + k * (std::log(n) + 2.0 * gamma * std::log(cols));
}

std::size_t ebic_best_index(const DesignMatrix& design, std::span<const std::int8_t> y,
                            const WeightSpec& w, const LassoPath& path, double gamma) {
    if (path.fits.empty()) {
        throw InvalidArgument("empty path");
    }
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < path.fits.size(); ++t) {
        double v = ebic(design, y, w, path.fits[t], gamma);
        if (v < best_value) {
            best_value = v;
            best = t;
        }
    }
    return best;
}

}  // namespace cutsel
