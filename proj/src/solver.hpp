#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "design.hpp"
#include "errors.hpp"

namespace cutsel {

// Per-row likelihood weights: omega on outcome-1 rows, 1 on outcome-0 rows.
struct WeightSpec {
    enum class Rule { explicit_value, balanced };

    Rule rule = Rule::balanced;
    double omega = 1.0;  // used when rule == explicit_value; must be >= 1

    static WeightSpec balanced() { return WeightSpec{Rule::balanced, 1.0}; }
    static WeightSpec explicit_value(double omega) {
        return WeightSpec{Rule::explicit_value, omega};
    }

    // Resolves the weight for a concrete outcome vector. The balanced rule
    // gives omega = n0/n1 but never less than 1.
    double resolve(std::span<const std::int8_t> y) const;
};

struct FitOptions {
    double tolerance = 1e-7;    // on the max KKT stationarity residual
    int max_iterations = 10000; // total coordinate sweeps
    std::optional<double> warm_intercept;
    std::optional<std::vector<double>> warm_coefficients;
    // When set, the solver verifies that the penalized objective never
    // increases across outer iterations and throws NumericError otherwise.
    bool check_objective_decrease = false;
};

// Solution of the weighted L1-penalized logistic problem at one lambda.
struct FitResult {
    double intercept = 0.0;             // unpenalized
    std::vector<double> coefficients;   // aligned to the design column map
    double lambda = 0.0;
    double objective = 0.0;             // penalized negative weighted log-likelihood
    double kkt_violation = 0.0;         // max stationarity residual at return
    int iterations = 0;                 // coordinate sweeps used

    std::int64_t nonzeros() const;
};

// Thrown when the sweep budget is exhausted; carries the best iterate seen.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(std::string message, FitResult best)
        : NumericError(std::move(message)), best_(std::move(best)) {}

    const FitResult& best() const noexcept { return best_; }

private:
    FitResult best_;
};

struct PathSpec {
    int count = 50;              // number of lambda values
    double min_ratio = 0.01;     // lambda_min / lambda_max
};

struct LassoPath {
    std::vector<double> lambdas;  // strictly decreasing
    std::vector<FitResult> fits;
};

// Negative weighted log-likelihood -sum_i w_i [y_i eta_i - ln(1 + e^eta_i)],
// evaluated in a log-sum-exp form that is stable for large |eta|.
double weighted_nll(const DesignMatrix& design, std::span<const std::int8_t> y,
                    const WeightSpec& w, double intercept, std::span<const double> beta);

// Gradient of the negative weighted log-likelihood; first component is the
// intercept derivative.
std::pair<double, std::vector<double>> gradient(const DesignMatrix& design,
                                                std::span<const std::int8_t> y,
                                                const WeightSpec& w, double intercept,
                                                std::span<const double> beta);

// Smallest penalty at which every penalized coefficient of the optimum is
// zero: the max absolute column score at the intercept-only fit.
double lambda_max(const DesignMatrix& design, std::span<const std::int8_t> y,
                  const WeightSpec& w);

// Intercept of the optimum when all penalized coefficients are zero:
// logit of the weighted prevalence (omega*n1) / (n0 + omega*n1).
double weighted_prevalence_logit(std::span<const std::int8_t> y, double omega);

FitResult fit(const DesignMatrix& design, std::span<const std::int8_t> y, const WeightSpec& w,
              double lambda, const FitOptions& opts = {});

// Log-spaced decreasing lambda path from lambda_max down to
// min_ratio * lambda_max, warm-starting each fit from the previous one.
LassoPath fit_path(const DesignMatrix& design, std::span<const std::int8_t> y,
                   const WeightSpec& w, const PathSpec& path = {},
                   const FitOptions& opts = {});

// Predicted event probabilities at the fitted coefficients.
std::vector<double> predict_probabilities(const DesignMatrix& design, const FitResult& fit);

// Extended BIC of one path point; used to pick a reporting lambda.
double ebic(const DesignMatrix& design, std::span<const std::int8_t> y, const WeightSpec& w,
            const FitResult& fit, double gamma = 0.5);

// Index of the EBIC-minimizing path point.
std::size_t ebic_best_index(const DesignMatrix& design, std::span<const std::int8_t> y,
                            const WeightSpec& w, const LassoPath& path, double gamma = 0.5);

double sigmoid(double x);
double log1pexp(double x);

}  // namespace cutsel
