#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "grid.hpp"

namespace cutsel {

// Back-map from a design column to its (predictor, cutpoint).
struct ColumnInfo {
    std::int32_t predictor = 0;
    std::int32_t cut_index = 0;  // index into the predictor's cutpoint vector
    double cutpoint = 0.0;
};

// Sparse binary indicator expansion of a dataset under a cutpoint grid.
// Column (j, k) has a 1 in row i iff x_ij > q_jk. Columns are laid out
// predictor-major with ascending cutpoints, so within a predictor the
// supports are nested. Immutable after construction.
class DesignMatrix {
public:
    DesignMatrix() = default;

    static DesignMatrix expand(const Dataset& data, const CutpointGrid& grid);

    std::int64_t rows() const noexcept { return n_; }
    std::int64_t cols() const noexcept { return static_cast<std::int64_t>(columns_.size()); }
    std::size_t nonzeros() const noexcept { return row_index_.size(); }

    const ColumnInfo& info(std::int64_t c) const { return columns_[static_cast<std::size_t>(c)]; }
    const std::vector<ColumnInfo>& column_infos() const noexcept { return columns_; }

    // Row indices (ascending) of the ones in column c.
    std::span<const std::int32_t> support(std::int64_t c) const {
        return {row_index_.data() + col_start_[static_cast<std::size_t>(c)],
                row_index_.data() + col_start_[static_cast<std::size_t>(c) + 1]};
    }

    // Empirical column mean, for optional centred reporting.
    double column_mean(std::int64_t c) const {
        return n_ == 0 ? 0.0
                       : static_cast<double>(support(c).size()) / static_cast<double>(n_);
    }

    // Restriction to a subset of rows (ascending, unique); rows are
    // renumbered 0..m-1 in order.
    DesignMatrix subset_rows(std::span<const std::int32_t> rows) const;

    // eta_i = intercept + sum_c beta_c * chi_ic. beta must have cols() entries.
    std::vector<double> linear_predictor(double intercept, std::span<const double> beta) const;

    std::int32_t predictors() const noexcept {
        return static_cast<std::int32_t>(prefix_start_.empty() ? 0 : prefix_start_.size() - 1);
    }

    // Rows of predictor j's widest column, ordered so that every column of j
    // has a prefix of this sequence as its support (nestedness). Lets solvers
    // sweep a whole predictor on prefix sums.
    std::span<const std::int32_t> prefix_order(std::int32_t predictor) const {
        return {prefix_rows_.data() + prefix_start_[static_cast<std::size_t>(predictor)],
                prefix_rows_.data() + prefix_start_[static_cast<std::size_t>(predictor) + 1]};
    }

    // Half-open column range [first, last) belonging to predictor j.
    std::pair<std::int64_t, std::int64_t> column_range(std::int32_t predictor) const {
        return {static_cast<std::int64_t>(col_range_[static_cast<std::size_t>(predictor)]),
                static_cast<std::int64_t>(col_range_[static_cast<std::size_t>(predictor) + 1])};
    }

private:
    std::int64_t n_ = 0;
    std::vector<ColumnInfo> columns_;
    std::vector<std::size_t> col_start_;     // size cols()+1
    std::vector<std::int32_t> row_index_;    // concatenated supports
    std::vector<std::int32_t> prefix_rows_;  // concatenated per-predictor orders
    std::vector<std::size_t> prefix_start_;  // size predictors()+1
    std::vector<std::size_t> col_range_;     // size predictors()+1
};

// Right-continuous-from-above step function sum_k beta_k * 1{x > b_k}:
// value is levels[m] on (breakpoints[m-1], breakpoints[m]], with levels[0]
// left of every breakpoint. Breakpoints appear only where the step actually
// jumps.
struct StepFunction {
    std::vector<double> breakpoints;  // strictly increasing
    std::vector<double> levels;       // breakpoints.size() + 1 entries

    double value(double x) const;
};

// The fitted additive component for one predictor: jumps exactly at the
// cutpoints with nonzero coefficients, zero to the left of all cutpoints.
StepFunction fitted_function(std::span<const double> coefficients, const CutpointGrid& grid,
                             std::int64_t predictor);

}  // namespace cutsel
