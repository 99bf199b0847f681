#include "design.hpp"

#include <algorithm>
#include <numeric>

#include "errors.hpp"

namespace cutsel {

DesignMatrix DesignMatrix::expand(const Dataset& data, const CutpointGrid& grid) {
    if (grid.predictors() != data.cols()) {
        throw InvalidArgument("grid does not cover every predictor of the dataset");
    }
    DesignMatrix dm;
    dm.n_ = data.rows();
    dm.col_start_.push_back(0);
    dm.prefix_start_.push_back(0);
    dm.col_range_.push_back(0);

    const std::size_t n = static_cast<std::size_t>(data.rows());
    std::vector<std::int32_t> order(n);
    std::vector<double> col;

    for (std::int64_t j = 0; j < data.cols(); ++j) {
        const auto& cuts = grid.cutpoints[static_cast<std::size_t>(j)];
        col = data.column(j);

        // Sort row ids by descending value; the support of "x > q" is then a
        // prefix of this order.
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
            double va = col[static_cast<std::size_t>(a)];
            double vb = col[static_cast<std::size_t>(b)];
            return va > vb || (va == vb && a < b);
        });

        std::size_t widest = 0;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            const double q = cuts[k];
            // count of values strictly above q
            std::size_t cnt = 0;
            {
                std::size_t lo = 0, hi = n;
                while (lo < hi) {
                    std::size_t mid = (lo + hi) / 2;
                    if (col[static_cast<std::size_t>(order[mid])] > q) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                cnt = lo;
            }
            if (cnt == 0 || cnt == n) {
                throw InvalidArgument("cutpoint outside the observed range of " + data.name(j));
            }
            widest = std::max(widest, cnt);
            std::vector<std::int32_t> rows(order.begin(),
                                           order.begin() + static_cast<std::ptrdiff_t>(cnt));
            std::sort(rows.begin(), rows.end());
            dm.row_index_.insert(dm.row_index_.end(), rows.begin(), rows.end());
            dm.col_start_.push_back(dm.row_index_.size());
            dm.columns_.push_back(ColumnInfo{static_cast<std::int32_t>(j),
                                             static_cast<std::int32_t>(k), q});
        }
        // Every support of predictor j is a prefix of the descending-value
        // order; keep the widest prefix for prefix-sum sweeps.
        dm.prefix_rows_.insert(dm.prefix_rows_.end(), order.begin(),
                               order.begin() + static_cast<std::ptrdiff_t>(widest));
        dm.prefix_start_.push_back(dm.prefix_rows_.size());
        dm.col_range_.push_back(dm.columns_.size());
    }
    return dm;
}

DesignMatrix DesignMatrix::subset_rows(std::span<const std::int32_t> rows) const {
    std::vector<std::int32_t> remap(static_cast<std::size_t>(n_), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        remap[static_cast<std::size_t>(rows[i])] = static_cast<std::int32_t>(i);
    }
    DesignMatrix out;
    out.n_ = static_cast<std::int64_t>(rows.size());
    out.columns_ = columns_;
    out.col_range_ = col_range_;
    out.col_start_.reserve(col_start_.size());
    out.col_start_.push_back(0);
    out.row_index_.reserve(row_index_.size() / 2 + 1);
    for (std::int64_t c = 0; c < cols(); ++c) {
        for (std::int32_t r : support(c)) {
            std::int32_t m = remap[static_cast<std::size_t>(r)];
            if (m >= 0) {
                out.row_index_.push_back(m);
            }
        }
        out.col_start_.push_back(out.row_index_.size());
    }
    // Filtering preserves the prefix property: every column keeps the same
    // relative order of its surviving rows.
    out.prefix_start_.push_back(0);
    for (std::int32_t j = 0; j < predictors(); ++j) {
        for (std::int32_t r : prefix_order(j)) {
            std::int32_t m = remap[static_cast<std::size_t>(r)];
            if (m >= 0) {
                out.prefix_rows_.push_back(m);
            }
        }
        out.prefix_start_.push_back(out.prefix_rows_.size());
    }
    return out;
}

std::vector<double> DesignMatrix::linear_predictor(double intercept,
                                                   std::span<const double> beta) const {
    if (beta.size() != static_cast<std::size_t>(cols())) {
        throw InvalidArgument("coefficient vector does not match design columns");
    }
    std::vector<double> eta(static_cast<std::size_t>(n_), intercept);
    for (std::int64_t c = 0; c < cols(); ++c) {
        const double b = beta[static_cast<std::size_t>(c)];
        if (b == 0.0) {
            continue;
        }
        for (std::int32_t r : support(c)) {
            eta[static_cast<std::size_t>(r)] += b;
        }
    }
    return eta;
}

double StepFunction::value(double x) const {
    // number of breakpoints strictly below x
    std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
    return levels[idx];
}

StepFunction fitted_function(std::span<const double> coefficients, const CutpointGrid& grid,
                             std::int64_t predictor) {
    if (predictor < 0 || predictor >= grid.predictors()) {
        throw InvalidArgument("predictor index out of range");
    }
    if (coefficients.size() != static_cast<std::size_t>(grid.total_cutpoints())) {
        throw InvalidArgument("coefficient vector does not match grid dimensions");
    }
    const auto& cuts = grid.cutpoints[static_cast<std::size_t>(predictor)];
    const std::int64_t offset = grid.column_offset(predictor);

    StepFunction f;
    f.levels.push_back(0.0);
    double level = 0.0;
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        double b = coefficients[static_cast<std::size_t>(offset) + k];
        level += b;
        if (b != 0.0) {
            f.breakpoints.push_back(cuts[k]);
            f.levels.push_back(level);
        }
    }
    return f;
}

}  // namespace cutsel
