#include "dataset.hpp"

#include <cmath>

#include "errors.hpp"

namespace cutsel {

Dataset::Dataset(std::vector<double> features, std::vector<std::int8_t> outcome,
                 std::vector<std::string> names)
    : n_(static_cast<std::int64_t>(outcome.size())),
      p_(static_cast<std::int64_t>(names.size())),
      features_(std::move(features)),
      outcome_(std::move(outcome)),
      names_(std::move(names)) {
    if (p_ <= 0) {
        throw DataError("dataset needs at least one predictor");
    }
    if (features_.size() != static_cast<std::size_t>(n_ * p_)) {
        throw DataError("feature matrix size does not match n x p");
    }
    for (double v : features_) {
        if (!std::isfinite(v)) {
            throw DataError("feature matrix contains non-finite values");
        }
    }
    for (std::int8_t y : outcome_) {
        if (y != 0 && y != 1) {
            throw DataError("outcome entries must be 0 or 1");
        }
        positives_ += y;
    }
}

std::vector<double> Dataset::column(std::int64_t col) const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (std::int64_t i = 0; i < n_; ++i) {
        out[static_cast<std::size_t>(i)] = value(i, col);
    }
    return out;
}

void Dataset::require_both_classes() const {
    if (positives_ == 0 || positives_ == n_) {
        throw DataError("outcome has a single class; fitting needs both");
    }
}

Dataset Dataset::subset_rows(std::span<const std::int32_t> rows) const {
    std::vector<double> feats;
    feats.reserve(rows.size() * static_cast<std::size_t>(p_));
    std::vector<std::int8_t> y;
    y.reserve(rows.size());
    for (std::int32_t r : rows) {
        const double* begin = features_.data() + static_cast<std::size_t>(r) * p_;
        feats.insert(feats.end(), begin, begin + p_);
        y.push_back(outcome_[static_cast<std::size_t>(r)]);
    }
    return Dataset(std::move(feats), std::move(y), names_);
}

}  // namespace cutsel
