#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cutsel {

// Continuous predictors plus a binary outcome. Immutable after construction;
// safe to share across threads.
class Dataset {
public:
    Dataset() = default;

    // features is row-major n x p. Outcome entries must be 0 or 1.
    Dataset(std::vector<double> features, std::vector<std::int8_t> outcome,
            std::vector<std::string> names);

    std::int64_t rows() const noexcept { return n_; }
    std::int64_t cols() const noexcept { return p_; }

    double value(std::int64_t row, std::int64_t col) const {
        return features_[static_cast<std::size_t>(row * p_ + col)];
    }

    std::span<const double> features() const noexcept { return features_; }
    std::span<const std::int8_t> outcome() const noexcept { return outcome_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    const std::string& name(std::int64_t col) const {
        return names_[static_cast<std::size_t>(col)];
    }

    // Copies column j into a contiguous vector.
    std::vector<double> column(std::int64_t col) const;

    std::int64_t positives() const noexcept { return positives_; }
    std::int64_t negatives() const noexcept { return n_ - positives_; }

    // Throws DataError unless both outcome classes are present.
    void require_both_classes() const;

    // Extracts the given rows (ascending, unique) into a new Dataset.
    Dataset subset_rows(std::span<const std::int32_t> rows) const;

private:
    std::int64_t n_ = 0;
    std::int64_t p_ = 0;
    std::int64_t positives_ = 0;
    std::vector<double> features_;
    std::vector<std::int8_t> outcome_;
    std::vector<std::string> names_;
};

}  // namespace cutsel
