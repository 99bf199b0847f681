#include "grid.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace cutsel {

GridSpec GridSpec::vigintiles() {
    GridSpec s;
    s.kind = Kind::percentile;
    for (int lvl = 5; lvl <= 95; lvl += 5) {
        s.levels.push_back(static_cast<double>(lvl));
    }
    return s;
}

GridSpec GridSpec::percentiles(std::vector<double> levels) {
    GridSpec s;
    s.kind = Kind::percentile;
    s.levels = std::move(levels);
    return s;
}

GridSpec GridSpec::uniform(int count) {
    GridSpec s;
    s.kind = Kind::uniform;
    s.count = count;
    return s;
}

GridSpec GridSpec::explicit_values_for(std::map<std::string, std::vector<double>> values) {
    GridSpec s;
    s.kind = Kind::explicit_values;
    s.values = std::move(values);
    return s;
}

void GridSpec::validate() const {
    switch (kind) {
        case Kind::percentile: {
            if (levels.empty()) {
                throw InvalidArgument("percentile grid: no levels given");
            }
            for (double lvl : levels) {
                if (!(lvl >= 0.0 && lvl <= 100.0)) {
                    throw InvalidArgument("percentile grid: level outside [0, 100]");
                }
            }
            break;
        }
        case Kind::uniform: {
            if (count < 1) {
                throw InvalidArgument("uniform grid: count must be >= 1");
            }
            break;
        }
        case Kind::explicit_values: {
            if (values.empty()) {
                throw InvalidArgument("explicit grid: no cutpoints given");
            }
            for (const auto& [name, v] : values) {
                if (v.empty()) {
                    throw InvalidArgument("explicit grid: empty cutpoint list for " + name);
                }
                for (double c : v) {
                    if (!std::isfinite(c)) {
                        throw InvalidArgument("explicit grid: non-finite cutpoint for " + name);
                    }
                }
            }
            break;
        }
    }
}

std::int64_t CutpointGrid::total_cutpoints() const {
    std::int64_t total = 0;
    for (const auto& v : cutpoints) {
        total += static_cast<std::int64_t>(v.size());
    }
    return total;
}

std::int64_t CutpointGrid::column_offset(std::int64_t predictor) const {
    std::int64_t off = 0;
    for (std::int64_t j = 0; j < predictor; ++j) {
        off += static_cast<std::int64_t>(cutpoints[static_cast<std::size_t>(j)].size());
    }
    return off;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) {
        throw InvalidArgument("quantile of empty sample");
    }
    if (p <= 0.0) {
        return sorted.front();
    }
    if (p >= 1.0) {
        return sorted.back();
    }
    double h = static_cast<double>(n - 1) * p;
    std::size_t lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= n) {
        return sorted.back();
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

std::string label(const std::string& name) {
    return name.empty() ? std::string("predictor") : "predictor " + name;
}

// Collapses candidates that induce identical indicator columns. Candidates c
// and c' are equivalent when no observed value lies between them; each
// equivalence class is replaced by the midpoint of its extreme members.
// Classes containing a candidate that sits exactly on an observed (tied)
// value instead report the midpoint of the two distinct observed values the
// indicator separates, so a 0/1 column yields the cutpoint 0.5 no matter
// where the quantiles land. Candidates whose column would be constant
// (all-zero or all-one) are dropped.
std::vector<double> collapse_candidates(std::vector<double> candidates,
                                        std::span<const double> sorted) {
    std::sort(candidates.begin(), candidates.end());
    const std::size_t n = sorted.size();

    auto support_size = [&](double c) {
        // number of observations with x > c
        auto it = std::upper_bound(sorted.begin(), sorted.end(), c);
        return static_cast<std::size_t>(sorted.end() - it);
    };
    auto observed = [&](double c) {
        return std::binary_search(sorted.begin(), sorted.end(), c);
    };

    std::vector<double> out;
    double group_first = 0.0;
    double group_last = 0.0;
    std::size_t group_count = 0;  // values strictly above the current group
    bool group_on_tie = false;    // some member equals an observed value
    bool open = false;

    auto close_group = [&] {
        if (!open) {
            return;
        }
        if (group_on_tie) {
            out.push_back(0.5 * (sorted[n - group_count - 1] + sorted[n - group_count]));
        } else {
            out.push_back(0.5 * (group_first + group_last));
        }
    };

    for (double c : candidates) {
        std::size_t s = support_size(c);
        if (s == 0 || s == n) {
            continue;  // constant column, unidentifiable under the penalty
        }
        if (open && s == group_count) {
            group_last = c;
            group_on_tie = group_on_tie || observed(c);
        } else {
            close_group();
            group_first = group_last = c;
            group_count = s;
            group_on_tie = observed(c);
            open = true;
        }
    }
    close_group();
    return out;
}

}  // namespace

std::vector<double> build_cutpoint_grid(std::span<const double> x, const GridSpec& spec,
                                        const std::string& name) {
    spec.validate();
    if (x.size() < 2) {
        throw DataError("degenerate predictor: " + label(name) + " has fewer than 2 values");
    }
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw DataError("degenerate predictor: " + label(name) + " is constant");
    }

    std::vector<double> candidates;
    switch (spec.kind) {
        case GridSpec::Kind::percentile: {
            candidates.reserve(spec.levels.size());
            for (double lvl : spec.levels) {
                candidates.push_back(quantile_sorted(sorted, lvl / 100.0));
            }
            break;
        }
        case GridSpec::Kind::uniform: {
            const double lo = sorted.front();
            const double hi = sorted.back();
            for (int t = 1; t <= spec.count; ++t) {
                candidates.push_back(lo + (hi - lo) * static_cast<double>(t) /
                                              static_cast<double>(spec.count + 1));
            }
            break;
        }
        case GridSpec::Kind::explicit_values: {
            auto it = spec.values.find(name);
            if (it == spec.values.end()) {
                throw InvalidArgument("explicit grid: no cutpoints listed for " + label(name));
            }
            candidates = it->second;
            break;
        }
    }

    std::vector<double> grid = collapse_candidates(std::move(candidates), sorted);
    if (grid.empty()) {
        throw DataError("empty cutpoint grid for " + label(name) +
                        ": every candidate would give a constant indicator column");
    }
    return grid;
}

CutpointGrid build_grids(const Dataset& data, const GridSpec& spec) {
    spec.validate();
    if (spec.kind == GridSpec::Kind::explicit_values) {
        std::vector<std::string> known(data.names().begin(), data.names().end());
        for (const auto& [name, _] : spec.values) {
            if (std::find(known.begin(), known.end(), name) == known.end()) {
                throw InvalidArgument("explicit grid references unknown predictor " + name);
            }
        }
    }
    CutpointGrid grid;
    grid.spec = spec;
    grid.cutpoints.reserve(static_cast<std::size_t>(data.cols()));
    for (std::int64_t j = 0; j < data.cols(); ++j) {
        std::vector<double> col = data.column(j);
        grid.cutpoints.push_back(build_cutpoint_grid(col, spec, data.name(j)));
    }
    return grid;
}

}  // namespace cutsel
