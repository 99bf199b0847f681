#include "stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace cutsel {

void StabilityConfig::validate() const {
    if (subsamples < 1) {
        throw InvalidArgument("stability: subsamples must be >= 1");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidArgument("stability: subsample fraction must be in (0, 1)");
    }
    if (!(threshold > 0.5 && threshold <= 1.0)) {
        throw InvalidArgument("stability: threshold must be in (0.5, 1]");
    }
    switch (lambda_rule) {
        case LambdaRule::fraction_of_max:
            if (!(lambda_fraction > 0.0 && lambda_fraction <= 1.0)) {
                throw InvalidArgument("stability: lambda_fraction must be in (0, 1]");
            }
            break;
        case LambdaRule::fixed:
            if (!(lambda_value >= 0.0) || !std::isfinite(lambda_value)) {
                throw InvalidArgument("stability: fixed lambda must be finite and >= 0");
            }
            break;
        case LambdaRule::ebic:
            if (!(ebic_gamma >= 0.0)) {
                throw InvalidArgument("stability: ebic_gamma must be >= 0");
            }
            if (ebic_path.count < 1 ||
                !(ebic_path.min_ratio > 0.0 && ebic_path.min_ratio <= 1.0)) {
                throw InvalidArgument("stability: invalid EBIC path spec");
            }
            break;
    }
}

namespace {

// First m entries of a Fisher-Yates pass over pool, then sorted ascending.
std::vector<std::int32_t> draw_without_replacement(Rng& rng, std::vector<std::int32_t> pool,
                                                   std::size_t m) {
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

std::vector<std::vector<std::int32_t>> subsample_memberships(const Dataset& data,
                                                             const StabilityConfig& cfg) {
    cfg.validate();
    data.require_both_classes();

    std::vector<std::int32_t> pos, neg;
    for (std::int64_t i = 0; i < data.rows(); ++i) {
        (data.outcome()[static_cast<std::size_t>(i)] ? pos : neg)
            .push_back(static_cast<std::int32_t>(i));
    }
    std::size_t m1 = static_cast<std::size_t>(cfg.fraction * static_cast<double>(pos.size()));
    std::size_t m0 = static_cast<std::size_t>(cfg.fraction * static_cast<double>(neg.size()));
    if (m1 < 1 || m0 < 1) {
        throw DataError("stability: subsample fraction leaves a class empty");
    }

    std::vector<std::vector<std::int32_t>> memberships;
    memberships.reserve(static_cast<std::size_t>(cfg.subsamples));
    for (int b = 0; b < cfg.subsamples; ++b) {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(b));
        auto take1 = draw_without_replacement(rng, pos, m1);
        auto take0 = draw_without_replacement(rng, neg, m0);
        std::vector<std::int32_t> rows;
        rows.reserve(m1 + m0);
        std::merge(take1.begin(), take1.end(), take0.begin(), take0.end(),
                   std::back_inserter(rows));
        memberships.push_back(std::move(rows));
    }
    return memberships;
}

StabilityResult stability_selection_with_memberships(
    const Dataset& data, const CutpointGrid& grids, const WeightSpec& w,
    const StabilityConfig& cfg, const std::vector<std::vector<std::int32_t>>& memberships) {
    cfg.validate();
    data.require_both_classes();
    const double omega = w.resolve(data.outcome());
    const auto weights = WeightSpec::explicit_value(omega);

    const DesignMatrix design = DesignMatrix::expand(data, grids);
    const std::size_t ncols = static_cast<std::size_t>(design.cols());
    const std::size_t B = memberships.size();

    // Per-subsample nonzero patterns, indexed by subsample so that parallel
    // scheduling cannot affect the aggregate.
    std::vector<std::vector<std::uint8_t>> pattern(B);
    std::vector<std::int32_t> counts(B, -1);

    parallel_for(B, cfg.workers, [&](std::size_t b) {
        const auto& rows = memberships[b];
        std::vector<std::int8_t> yb(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            yb[i] = data.outcome()[static_cast<std::size_t>(rows[i])];
        }
        DesignMatrix sub = design.subset_rows(rows);

        FitResult fr;
        try {
            switch (cfg.lambda_rule) {
                case StabilityConfig::LambdaRule::fraction_of_max: {
                    double lm = lambda_max(sub, yb, weights);
                    fr = fit(sub, yb, weights, cfg.lambda_fraction * lm, cfg.fit);
                    break;
                }
                case StabilityConfig::LambdaRule::fixed: {
                    fr = fit(sub, yb, weights, cfg.lambda_value, cfg.fit);
                    break;
                }
                case StabilityConfig::LambdaRule::ebic: {
                    LassoPath path = fit_path(sub, yb, weights, cfg.ebic_path, cfg.fit);
                    std::size_t best = ebic_best_index(sub, yb, weights, path, cfg.ebic_gamma);
                    fr = path.fits[best];
                    break;
                }
            }
        } catch (const NumericError&) {
            return;  // recorded as a failed subsample
        } catch (const DataError&) {
            return;  // e.g. a degenerate injected membership
        }

        std::vector<std::uint8_t> nz(ncols, 0);
        std::int32_t k = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (fr.coefficients[c] != 0.0) {
                nz[c] = 1;
                ++k;
            }
        }
        pattern[b] = std::move(nz);
        counts[b] = k;
    });

    StabilityResult res;
    res.columns = design.column_infos();
    res.nonzero_counts = std::move(counts);
    res.subsamples = static_cast<int>(B);
    res.omega = omega;

    std::vector<std::int64_t> hits(ncols, 0);
    int ok = 0;
    for (std::size_t b = 0; b < B; ++b) {
        if (res.nonzero_counts[b] < 0) {
            ++res.failed;
            continue;
        }
        ++ok;
        for (std::size_t c = 0; c < ncols; ++c) {
            hits[c] += pattern[b][c];
        }
    }
    if (ok == 0) {
        throw NumericError("stability: every subsample fit failed");
    }
    if (res.failed > 0 &&
        static_cast<double>(res.failed) > 0.05 * static_cast<double>(B)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg), "%d of %zu subsample fits failed and were excluded",
                      res.failed, B);
        res.warnings.push_back(msg);
    }
    res.probabilities.resize(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
        res.probabilities[c] = static_cast<double>(hits[c]) / static_cast<double>(ok);
    }
    return res;
}

StabilityResult stability_selection(const Dataset& data, const CutpointGrid& grids,
                                    const WeightSpec& w, const StabilityConfig& cfg) {
    return stability_selection_with_memberships(data, grids, w, cfg,
                                                subsample_memberships(data, cfg));
}

std::vector<CutoffRecommendation> select_cutoffs(const StabilityResult& res,
                                                 const CutpointGrid& grids, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("select_cutoffs: threshold must be in (0, 1]");
    }
    if (res.probabilities.size() != res.columns.size() ||
        static_cast<std::int64_t>(res.columns.size()) != grids.total_cutpoints()) {
        throw InvalidArgument("select_cutoffs: stability result does not match the grid");
    }
    for (const ColumnInfo& info : res.columns) {
        const auto& cuts = grids.cutpoints[static_cast<std::size_t>(info.predictor)];
        if (info.cut_index < 0 || static_cast<std::size_t>(info.cut_index) >= cuts.size() ||
            cuts[static_cast<std::size_t>(info.cut_index)] != info.cutpoint) {
            throw InvalidArgument("select_cutoffs: stability result does not match the grid");
        }
    }

    std::vector<CutoffRecommendation> out;
    std::size_t i = 0;
    while (i < res.columns.size()) {
        if (res.probabilities[i] < threshold) {
            ++i;
            continue;
        }
        // Extend over selected columns that are grid neighbors of the run.
        std::size_t j = i;
        while (j + 1 < res.columns.size() && res.probabilities[j + 1] >= threshold &&
               res.columns[j + 1].predictor == res.columns[j].predictor &&
               res.columns[j + 1].cut_index == res.columns[j].cut_index + 1) {
            ++j;
        }
        std::size_t top = i;
        for (std::size_t k = i + 1; k <= j; ++k) {
            if (res.probabilities[k] > res.probabilities[top]) {
                top = k;
            }
        }
        CutoffRecommendation rec;
        rec.predictor = res.columns[top].predictor;
        rec.cutoff = res.columns[top].cutpoint;
        rec.probability = res.probabilities[top];
        rec.merged = j > i;
        for (std::size_t k = i; k <= j; ++k) {
            if (k != top) {
                rec.absorbed.push_back(res.columns[k].cutpoint);
            }
        }
        out.push_back(std::move(rec));
        i = j + 1;
    }

    std::sort(out.begin(), out.end(),
              [](const CutoffRecommendation& a, const CutoffRecommendation& b) {
                  if (a.probability != b.probability) {
                      return a.probability > b.probability;
                  }
                  if (a.predictor != b.predictor) {
                      return a.predictor < b.predictor;
                  }
                  return a.cutoff < b.cutoff;
              });
    return out;
}

}  // namespace cutsel
