#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "rng.hpp"
#include "util.hpp"

using namespace cutsel;

namespace {

// Independent brute-force quantile: sort, index arithmetic in long double.
double quantile_oracle(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    long double h = static_cast<long double>(x.size() - 1) * static_cast<long double>(p);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= x.size()) {
        return x.back();
    }
    long double frac = h - static_cast<long double>(lo);
    return static_cast<double>(static_cast<long double>(x[lo]) +
                               frac * (static_cast<long double>(x[lo + 1]) -
                                       static_cast<long double>(x[lo])));
}

}  // namespace

TEST_CASE("quartile grid on 1..100 matches the interpolated quantile rule") {
    std::vector<double> x(100);
    for (int i = 0; i < 100; ++i) {
        x[i] = static_cast<double>(i + 1);
    }
    auto cuts = build_cutpoint_grid(x, GridSpec::percentiles({25, 50, 75}));
    REQUIRE(cuts.size() == 3);
    CHECK(cuts[0] == doctest::Approx(25.75).epsilon(1e-12));
    CHECK(cuts[1] == doctest::Approx(50.5).epsilon(1e-12));
    CHECK(cuts[2] == doctest::Approx(75.25).epsilon(1e-12));
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        double p = 0.25 * static_cast<double>(k + 1);
        CHECK(cuts[k] == doctest::Approx(quantile_oracle(x, p)).epsilon(1e-14));
    }
}

TEST_CASE("constant predictor is rejected") {
    std::vector<double> x = {5, 5, 5, 5};
    CHECK_THROWS_WITH_AS(build_cutpoint_grid(x, GridSpec::vigintiles()),
                         doctest::Contains("degenerate predictor"), DataError);
    CHECK_THROWS_AS(build_cutpoint_grid(x, GridSpec::uniform(4)), DataError);
    CHECK_THROWS_AS(build_cutpoint_grid(std::vector<double>{7.0}, GridSpec::vigintiles()),
                    DataError);
}

TEST_CASE("two-valued predictor collapses to a single midpoint cutpoint") {
    std::vector<double> x = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    auto cuts = build_cutpoint_grid(
        x, GridSpec::percentiles({10, 20, 30, 40, 50, 60, 70, 80, 90}));
    REQUIRE(cuts.size() == 1);
    CHECK(cuts[0] == doctest::Approx(0.5).epsilon(1e-12));

    // Enumerating candidate quantiles by hand: interior candidates all induce
    // the same indicator column, so the single midpoint cutpoint survives
    // regardless of the class balance.
    std::vector<double> skew = {0, 0, 0, 1, 1, 1, 1, 1, 1, 1};
    auto skew_cuts = build_cutpoint_grid(
        skew, GridSpec::percentiles({10, 20, 30, 40, 50, 60, 70, 80, 90}));
    REQUIRE(skew_cuts.size() == 1);
    CHECK(skew_cuts[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quantile_sorted follows the linear-interpolation rule") {
    std::vector<double> sorted = {1, 2, 3, 4};
    CHECK(quantile_sorted(sorted, 0.0) == 1.0);
    CHECK(quantile_sorted(sorted, 1.0) == 4.0);
    CHECK(quantile_sorted(sorted, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(sorted, 1.0 / 3.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(quantile_sorted(std::span<const double>{}, 0.5), InvalidArgument);
}

TEST_CASE("cutpoints stay strictly inside the observed range") {
    Rng rng(41);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(60);
        for (double& v : x) {
            v = rng.normal() * 3.0;
        }
        double lo = *std::min_element(x.begin(), x.end());
        double hi = *std::max_element(x.begin(), x.end());

        for (const GridSpec& spec :
             {GridSpec::vigintiles(), GridSpec::uniform(10),
              GridSpec::percentiles({0, 50, 100})}) {
            auto cuts = build_cutpoint_grid(x, spec);
            for (std::size_t k = 0; k < cuts.size(); ++k) {
                CHECK(cuts[k] > lo);
                CHECK(cuts[k] < hi);
                if (k > 0) {
                    CHECK(cuts[k] > cuts[k - 1]);
                }
            }
        }
    }
}

TEST_CASE("candidates at the sample extremes never yield constant columns") {
    std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto cuts = build_cutpoint_grid(x, GridSpec::percentiles({0, 50, 100}));
    // Level 100 lands on the maximum; 1{x > 10} would be all-zero, so it is
    // dropped. Level 0 lands on the minimum; 1{x > 1} is a valid column and
    // is reported as the midpoint between the two smallest distinct values.
    REQUIRE(cuts.size() == 2);
    CHECK(cuts[0] == doctest::Approx(1.5));
    CHECK(cuts[1] == doctest::Approx(5.5));

    // Only the all-zero candidate: nothing survives.
    CHECK_THROWS_AS(build_cutpoint_grid(x, GridSpec::percentiles({100})), DataError);
}

TEST_CASE("skewed binary predictor keeps its natural cutpoint") {
    // 96 zeros and 104 ones: no vigintile position interpolates across the
    // 0/1 boundary, so every candidate quantile lands exactly on 0 or on 1.
    // The grid must still contain the single natural cutpoint.
    std::vector<double> x(200, 0.0);
    std::fill(x.begin() + 96, x.end(), 1.0);
    auto cuts = build_cutpoint_grid(x, GridSpec::vigintiles());
    REQUIRE(cuts.size() == 1);
    CHECK(cuts[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("tied data values collapse duplicate candidate quantiles") {
    // Heavy ties: many percentile candidates coincide.
    std::vector<double> x;
    for (int i = 0; i < 30; ++i) {
        x.push_back(1.0);
    }
    for (int i = 0; i < 30; ++i) {
        x.push_back(2.0);
    }
    for (int i = 0; i < 30; ++i) {
        x.push_back(3.0);
    }
    auto cuts = build_cutpoint_grid(x, GridSpec::vigintiles());
    // Three distinct values admit exactly two non-constant indicator columns;
    // candidates landing on ties snap to the midpoints between value levels.
    REQUIRE(cuts.size() == 2);
    CHECK(cuts[0] == doctest::Approx(1.5));
    CHECK(cuts[1] == doctest::Approx(2.5));
}

TEST_CASE("grid spec validation") {
    CHECK_THROWS_AS(GridSpec::percentiles({}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GridSpec::percentiles({-3}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GridSpec::percentiles({101}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GridSpec::uniform(0).validate(), InvalidArgument);
    CHECK_THROWS_AS(GridSpec::explicit_values_for({}).validate(), InvalidArgument);
    CHECK_THROWS_AS(GridSpec::explicit_values_for({{"a", {}}}).validate(), InvalidArgument);
    CHECK_NOTHROW(GridSpec::vigintiles().validate());
}

TEST_CASE("build_grids covers every predictor and validates explicit names") {
    auto inst = testutil::make_instance(7, 80, 3, GridSpec::vigintiles());
    CHECK(inst.grid.predictors() == 3);
    CHECK(inst.grid.total_cutpoints() ==
          inst.grid.column_offset(2) +
              static_cast<std::int64_t>(inst.grid.cutpoints[2].size()));

    auto spec = GridSpec::explicit_values_for({{"x0", {0.0}}, {"nope", {1.0}}});
    CHECK_THROWS_WITH_AS(build_grids(inst.data, spec),
                         doctest::Contains("unknown predictor"), InvalidArgument);

    // Explicit grids must list every predictor of the dataset.
    auto partial = GridSpec::explicit_values_for({{"x0", {0.0}}});
    CHECK_THROWS_AS(build_grids(inst.data, partial), InvalidArgument);
}

TEST_CASE("explicit cutpoints outside the observed range are dropped") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    auto cuts = build_cutpoint_grid(x, GridSpec::explicit_values_for({{"v", {-10, 2.5, 99}}}),
                                    "v");
    REQUIRE(cuts.size() == 1);
    CHECK(cuts[0] == 2.5);

    CHECK_THROWS_AS(
        build_cutpoint_grid(x, GridSpec::explicit_values_for({{"v", {-10, 99}}}), "v"),
        DataError);
}
