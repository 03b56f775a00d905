#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hdmi/metrics.hpp"
#include "reference_rows.hpp"

using namespace hdmi;

namespace {
Tensor dist(std::initializer_list<double> v) { return Tensor::from_vector(v); }
}

TEST_CASE("tv_distance values and validation") {
    CHECK(tv_distance(dist({0.5, 0.5}), dist({0.5, 0.5})) == 0.0);
    CHECK(tv_distance(dist({1.0, 0.0}), dist({0.0, 1.0})) == 1.0);
    CHECK(tv_distance(dist({0.7, 0.3}), dist({0.5, 0.5})) == doctest::Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(tv_distance(dist({0.5, 0.5}), dist({1.0, 0.0, 0.0})), InputError);
    CHECK_THROWS_AS(tv_distance(dist({0.7, 0.7}), dist({0.5, 0.5})), InputError);
    CHECK_THROWS_AS(tv_distance(dist({-0.2, 1.2}), dist({0.5, 0.5})), InputError);
}

TEST_CASE("completeness values") {
    CHECK(completeness(dist({0.0, 1.0}), 1) == 1.0);
    CHECK(completeness(dist({0.5, 0.5}), 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(completeness(dist({0.1, 0.8, 0.1}), 1) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(completeness(dist({0.5, 0.5}), 2), InputError);
}

TEST_CASE("max_tv_shift values") {
    CHECK(max_tv_shift(dist({0.7, 0.3})) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(max_tv_shift(dist({1.0 / 3, 1.0 / 3, 1.0 / 3})) ==
          doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(max_tv_shift(dist({1.0, 0.0})) == 1.0);
    CHECK_THROWS_AS(max_tv_shift(dist({1.0})), DegenerateError);
}

TEST_CASE("selectivity values and clamp counter") {
    CHECK(selectivity(dist({0.7, 0.3}), dist({0.7, 0.3})) == 1.0);
    CHECK(selectivity(dist({0.7, 0.3}), dist({0.0, 1.0})) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(selectivity(dist({0.6, 0.4}), dist({0.9, 0.1})) == doctest::Approx(0.5).epsilon(1e-12));

    // m(p) bounds every possible TV shift, so valid inputs never clamp; the
    // counter exists for numerical noise and must stay quiet here.
    reset_selectivity_clamp_count();
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor p({3}), q({3});
        double sp = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            p[i] = rng.uniform() + 1e-9;
            q[i] = rng.uniform() + 1e-9;
            sp += p[i];
            sq += q[i];
        }
        p *= 1.0 / sp;
        q *= 1.0 / sq;
        CHECK(selectivity(p, q) >= 0.0);
    }
    CHECK(selectivity_clamp_count() == 0);
    reset_selectivity_clamp_count();
}

TEST_CASE("reliability harmonic mean") {
    CHECK(reliability(1.0, 1.0) == 1.0);
    CHECK(reliability(0.0, 0.9) == 0.0);
    CHECK(reliability(0.0, 0.0) == 0.0);
    // Published LGD headline row: (0.9412, 0.8117) -> 0.8716.
    CHECK(std::fabs(reliability(0.9412, 0.8117) - 0.8716) < 1e-4);
    CHECK_THROWS_AS(reliability(-0.1, 0.5), InputError);
    CHECK_THROWS_AS(reliability(0.5, 1.5), InputError);
}

TEST_CASE("metric outputs stay in [0,1] over random distributions") {
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + rng.index(5);
        Tensor p({k}), q({k});
        double sp = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            p[i] = rng.uniform() + 1e-6;
            q[i] = rng.uniform() + 1e-6;
            sp += p[i];
            sq += q[i];
        }
        p *= 1.0 / sp;
        q *= 1.0 / sq;

        const double tv = tv_distance(p, q);
        CHECK(tv >= 0.0);
        CHECK(tv <= 1.0);
        const double comp = completeness(p, rng.index(k));
        CHECK(comp >= 0.0);
        CHECK(comp <= 1.0);
        const double m = max_tv_shift(p);
        CHECK(m >= 0.5);
        CHECK(m <= 1.0);
        const double sel = selectivity(p, q);
        CHECK(sel >= 0.0);
        CHECK(sel <= 1.0);
        const double rel = reliability(comp, sel);
        CHECK(rel >= 0.0);
        CHECK(rel <= 1.0);
        // Harmonic mean never exceeds the arithmetic mean or either input's max.
        CHECK(rel <= 0.5 * (comp + sel) + 1e-12);
        CHECK(rel <= std::max(comp, sel) + 1e-12);
        CHECK(std::fabs(reliability(comp, comp) - comp) < 1e-12);
    }
}

TEST_CASE("completeness and selectivity are 1 only at their fixed points") {
    CHECK(completeness(dist({0.0, 1.0, 0.0}), 1) == 1.0);
    CHECK(completeness(dist({0.01, 0.98, 0.01}), 1) < 1.0);
    CHECK(selectivity(dist({0.2, 0.8}), dist({0.2, 0.8})) == 1.0);
    CHECK(selectivity(dist({0.2, 0.8}), dist({0.21, 0.79})) < 1.0);
}

TEST_CASE("published result rows satisfy the harmonic-mean identity") {
    const auto& rows = hdmi::testdata::reference_rows();
    CHECK(rows.size() >= 130);
    double worst = 0.0;
    for (const auto& row : rows) {
        const double r = reliability(row.completeness, row.selectivity);
        worst = std::max(worst, std::fabs(r - row.reliability));
        CHECK(std::fabs(r - row.reliability) <= 0.0105);
    }
    MESSAGE("worst harmonic-mean deviation: " << worst);
}
