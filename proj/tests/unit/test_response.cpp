#include "tsense/response.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace tsense;
using namespace tsense::response;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("mass-balance mixing", "[response]") {
    const auto mixed = mix_concentration({4000.0, 0.0}, 200.0, 0.125);
    CHECK(mixed.volume == 4200.0);
    CHECK_THAT(mixed.concentration, WithinRel(0.0059523809523809524, 1e-14));

    const BasinState s{3000.0, 0.02};
    const auto same = mix_concentration(s, 0.0, 0.5);
    CHECK(same.volume == s.volume);
    CHECK(same.concentration == s.concentration);

    for (double v : {1.0, 100.0, 1e5}) {
        CHECK_THAT(mix_concentration(s, v, 0.02).concentration, WithinRel(0.02, 1e-14));
    }
    CHECK_THROWS_AS(mix_concentration(s, -1.0, 0.1), DomainError);
    CHECK_THROWS_AS(mix_concentration({0.0, 0.0}, 1.0, 0.1), DomainError);
}

namespace {
CalibrationCurve sample_curve() {
    return CalibrationCurve({{0.0, 0.0}, {0.01, 100.0}, {0.1, 400.0}, {1.0, 900.0}});
}
} // namespace

TEST_CASE("calibration curve interpolation", "[response][calibration]") {
    const auto c = sample_curve();
    CHECK(steady_shift(0.0, c) == 0.0);
    CHECK(steady_shift(0.01, c) == 100.0);
    CHECK(steady_shift(0.1, c) == 400.0);
    CHECK(steady_shift(1.0, c) == 900.0);
    // Geometric midpoint of a log segment is the arithmetic mean of the knot shifts.
    CHECK_THAT(steady_shift(std::sqrt(0.01 * 0.1), c), WithinRel(250.0, 1e-12));
    CHECK_THAT(steady_shift(std::sqrt(0.1), c), WithinRel(650.0, 1e-12));
    // The segment from zero is linear in c.
    CHECK_THAT(steady_shift(0.005, c), WithinRel(50.0, 1e-12));
    CHECK_THROWS_AS(steady_shift(1.5, c), RangeError);
    CHECK_THROWS_AS(steady_shift(-0.1, c), RangeError);
}

TEST_CASE("calibration curve inversion", "[response][calibration]") {
    const auto c = sample_curve();
    for (double k : {0.0, 0.01, 0.1, 1.0}) {
        CHECK(invert_concentration(steady_shift(k, c), c) == k);
    }
    CHECK_THAT(invert_concentration(250.0, c), WithinRel(std::sqrt(0.001), 1e-12));
    CHECK_THAT(invert_concentration(650.0, c), WithinRel(std::sqrt(0.1), 1e-12));
    CHECK_THROWS_AS(invert_concentration(-1.0, c), RangeError);
    CHECK_THROWS_AS(invert_concentration(901.0, c), RangeError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(std::log(1e-4), 0.0);
    for (int i = 0; i < 100; ++i) {
        const double k = std::exp(u(rng));
        CHECK_THAT(invert_concentration(steady_shift(k, c), c), WithinRel(k, 1e-9));
    }
}

TEST_CASE("decreasing calibration curves invert too", "[response][calibration]") {
    const CalibrationCurve c({{0.0, 0.0}, {0.1, -200.0}, {0.5, -500.0}});
    CHECK_FALSE(c.increasing());
    CHECK(c.min_shift() == -500.0);
    CHECK_THAT(invert_concentration(steady_shift(0.3, c), c), WithinRel(0.3, 1e-12));
}

TEST_CASE("random valid curves are strictly monotone between knots", "[response][calibration]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> step(0.1, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<CalibrationPoint> pts{{0.0, 0.0}};
        double conc = 1e-3;
        double shift = 0.0;
        for (int k = 0; k < 6; ++k) {
            shift += step(rng);
            pts.push_back({conc, shift});
            conc *= 1.5 + step(rng);
        }
        const CalibrationCurve c(pts);
        double prev = -INFINITY;
        for (int i = 0; i <= 400; ++i) {
            const double k = c.max_concentration() * std::pow(i / 400.0, 3.0);
            const double s = steady_shift(k, c);
            REQUIRE(s > prev);
            prev = s;
        }
    }
}

TEST_CASE("calibration curve validation", "[response][calibration]") {
    CHECK_THROWS_AS(CalibrationCurve({{0.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(CalibrationCurve({{0.0, 0.0}, {0.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(CalibrationCurve({{0.0, 0.0}, {0.1, 1.0}, {0.2, 0.5}}), ConfigError);
    CHECK_THROWS_AS(CalibrationCurve({{-0.1, 0.0}, {0.1, 1.0}}), ConfigError);
    CHECK_THROWS_AS(CalibrationCurve().shift_at(0.0), ConfigError);
}

TEST_CASE("transient model", "[response]") {
    const ExpFit f{2e6, 0.01, 0.0, true};
    CHECK(transient_shift(0.0, f) == 0.0);
    CHECK_THAT(transient_shift(100.0, f), WithinRel(2e6 * (1.0 - std::exp(-1.0)), 1e-14));
    CHECK_THAT(transient_shift(220.0, f), WithinRel(1778393.6832753322, 1e-13));
    CHECK_THROWS_AS(transient_shift(-1.0, f), DomainError);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ua(0.1, 10.0);
    std::uniform_real_distribution<double> ub(1e-3, 1e-1);
    for (int i = 0; i < 50; ++i) {
        const ExpFit r{ua(rng), ub(rng), 0.0, true};
        double prev = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double s = transient_shift(10.0 * k, r);
            REQUIRE(s >= prev);
            REQUIRE(s <= r.a);
            prev = s;
        }
    }
}

TEST_CASE("model-derived calibration curve", "[response][calibration]") {
    const auto ladder = default_concentration_ladder();
    REQUIRE(ladder.front() == 0.0);
    CHECK(ladder[1] == 3.125e-3);
    CHECK(ladder.back() == 0.5);
    const auto curve = model_calibration_curve();
    CHECK(curve.points().front().shift == 0.0);
    for (std::size_t i = 1; i < curve.points().size(); ++i) {
        CHECK(curve.points()[i].shift > curve.points()[i - 1].shift);
    }
    // Permittivity drops with salt, so the resonance moves up.
    CHECK(curve.increasing());
    // Frozen from tests/oracles/fixtures.py.
    CHECK_THAT(curve.points().back().shift, WithinRel(10105879.521114593, 1e-12));
    CHECK_THAT(curve.points()[1].shift, WithinRel(69695.380412812211, 1e-10));
    CHECK_THROWS_AS(model_calibration_curve({0.1}), ConfigError);
}
