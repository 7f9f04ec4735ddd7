#include <doctest.h>

#include <stdexcept>

#include "dsgd/schedule.hpp"

using namespace dsgd;

TEST_CASE("strategy schedules hit the documented breakpoints") {
    const StepSchedule s2 = StepSchedule::strategy2();
    CHECK(schedule_eta(s2, 0) == 0.1);
    CHECK(schedule_eta(s2, 15000) == 0.1);
    CHECK(schedule_eta(s2, 15001) == 0.01);
    CHECK(schedule_eta(s2, 30000) == 0.01);
    CHECK(schedule_eta(s2, 30001) == 0.001);
    CHECK(schedule_eta(s2, 40000) == 0.001);
    CHECK(schedule_eta(s2, 40001) == 0.0001);
    CHECK(schedule_eta(s2, 1000000) == 0.0001);

    const StepSchedule s1 = StepSchedule::strategy1();
    CHECK(schedule_eta(s1, 0) == 0.1);
    CHECK(schedule_eta(s1, 49999) == 0.1);
}

TEST_CASE("diminishing schedule") {
    const StepSchedule d = StepSchedule::diminishing(0.5);
    CHECK(schedule_eta(d, 4) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(schedule_eta(d, 0) == 0.5);
    // Strictly decreasing.
    for (std::int64_t t = 0; t < 100; ++t) CHECK(schedule_eta(d, t) > schedule_eta(d, t + 1));
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(StepSchedule::constant(0.0), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::constant(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::diminishing(0.0), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::piecewise({10}, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::piecewise({10}, {0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::piecewise({20, 10}, {0.1, 0.01, 0.001}), std::invalid_argument);
    CHECK_NOTHROW(StepSchedule::piecewise({10, 20}, {0.1, 0.01, 0.001}));
}
