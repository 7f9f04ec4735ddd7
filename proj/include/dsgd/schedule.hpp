#ifndef DSGD_SCHEDULE_HPP
#define DSGD_SCHEDULE_HPP

#include <cstdint>
#include <vector>

namespace dsgd {

// Step-size generator. Piecewise schedules map t <= breaks[0] to values[0],
// breaks[0] < t <= breaks[1] to values[1], ..., t > breaks.back() to
// values.back(); they need exactly one more value than breakpoints and
// non-increasing values. The diminishing family is eta_star / (t+1).
struct StepSchedule {
    enum class Kind { constant, piecewise, diminishing };

    Kind kind = Kind::constant;
    double eta = 0.1;                    // constant
    std::vector<std::int64_t> breaks;    // piecewise
    std::vector<double> values;          // piecewise
    double eta_star = 0.5;               // diminishing

    // Throws std::invalid_argument on non-positive or increasing values.
    void validate() const;

    static StepSchedule constant(double eta);
    static StepSchedule piecewise(std::vector<std::int64_t> breaks, std::vector<double> values);
    static StepSchedule diminishing(double eta_star);

    // Fixed 0.1.
    static StepSchedule strategy1();
    // 0.1 / 0.01 / 0.001 / 0.0001 with breakpoints 15000 / 30000 / 40000.
    static StepSchedule strategy2();
};

double schedule_eta(const StepSchedule& sched, std::int64_t t);

}  // namespace dsgd

#endif  // DSGD_SCHEDULE_HPP
