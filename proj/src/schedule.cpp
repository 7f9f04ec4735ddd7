#include "dsgd/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsgd {

void StepSchedule::validate() const {
    switch (kind) {
        case Kind::constant:
            if (!(eta > 0.0)) throw std::invalid_argument("StepSchedule: eta must be > 0");
            break;
        case Kind::piecewise: {
            if (values.size() != breaks.size() + 1)
                throw std::invalid_argument("StepSchedule: piecewise needs |values| = |breaks|+1");
            if (!std::is_sorted(breaks.begin(), breaks.end()))
                throw std::invalid_argument("StepSchedule: breakpoints must be increasing");
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (!(values[i] > 0.0))
                    throw std::invalid_argument("StepSchedule: values must be > 0");
                if (i > 0 && values[i] > values[i - 1])
                    throw std::invalid_argument("StepSchedule: values must be non-increasing");
            }
            break;
        }
        case Kind::diminishing:
            if (!(eta_star > 0.0)) throw std::invalid_argument("StepSchedule: eta_star must be > 0");
            break;
    }
}

StepSchedule StepSchedule::constant(double eta) {
    StepSchedule s;
    s.kind = Kind::constant;
    s.eta = eta;
    s.validate();
    return s;
}

StepSchedule StepSchedule::piecewise(std::vector<std::int64_t> breaks, std::vector<double> values) {
    StepSchedule s;
    s.kind = Kind::piecewise;
    s.breaks = std::move(breaks);
    s.values = std::move(values);
    s.validate();
    return s;
}

StepSchedule StepSchedule::diminishing(double eta_star) {
    StepSchedule s;
    s.kind = Kind::diminishing;
    s.eta_star = eta_star;
    s.validate();
    return s;
}

StepSchedule StepSchedule::strategy1() { return constant(0.1); }

StepSchedule StepSchedule::strategy2() {
    return piecewise({15000, 30000, 40000}, {0.1, 0.01, 0.001, 0.0001});
}

double schedule_eta(const StepSchedule& sched, std::int64_t t) {
    switch (sched.kind) {
        case StepSchedule::Kind::constant:
            return sched.eta;
        case StepSchedule::Kind::piecewise: {
            std::size_t i = 0;
            while (i < sched.breaks.size() && t > sched.breaks[i]) ++i;
            return sched.values[i];
        }
        case StepSchedule::Kind::diminishing:
            return sched.eta_star / static_cast<double>(t + 1);
    }
    return sched.eta;
}

}  // namespace dsgd
