#include "mcap/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace mcap {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double lr_at(std::size_t step, const ScheduleConfig& sched) {
    if (step <= sched.warmup_steps) {
        return sched.lr_peak * static_cast<double>(step) /
               static_cast<double>(sched.warmup_steps);
    }
    const double span = static_cast<double>(sched.total_steps - sched.warmup_steps);
    const double progress =
        std::min(1.0, static_cast<double>(step - sched.warmup_steps) / span);
    return sched.lr_min + 0.5 * (sched.lr_peak - sched.lr_min) * (1.0 + std::cos(kPi * progress));
}

double m_plus_at(std::size_t step, double m_plus_start, const ScheduleConfig& sched) {
    const double progress = std::min(
        1.0, static_cast<double>(step) / static_cast<double>(sched.total_steps));
    return m_plus_start +
           (sched.m_plus_end - m_plus_start) * 0.5 * (1.0 - std::cos(kPi * progress));
}

} // namespace mcap
