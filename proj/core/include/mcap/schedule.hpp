#pragma once

#include "mcap/config.hpp"

namespace mcap {

// Linear warmup to lr_peak over warmup_steps, then cosine annealing to
// lr_min at total_steps. Continuous at the junction and clamped past the
// end.
double lr_at(std::size_t step, const ScheduleConfig& sched);

// Monotone half-cosine ramp of the positive margin from m_plus_start to
// m_plus_end over total_steps.
double m_plus_at(std::size_t step, double m_plus_start, const ScheduleConfig& sched);

} // namespace mcap
