#pragma once

#include <cstdint>

#include "qcs/errors.hpp"

// Simplified precision-time-protocol simulation between a primary and a
// secondary clock. Timestamps are integer ticks; halves round toward zero.

namespace qcs {
namespace ptp {

enum class ClockRole { Primary, Secondary };

struct ClockNode {
    std::int64_t true_offset = 0; // ticks relative to the primary
    ClockRole role = ClockRole::Secondary;
};

// The four timestamps of one exchange. Construction rules:
//   t2 = t1 + d_ps + offset
//   t3 = t2 + p
//   t4 = t3 + d_sp - offset
struct PtpExchange {
    std::int64_t t1 = 0;
    std::int64_t t2 = 0;
    std::int64_t t3 = 0;
    std::int64_t t4 = 0;
    std::int64_t d_ps = 0; // path delay primary -> secondary
    std::int64_t d_sp = 0; // path delay secondary -> primary
    std::int64_t processing_gap = 0;
};

PtpExchange simulate_exchange(std::int64_t offset, std::int64_t d_ps, std::int64_t d_sp,
                              std::int64_t processing_gap, std::int64_t t1);

// delay = ((t4 - t1) - (t3 - t2)) / 2
std::int64_t compute_delay(const PtpExchange& x);

// offset = ((t2 - t1) - (t4 - t3)) / 2
std::int64_t compute_offset(const PtpExchange& x);

ClockNode apply_correction(ClockNode secondary, std::int64_t offset_estimate);

} // namespace ptp
} // namespace qcs
