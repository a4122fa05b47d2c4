#include "qcs/ptp.hpp"

#include <fmt/format.h>

namespace qcs {
namespace ptp {

PtpExchange simulate_exchange(std::int64_t offset, std::int64_t d_ps, std::int64_t d_sp,
                              std::int64_t processing_gap, std::int64_t t1) {
    if (d_ps < 0 || d_sp < 0)
        throw RangeError(fmt::format("negative path delay ({}, {})", d_ps, d_sp));
    if (processing_gap < 0)
        throw RangeError(fmt::format("negative processing gap {}", processing_gap));
    PtpExchange x;
    x.t1 = t1;
    x.t2 = t1 + d_ps + offset;
    x.t3 = x.t2 + processing_gap;
    x.t4 = x.t3 + d_sp - offset;
    x.d_ps = d_ps;
    x.d_sp = d_sp;
    x.processing_gap = processing_gap;
    return x;
}

std::int64_t compute_delay(const PtpExchange& x) {
    // Integer division truncates toward zero, which is the documented
    // rounding for odd numerators.
    return ((x.t4 - x.t1) - (x.t3 - x.t2)) / 2;
}

std::int64_t compute_offset(const PtpExchange& x) {
    return ((x.t2 - x.t1) - (x.t4 - x.t3)) / 2;
}

ClockNode apply_correction(ClockNode secondary, std::int64_t offset_estimate) {
    secondary.true_offset -= offset_estimate;
    return secondary;
}

} // namespace ptp
} // namespace qcs
