#include "qcs/dsp.hpp"

#include <cmath>

#include <fmt/format.h>

namespace qcs {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void EnvelopeMemory::write(std::uint32_t addr, const std::vector<cplx>& samples) {
    if (addr + samples.size() > data_.size())
        throw RangeError(fmt::format("envelope write [{}, {}) exceeds capacity {}", addr,
                                     addr + samples.size(), data_.size()));
    for (std::size_t k = 0; k < samples.size(); ++k)
        data_[addr + k] = samples[k];
    write_log_.emplace_back(addr, static_cast<std::uint32_t>(samples.size()));
}

void EnvelopeMemory::log_read(std::uint32_t addr, std::uint32_t length) const {
    read_log_.emplace_back(addr, length);
}

std::vector<cplx> synth_pulse(const PulseCommand& cmd, const EnvelopeMemory& env_mem) {
    std::uint32_t end = static_cast<std::uint32_t>(cmd.env_addr) + cmd.length;
    if (end > env_mem.capacity())
        throw RangeError(fmt::format("envelope region [{}, {}) exceeds capacity {}", cmd.env_addr,
                                     end, env_mem.capacity()));
    env_mem.log_read(cmd.env_addr, cmd.length);

    double a = static_cast<double>(cmd.amp_word) / 1024.0;
    double freq = static_cast<double>(cmd.freq_word) / 16777216.0; // cycles per sample
    double phase0 = kTwoPi * static_cast<double>(cmd.phase_word) / 16384.0;

    std::vector<cplx> out(cmd.length);
    for (std::uint32_t n = 0; n < cmd.length; ++n) {
        double theta = kTwoPi * freq * static_cast<double>(n) + phase0;
        out[n] = a * env_mem.at(cmd.env_addr + n) * cplx{std::cos(theta), std::sin(theta)};
    }
    return out;
}

MuxResult mux_readout(const std::vector<MuxInput>& inputs) {
    std::size_t extent = 0;
    for (const auto& in : inputs)
        extent = std::max(extent, in.start + in.samples->size());

    MuxResult result;
    result.samples.assign(extent, cplx{0.0, 0.0});
    for (const auto& in : inputs)
        for (std::size_t k = 0; k < in.samples->size(); ++k)
            result.samples[in.start + k] += (*in.samples)[k];
    for (const auto& s : result.samples) {
        if (std::abs(s) > 1.0) {
            result.saturated = true;
            break;
        }
    }
    return result;
}

IqPoint mix_and_integrate(const std::vector<double>& adc, std::uint32_t dlo_freq_word,
                          std::size_t window_start, std::size_t window_length) {
    if (window_start + window_length > adc.size())
        throw RangeError(fmt::format("window [{}, {}) exceeds sequence length {}", window_start,
                                     window_start + window_length, adc.size()));
    double freq = static_cast<double>(dlo_freq_word) / 16777216.0;
    cplx acc{0.0, 0.0};
    for (std::size_t n = window_start; n < window_start + window_length; ++n) {
        double theta = -kTwoPi * freq * static_cast<double>(n);
        acc += adc[n] * cplx{std::cos(theta), std::sin(theta)};
    }
    return IqPoint::from_complex(acc);
}

int discriminate(const IqPoint& iq, const Discriminator& d) {
    cplx z = iq.to_complex() - d.offset;
    cplx rotated = z * cplx{std::cos(d.rotation), std::sin(d.rotation)};
    return rotated.imag() > 0.0 ? 0 : 1;
}

Acquisition acquire(const std::vector<cplx>& stream, std::size_t capacity) {
    Acquisition acq;
    std::size_t n = std::min(capacity, stream.size());
    acq.samples.assign(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(n));
    acq.truncated = stream.size() > capacity;
    return acq;
}

} // namespace qcs
