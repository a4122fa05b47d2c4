#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qcs/errors.hpp"
#include "qcs/isa.hpp"

// Numerical model of the gateware DSP: DDS pulse synthesis from envelope
// memory, multiplexed readout summation, digital-LO mix-and-integrate,
// state discrimination, and acquisition buffers. Everything is one complex
// sample per converter sample in double precision.

namespace qcs {

using cplx = std::complex<double>;

// Per-channel envelope memory with an access log. Reads and writes are
// recorded as (addr, length) spans so tests can assert that parameter-only
// reruns re-read the same bytes and never rewrite them.
class EnvelopeMemory {
public:
    explicit EnvelopeMemory(std::size_t capacity = kEnvelopeMemoryCapacity)
        : data_(capacity) {}

    std::size_t capacity() const { return data_.size(); }

    void write(std::uint32_t addr, const std::vector<cplx>& samples);
    // Bounds-checked read of one sample; logged once per span via log_read.
    const cplx& at(std::uint32_t addr) const { return data_.at(addr); }

    void log_read(std::uint32_t addr, std::uint32_t length) const;

    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& read_log() const { return read_log_; }
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& write_log() const { return write_log_; }
    void clear_read_log() { read_log_.clear(); }

private:
    std::vector<cplx> data_;
    mutable std::vector<std::pair<std::uint32_t, std::uint32_t>> read_log_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> write_log_;
};

// Pulse envelope at unit full scale; |samples[k]| <= 1.
struct Envelope {
    std::vector<cplx> samples;
};

// Accumulated demodulation result.
struct IqPoint {
    double i = 0.0;
    double q = 0.0;

    cplx to_complex() const { return {i, q}; }
    static IqPoint from_complex(cplx z) { return {z.real(), z.imag()}; }
};

// Rotation/offset applied before the sign-of-Im decision. State 0 is the
// upper half plane: Im(e^{j rotation} (z - offset)) > 0; ties resolve to 1.
struct Discriminator {
    double rotation = 0.0;
    cplx offset = {0.0, 0.0};
};

// out[n] = a * env[env_addr + n] * exp(j(2*pi*(freq_word/2^24)*n
//          + 2*pi*phase_word/2^14)) for n in [0, length), a = amp_word/2^10.
std::vector<cplx> synth_pulse(const PulseCommand& cmd, const EnvelopeMemory& env_mem);

// Pointwise sum of sequences placed at sample offsets; output length is the
// max extent. Reports (does not clip) |sum| > 1 via the saturated flag.
struct MuxInput {
    std::size_t start = 0;
    const std::vector<cplx>* samples = nullptr;
};
struct MuxResult {
    std::vector<cplx> samples;
    bool saturated = false;
};
MuxResult mux_readout(const std::vector<MuxInput>& inputs);

// IQ = sum_{n in [start, start+length)} adc[n] * exp(-j*2*pi*(dlo_freq_word/2^24)*n)
IqPoint mix_and_integrate(const std::vector<double>& adc, std::uint32_t dlo_freq_word,
                          std::size_t window_start, std::size_t window_length);

// 0 above the decision boundary, 1 below or on it.
int discriminate(const IqPoint& iq, const Discriminator& d);

// Live-oscilloscope buffer: stores the first `capacity` samples verbatim.
struct Acquisition {
    std::vector<cplx> samples;
    bool truncated = false;
};
Acquisition acquire(const std::vector<cplx>& stream, std::size_t capacity);

} // namespace qcs
