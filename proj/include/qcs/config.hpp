#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcs/dsp.hpp"
#include "qcs/errors.hpp"

// Configuration documents: hardware channel table, calibration set (qubit
// parameters, gate pulse templates, envelope shapes, discriminators, qubit
// model parameters), and the qubit-to-core mapping. All three are JSON files;
// schemas are documented in docs/FORMATS.md with a complete two-qubit example
// under demo/.

namespace qcs {

// qclk runs at 500 MHz; one tick is 2 ns. Converter rates must be integer
// multiples of this.
inline constexpr double kQclkHz = 500e6;

enum class ChannelKind { QubitDrive, ReadoutDrive, ReadoutDemod };

struct Channel {
    std::string name;
    ChannelKind kind = ChannelKind::QubitDrive;
    std::uint16_t core = 0;
    std::uint16_t converter = 0; // DAC or ADC index; shared index = summed output
    double sample_rate_hz = 0.0;
    std::uint32_t env_capacity = kEnvelopeMemoryCapacity;

    std::uint32_t samples_per_tick() const {
        return static_cast<std::uint32_t>(sample_rate_hz / kQclkHz);
    }
};

struct ChannelConfig {
    std::vector<Channel> channels; // channel id = index

    const Channel& by_id(std::uint16_t id) const;
    std::uint16_t id_of(const std::string& name) const; // throws ConfigError if unknown
    const Channel* find(const std::string& name) const;
};

// --- Envelope shapes -------------------------------------------------------

struct EnvelopeShape {
    enum class Kind { Square, Gaussian, Samples } kind = Kind::Square;
    double gauss_sigma = 0.25; // fraction of the pulse length
    std::vector<cplx> samples; // Kind::Samples only

    bool operator==(const EnvelopeShape&) const = default;
};

// Evaluates the shape at `n_samples` points, unit full scale.
std::vector<cplx> render_envelope(const EnvelopeShape& shape, std::uint32_t n_samples,
                                  const std::string& name);

// --- Calibration -----------------------------------------------------------

enum class PulseRole { QubitDrive, ReadoutDrive };

struct GateTemplatePulse {
    std::string qubit;
    PulseRole role = PulseRole::QubitDrive;
    std::string envelope;
    double amp = 0.0;
    std::uint32_t length_ticks = 0;
    double phase = 0.0; // rad, template offset
};

struct QubitModelParams {
    double iq_amp = 1.0;          // A: noiseless IQ magnitude
    double dispersive_phase = 0.0; // theta_d: response phase is +theta_d / -theta_d
    double iq_sigma = 0.0;        // Gaussian IQ noise
};

struct QubitCal {
    double drive_freq_hz = 0.0;
    double readout_freq_hz = 0.0;
    double readout_amp = 0.0;
    std::string readout_envelope = "readout";
    Discriminator discriminator;
    QubitModelParams model;
};

struct CalibrationSet {
    std::map<std::string, QubitCal> qubits;
    // key: "NAME(Q0)" or "NAME(Q0,Q1)" — gate name with its qubit operands
    std::map<std::string, std::vector<GateTemplatePulse>> gates;
    std::map<std::string, EnvelopeShape> envelopes;
    std::uint32_t readout_window_ticks = 128;
    std::uint32_t feedback_latency_ticks = 64;  // measure end -> earliest dependent op
    std::uint32_t demod_window_offset_ticks = 8; // readout drive start -> demod start
    std::uint64_t model_seed = 1;

    // fproc channel ids are assigned by lexicographic qubit order.
    std::vector<std::string> qubit_order() const;
    std::uint16_t fproc_of(const std::string& qubit) const;
    const QubitCal& qubit(const std::string& name) const;
    static std::string gate_key(const std::string& name, const std::vector<std::string>& qubits);
};

// --- Core mapping ----------------------------------------------------------

struct MappingConfig {
    std::map<std::string, std::uint16_t> qubit_core;

    std::uint16_t core_of(const std::string& qubit) const;
};

// Channel-name convention tying the compiler's destinations to the channel
// table: "<qubit>.qdrv", "<qubit>.rdrv", "<qubit>.rdemod".
std::string drive_channel_name(const std::string& qubit);
std::string readout_drive_channel_name(const std::string& qubit);
std::string demod_channel_name(const std::string& qubit);
// Leading "<qubit>." prefix of a destination name.
std::string qubit_of_dest(const std::string& dest);

ChannelConfig load_channel_config(const std::string& path);
CalibrationSet load_calibration(const std::string& path);
MappingConfig load_mapping(const std::string& path);

ChannelConfig parse_channel_config(const std::string& text, const std::string& context);
CalibrationSet parse_calibration(const std::string& text, const std::string& context);
MappingConfig parse_mapping(const std::string& text, const std::string& context);

} // namespace qcs
