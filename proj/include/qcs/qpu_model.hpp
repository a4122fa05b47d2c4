#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qcs/config.hpp"
#include "qcs/dsp.hpp"

// Stochastic single-qubit backend closing the control loop: drive pulses
// rotate a product state, measurements collapse it and answer with
// state-dependent IQ (directly, or as a synthetic ADC tone for the DSP
// chain to demodulate). No entanglement, no decay.

namespace qcs {

struct QubitModelSetup {
    std::string name;
    double drive_freq_hz = 0.0;
    double freq_tolerance_hz = 0.0; // pulses within this of drive_freq rotate; others are identity
    double x90_weight = 1.0;        // sum of |amp * env| for the calibrated X90 pulse
    double readout_amp = 1.0;       // A: response amplitude / noiseless IQ magnitude
    double dispersive_phase = 0.0;  // response phase is +theta_d for |0>, -theta_d for |1>
    double iq_sigma = 0.0;          // Gaussian IQ noise (per axis)
};

struct QubitState {
    cplx c0{1.0, 0.0};
    cplx c1{0.0, 0.0};

    double p1() const { return std::norm(c1); }
};

class QpuModel {
public:
    explicit QpuModel(std::vector<QubitModelSetup> qubits, std::uint64_t seed = 1);

    // Resets every qubit to |0> and reseeds the generator.
    void reset(std::uint64_t seed);

    // Rotates by theta = (pi/2) * sum|samples| / x90_weight about the
    // XY-plane axis at `phase` when the carrier is on resonance; otherwise
    // leaves the state unchanged.
    void apply_drive(const std::string& qubit, const std::vector<cplx>& samples,
                     double carrier_freq_hz, double phase_rad);

    // Samples the measurement bit with P(1) = |c1|^2 and collapses.
    int measure(const std::string& qubit);

    // Noiseless point A*e^{j phi_bit} plus Gaussian noise. With the demo
    // convention theta_d = pi/2 the points sit at (0, +A) and (0, -A).
    IqPoint ideal_iq(const std::string& qubit, int bit);

    // State-dependent readout response: amp * cos(2*pi*f*n + phi_bit) for n
    // in [n0, n0+count), f in cycles per ADC sample, plus white noise scaled
    // so the integrated IQ noise matches iq_sigma over `window` samples.
    std::vector<double> response_samples(const std::string& qubit, int bit, std::uint64_t n0,
                                         std::size_t count, double freq_cycles_per_sample,
                                         std::size_t window);

    const QubitState& state(const std::string& qubit) const;
    // Test hook: force a definite computational state.
    void set_state(const std::string& qubit, int bit);

private:
    struct Entry {
        QubitModelSetup setup;
        QubitState state;
    };

    Entry& entry(const std::string& qubit);
    const Entry& entry(const std::string& qubit) const;

    std::map<std::string, Entry> qubits_;
    std::mt19937_64 rng_;
};

// Model setups derived from the calibration set. The X90 reference weight is
// computed through the same quantization path the assembler uses, so a
// calibrated X90 pulse reproduces a pi/2 rotation exactly.
std::vector<QubitModelSetup> model_setups_from_calibration(const CalibrationSet& cal,
                                                           const ChannelConfig& channels);

} // namespace qcs
