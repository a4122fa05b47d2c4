#include "qcs/qpu_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qcs/isa.hpp"

namespace qcs {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNormTolerance = 1e-9;
} // namespace

QpuModel::QpuModel(std::vector<QubitModelSetup> qubits, std::uint64_t seed) {
    for (auto& q : qubits) {
        if (!(q.x90_weight > 0.0))
            throw ConfigError(fmt::format("qubit '{}' has a non-positive X90 reference weight", q.name));
        std::string name = q.name;
        qubits_[name] = Entry{std::move(q), QubitState{}};
    }
    rng_.seed(seed);
}

void QpuModel::reset(std::uint64_t seed) {
    for (auto& [name, e] : qubits_)
        e.state = QubitState{};
    rng_.seed(seed);
}

QpuModel::Entry& QpuModel::entry(const std::string& qubit) {
    auto it = qubits_.find(qubit);
    if (it == qubits_.end())
        throw ConfigError(fmt::format("qubit '{}' not present in the model", qubit));
    return it->second;
}

const QpuModel::Entry& QpuModel::entry(const std::string& qubit) const {
    auto it = qubits_.find(qubit);
    if (it == qubits_.end())
        throw ConfigError(fmt::format("qubit '{}' not present in the model", qubit));
    return it->second;
}

void QpuModel::apply_drive(const std::string& qubit, const std::vector<cplx>& samples,
                           double carrier_freq_hz, double phase_rad) {
    Entry& e = entry(qubit);
    if (samples.empty())
        return;
    if (std::abs(carrier_freq_hz - e.setup.drive_freq_hz) > e.setup.freq_tolerance_hz)
        return; // off-resonant pulses are identity

    double weight = 0.0;
    for (const auto& s : samples)
        weight += std::abs(s);
    double theta = 0.5 * 3.14159265358979323846 * weight / e.setup.x90_weight;

    // Rotation about the equatorial axis at angle `phase_rad`:
    //   [ cos(t/2)              -i e^{-i phi} sin(t/2) ]
    //   [ -i e^{+i phi} sin(t/2)            cos(t/2)   ]
    double ct = std::cos(theta / 2.0), st = std::sin(theta / 2.0);
    cplx mi{0.0, -1.0};
    cplx eneg{std::cos(phase_rad), -std::sin(phase_rad)};
    cplx epos{std::cos(phase_rad), std::sin(phase_rad)};
    cplx c0 = ct * e.state.c0 + mi * eneg * st * e.state.c1;
    cplx c1 = mi * epos * st * e.state.c0 + ct * e.state.c1;

    double norm = std::norm(c0) + std::norm(c1);
    if (std::abs(norm - 1.0) > kNormTolerance)
        throw EmulatorError(fmt::format("qubit '{}' state norm drifted to {}", qubit, norm));
    double inv = 1.0 / std::sqrt(norm);
    e.state.c0 = c0 * inv;
    e.state.c1 = c1 * inv;
}

int QpuModel::measure(const std::string& qubit) {
    Entry& e = entry(qubit);
    double p1 = e.state.p1();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bit = u(rng_) < p1 ? 1 : 0;
    e.state = bit ? QubitState{{0.0, 0.0}, {1.0, 0.0}} : QubitState{};
    return bit;
}

IqPoint QpuModel::ideal_iq(const std::string& qubit, int bit) {
    Entry& e = entry(qubit);
    double phi = bit == 0 ? e.setup.dispersive_phase : -e.setup.dispersive_phase;
    double a = e.setup.readout_amp;
    IqPoint iq{a * std::cos(phi), a * std::sin(phi)};
    if (e.setup.iq_sigma > 0.0) {
        std::normal_distribution<double> n(0.0, e.setup.iq_sigma);
        iq.i += n(rng_);
        iq.q += n(rng_);
    }
    return iq;
}

std::vector<double> QpuModel::response_samples(const std::string& qubit, int bit, std::uint64_t n0,
                                               std::size_t count, double freq_cycles_per_sample,
                                               std::size_t window) {
    Entry& e = entry(qubit);
    double phi = bit == 0 ? e.setup.dispersive_phase : -e.setup.dispersive_phase;
    double a = e.setup.readout_amp;
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        double theta = kTwoPi * freq_cycles_per_sample * static_cast<double>(n0 + k) + phi;
        out[k] = a * std::cos(theta);
    }
    if (e.setup.iq_sigma > 0.0 && window > 0) {
        // Per-sample white noise of sd sigma*sqrt(2/W) integrates to IQ
        // noise of sd sigma over a W-sample window.
        std::normal_distribution<double> n(0.0,
                                           e.setup.iq_sigma * std::sqrt(2.0 / static_cast<double>(window)));
        for (auto& s : out)
            s += n(rng_);
    }
    return out;
}

const QubitState& QpuModel::state(const std::string& qubit) const {
    return entry(qubit).state;
}

void QpuModel::set_state(const std::string& qubit, int bit) {
    entry(qubit).state = bit ? QubitState{{0.0, 0.0}, {1.0, 0.0}} : QubitState{};
}

std::vector<QubitModelSetup> model_setups_from_calibration(const CalibrationSet& cal,
                                                           const ChannelConfig& channels) {
    std::vector<QubitModelSetup> out;
    for (const auto& [name, qc] : cal.qubits) {
        QubitModelSetup s;
        s.name = name;
        s.drive_freq_hz = qc.drive_freq_hz;
        s.readout_amp = qc.model.iq_amp;
        s.dispersive_phase = qc.model.dispersive_phase;
        s.iq_sigma = qc.model.iq_sigma;

        const Channel* drive = channels.find(drive_channel_name(name));
        if (!drive)
            throw ConfigError(fmt::format("no drive channel for qubit '{}'", name));
        // One frequency-word LSB; quantized carriers always land inside.
        s.freq_tolerance_hz = drive->sample_rate_hz / 16777216.0;

        auto it = cal.gates.find(CalibrationSet::gate_key("X90", {name}));
        if (it == cal.gates.end() || it->second.empty())
            throw ConfigError(fmt::format("no X90 calibration for qubit '{}'", name));
        const GateTemplatePulse& t = it->second.front();
        auto shape_it = cal.envelopes.find(t.envelope);
        if (shape_it == cal.envelopes.end())
            throw ConfigError(fmt::format("X90 envelope '{}' undefined for qubit '{}'", t.envelope, name));
        std::uint32_t n_samples = t.length_ticks * drive->samples_per_tick();
        auto env = render_envelope(shape_it->second, n_samples, t.envelope);
        // Same quantization the assembler applies: s16 envelope samples and
        // a 10-bit amplitude word.
        double amp = amp_from_word(quantize_amp(t.amp));
        double weight = 0.0;
        for (const auto& c : env) {
            double i = std::round(c.real() * 32767.0) / 32767.0;
            double q = std::round(c.imag() * 32767.0) / 32767.0;
            weight += std::abs(cplx{i, q});
        }
        s.x90_weight = amp * weight;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace qcs
