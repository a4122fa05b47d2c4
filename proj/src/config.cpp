#include "qcs/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace qcs {

using nlohmann::json;

namespace {

json parse_json_doc(const std::string& text, const std::string& context) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", context, e.what()));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError(fmt::format("cannot open config file '{}'", path));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

// ---------------------------------------------------------------------------
// ChannelConfig
// ---------------------------------------------------------------------------

const Channel& ChannelConfig::by_id(std::uint16_t id) const {
    if (id >= channels.size())
        throw ConfigError(fmt::format("channel id {} out of range ({} channels)", id, channels.size()));
    return channels[id];
}

std::uint16_t ChannelConfig::id_of(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i].name == name)
            return static_cast<std::uint16_t>(i);
    throw ConfigError(fmt::format("unmapped destination channel '{}'", name));
}

const Channel* ChannelConfig::find(const std::string& name) const {
    for (const auto& c : channels)
        if (c.name == name)
            return &c;
    return nullptr;
}

ChannelConfig parse_channel_config(const std::string& text, const std::string& context) {
    json j = parse_json_doc(text, context);
    ChannelConfig cfg;
    if (!j.contains("channels") || !j["channels"].is_array())
        throw ConfigError(fmt::format("{}: missing 'channels' array", context));
    for (const auto& jc : j["channels"]) {
        Channel c;
        try {
            c.name = jc.at("name").get<std::string>();
            std::string kind = jc.at("kind").get<std::string>();
            if (kind == "qubit-drive")
                c.kind = ChannelKind::QubitDrive;
            else if (kind == "readout-drive")
                c.kind = ChannelKind::ReadoutDrive;
            else if (kind == "readout-demod")
                c.kind = ChannelKind::ReadoutDemod;
            else
                throw ConfigError(fmt::format("{}: unknown channel kind '{}'", context, kind));
            c.core = jc.at("core").get<std::uint16_t>();
            c.converter = jc.at("converter").get<std::uint16_t>();
            c.sample_rate_hz = jc.at("sample_rate").get<double>();
            c.env_capacity = jc.value("env_capacity", std::uint32_t{kEnvelopeMemoryCapacity});
        } catch (const json::exception& e) {
            throw ConfigError(fmt::format("{}: bad channel entry: {}", context, e.what()));
        }
        double ratio = c.sample_rate_hz / kQclkHz;
        if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-9)
            throw ConfigError(fmt::format("{}: channel '{}' sample rate {} is not an integer multiple of the 500 MHz clock",
                                          context, c.name, c.sample_rate_hz));
        if (cfg.find(c.name))
            throw ConfigError(fmt::format("{}: duplicate channel name '{}'", context, c.name));
        cfg.channels.push_back(std::move(c));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

std::vector<cplx> render_envelope(const EnvelopeShape& shape, std::uint32_t n_samples,
                                  const std::string& name) {
    std::vector<cplx> out(n_samples);
    switch (shape.kind) {
    case EnvelopeShape::Kind::Square:
        for (auto& s : out)
            s = {1.0, 0.0};
        break;
    case EnvelopeShape::Kind::Gaussian: {
        double c = (static_cast<double>(n_samples) - 1.0) / 2.0;
        double sig = shape.gauss_sigma * static_cast<double>(n_samples);
        for (std::uint32_t k = 0; k < n_samples; ++k) {
            double d = (static_cast<double>(k) - c) / sig;
            out[k] = {std::exp(-0.5 * d * d), 0.0};
        }
        break;
    }
    case EnvelopeShape::Kind::Samples:
        if (shape.samples.size() != n_samples)
            throw ConfigError(fmt::format("envelope '{}' has {} samples but {} are required", name,
                                          shape.samples.size(), n_samples));
        out = shape.samples;
        break;
    }
    for (const auto& s : out)
        if (std::abs(s) > 1.0 + 1e-12)
            throw ConfigError(fmt::format("envelope '{}' exceeds unit full scale", name));
    return out;
}

// ---------------------------------------------------------------------------
// CalibrationSet
// ---------------------------------------------------------------------------

std::vector<std::string> CalibrationSet::qubit_order() const {
    std::vector<std::string> names;
    names.reserve(qubits.size());
    for (const auto& [name, cal] : qubits)
        names.push_back(name); // std::map iterates lexicographically
    return names;
}

std::uint16_t CalibrationSet::fproc_of(const std::string& qubit) const {
    std::uint16_t i = 0;
    for (const auto& [name, cal] : qubits) {
        if (name == qubit)
            return i;
        ++i;
    }
    throw ConfigError(fmt::format("qubit '{}' not in calibration set", qubit));
}

const QubitCal& CalibrationSet::qubit(const std::string& name) const {
    auto it = qubits.find(name);
    if (it == qubits.end())
        throw ConfigError(fmt::format("qubit '{}' not in calibration set", name));
    return it->second;
}

std::string CalibrationSet::gate_key(const std::string& name, const std::vector<std::string>& qs) {
    std::string key = name + "(";
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (i)
            key += ",";
        key += qs[i];
    }
    key += ")";
    return key;
}

CalibrationSet parse_calibration(const std::string& text, const std::string& context) {
    json j = parse_json_doc(text, context);
    CalibrationSet cal;
    try {
        cal.readout_window_ticks = j.value("readout_window", std::uint32_t{128});
        cal.feedback_latency_ticks = j.value("feedback_latency", std::uint32_t{64});
        cal.demod_window_offset_ticks = j.value("demod_window_offset", std::uint32_t{8});
        cal.model_seed = j.value("model_seed", std::uint64_t{1});

        if (!j.contains("qubits") || !j["qubits"].is_object())
            throw ConfigError(fmt::format("{}: missing 'qubits' object", context));
        for (const auto& [name, q] : j["qubits"].items()) {
            QubitCal qc;
            qc.drive_freq_hz = q.at("drive_freq").get<double>();
            qc.readout_freq_hz = q.at("readout_freq").get<double>();
            qc.readout_amp = q.at("readout_amp").get<double>();
            qc.readout_envelope = q.value("readout_env", std::string("readout"));
            if (q.contains("discriminator")) {
                const auto& d = q["discriminator"];
                qc.discriminator.rotation = d.value("rotation", 0.0);
                if (d.contains("offset"))
                    qc.discriminator.offset = {d["offset"].at(0).get<double>(),
                                               d["offset"].at(1).get<double>()};
            }
            if (q.contains("model")) {
                const auto& m = q["model"];
                qc.model.iq_amp = m.value("iq_amp", 1.0);
                qc.model.dispersive_phase = m.value("dispersive_phase", 0.0);
                qc.model.iq_sigma = m.value("iq_sigma", 0.0);
            }
            cal.qubits.emplace(name, std::move(qc));
        }

        if (j.contains("envelopes")) {
            for (const auto& [name, e] : j["envelopes"].items()) {
                EnvelopeShape shape;
                std::string kind = e.at("kind").get<std::string>();
                if (kind == "square") {
                    shape.kind = EnvelopeShape::Kind::Square;
                } else if (kind == "gaussian") {
                    shape.kind = EnvelopeShape::Kind::Gaussian;
                    shape.gauss_sigma = e.value("sigma", 0.25);
                    if (!(shape.gauss_sigma > 0.0))
                        throw ConfigError(fmt::format("{}: envelope '{}' sigma must be positive", context, name));
                } else if (kind == "samples") {
                    shape.kind = EnvelopeShape::Kind::Samples;
                    const auto& iv = e.at("i");
                    const auto& qv = e.at("q");
                    if (iv.size() != qv.size())
                        throw ConfigError(fmt::format("{}: envelope '{}' i/q length mismatch", context, name));
                    for (std::size_t k = 0; k < iv.size(); ++k)
                        shape.samples.emplace_back(iv.at(k).get<double>(), qv.at(k).get<double>());
                } else {
                    throw ConfigError(fmt::format("{}: unknown envelope kind '{}'", context, kind));
                }
                cal.envelopes.emplace(name, std::move(shape));
            }
        }

        if (j.contains("gates")) {
            for (const auto& [key, list] : j["gates"].items()) {
                std::vector<GateTemplatePulse> pulses;
                for (const auto& p : list) {
                    GateTemplatePulse t;
                    t.qubit = p.at("qubit").get<std::string>();
                    std::string role = p.value("role", std::string("drive"));
                    if (role == "drive")
                        t.role = PulseRole::QubitDrive;
                    else if (role == "readout")
                        t.role = PulseRole::ReadoutDrive;
                    else
                        throw ConfigError(fmt::format("{}: unknown pulse role '{}'", context, role));
                    t.envelope = p.at("env").get<std::string>();
                    t.amp = p.at("amp").get<double>();
                    t.length_ticks = p.at("length").get<std::uint32_t>();
                    t.phase = p.value("phase", 0.0);
                    if (t.length_ticks == 0)
                        throw ConfigError(fmt::format("{}: gate '{}' pulse length must be positive", context, key));
                    pulses.push_back(std::move(t));
                }
                cal.gates.emplace(key, std::move(pulses));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", context, e.what()));
    }
    return cal;
}

// ---------------------------------------------------------------------------
// MappingConfig
// ---------------------------------------------------------------------------

std::uint16_t MappingConfig::core_of(const std::string& qubit) const {
    auto it = qubit_core.find(qubit);
    if (it == qubit_core.end())
        throw ConfigError(fmt::format("qubit '{}' missing from core mapping", qubit));
    return it->second;
}

MappingConfig parse_mapping(const std::string& text, const std::string& context) {
    json j = parse_json_doc(text, context);
    MappingConfig m;
    if (!j.contains("cores") || !j["cores"].is_object())
        throw ConfigError(fmt::format("{}: missing 'cores' object (qubit -> core id)", context));
    try {
        for (const auto& [qubit, core] : j["cores"].items())
            m.qubit_core.emplace(qubit, core.get<std::uint16_t>());
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", context, e.what()));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Destination naming convention
// ---------------------------------------------------------------------------

std::string drive_channel_name(const std::string& qubit) { return qubit + ".qdrv"; }
std::string readout_drive_channel_name(const std::string& qubit) { return qubit + ".rdrv"; }
std::string demod_channel_name(const std::string& qubit) { return qubit + ".rdemod"; }

std::string qubit_of_dest(const std::string& dest) {
    auto dot = dest.find('.');
    if (dot == std::string::npos || dot == 0)
        throw ConfigError(fmt::format("destination '{}' does not follow the '<qubit>.<role>' convention", dest));
    return dest.substr(0, dot);
}

ChannelConfig load_channel_config(const std::string& path) {
    return parse_channel_config(read_file(path), path);
}

CalibrationSet load_calibration(const std::string& path) {
    return parse_calibration(read_file(path), path);
}

MappingConfig load_mapping(const std::string& path) {
    return parse_mapping(read_file(path), path);
}

} // namespace qcs
