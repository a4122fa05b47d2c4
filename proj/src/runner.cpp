#include "qcs/runner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <fmt/format.h>
#include <json.hpp>

#include "qcs/dsp.hpp"

namespace qcs {

namespace {

// splitmix64: decorrelates per-shot seeds from the master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t shot) {
    std::uint64_t z = seed + (shot + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

ShotRunner::ShotRunner(const ProgramBinary& program,
                       const std::map<std::uint16_t, EnvelopeImage>& envelopes,
                       const ChannelConfig& channels, const CalibrationSet& cal)
    : program_(&program), channels_(channels), cal_(cal),
      model_(model_setups_from_calibration(cal, channels), cal.model_seed) {
    for (const auto& chan : channels.channels) {
        std::uint16_t id = channels.id_of(chan.name);
        memories_.emplace(id, EnvelopeMemory(chan.env_capacity));
    }
    for (const auto& [chan_id, image] : envelopes) {
        auto it = memories_.find(chan_id);
        if (it == memories_.end())
            throw ConfigError(fmt::format("envelope image for unknown channel id {}", chan_id));
        load_envelope_memory(image, it->second);
    }
}

struct ShotOutcome {
    std::vector<MeasurementRecord> records;
    std::uint64_t cycles = 0;
};

namespace {

struct DemodWindow {
    std::uint64_t start_cycle = 0;
    std::uint64_t end_cycle = 0;
    std::string qubit;
    PulseCommand cmd;
    int bit = 0;                  // collapsed at window start
    std::uint64_t start_sample = 0;
    std::uint32_t window_samples = 0;
    std::vector<double> response; // qubit's tone (+ noise) over this window
    bool finished = false;
};

} // namespace

std::vector<MeasurementRecord> ShotRunner::run_shot(std::uint64_t shot_index,
                                                    const ShotRunnerOptions& options, bool capture) {
    Machine machine(*program_, MachineOptions{options.trace && capture});
    model_.reset(mix_seed(options.seed, shot_index));

    std::vector<MeasurementRecord> records;
    std::vector<DemodWindow> windows; // every window of the shot; overlaps sum on the ADC
    std::vector<Delivery> pending_deliveries;
    std::size_t consumed_events = 0;

    std::map<std::uint16_t, std::vector<MuxInput>> dac_inputs;
    std::deque<std::vector<cplx>> dac_hold; // stable storage behind MuxInput pointers
    std::map<std::string, int> window_counter;

    auto finish_window = [&](DemodWindow& w) {
        w.finished = true;
        int bit;
        if (options.mode == ReadoutMode::IdealIq) {
            IqPoint iq = model_.ideal_iq(w.qubit, w.bit);
            bit = discriminate(iq, cal_.qubit(w.qubit).discriminator);
        } else {
            // The shared ADC sees the sum of every response whose window
            // overlaps this one (multiplexed readout).
            std::vector<double> adc(w.window_samples, 0.0);
            for (const auto& other : windows) {
                std::uint64_t lo = std::max(w.start_sample, other.start_sample);
                std::uint64_t hi = std::min(w.start_sample + w.window_samples,
                                            other.start_sample + other.window_samples);
                for (std::uint64_t m = lo; m < hi; ++m)
                    adc[m - w.start_sample] += other.response[m - other.start_sample];
            }
            IqPoint iq = mix_and_integrate(adc, w.cmd.freq_word, 0, w.window_samples);
            bit = discriminate(iq, cal_.qubit(w.qubit).discriminator);

            if (capture && options.dump_waveforms) {
                int n = window_counter[w.qubit]++;
                std::vector<cplx> adc_c(adc.size());
                for (std::size_t k = 0; k < adc.size(); ++k)
                    adc_c[k] = {adc[k], 0.0};
                std::vector<cplx> dlo(w.window_samples);
                double f = static_cast<double>(w.cmd.freq_word) / 16777216.0;
                for (std::uint32_t k = 0; k < w.window_samples; ++k) {
                    double theta = -6.283185307179586476925286766559 * f * static_cast<double>(k);
                    dlo[k] = {std::cos(theta), std::sin(theta)};
                }
                waveforms_.taps[fmt::format("adc.{}.{}", w.qubit, n)] =
                    acquire(adc_c, options.acquisition_capacity).samples;
                waveforms_.taps[fmt::format("dlo.{}.{}", w.qubit, n)] =
                    acquire(dlo, options.acquisition_capacity).samples;
            }
        }
        MeasurementRecord rec;
        rec.cycle = w.start_cycle;
        rec.qubit = w.qubit;
        rec.bit = bit;
        rec.true_bit = w.bit;
        records.push_back(rec);

        std::uint16_t fproc = cal_.fproc_of(w.qubit);
        pending_deliveries.push_back({w.end_cycle + kFprocDeliveryLatencyTicks, fproc, bit});
    };

    while (!machine.all_halted()) {
        if (machine.global_cycle() >= options.max_cycles_per_shot)
            throw EmulatorError(fmt::format("shot {} exceeded the cycle budget {}", shot_index,
                                            options.max_cycles_per_shot));
        for (auto& w : windows)
            if (!w.finished && w.end_cycle <= machine.global_cycle())
                finish_window(w);
        for (auto it = pending_deliveries.begin(); it != pending_deliveries.end();) {
            if (it->cycle <= machine.global_cycle()) {
                machine.deliver_fproc(it->fproc_id, it->value);
                it = pending_deliveries.erase(it);
            } else {
                ++it;
            }
        }
        bool more_input = !pending_deliveries.empty() ||
                          std::any_of(windows.begin(), windows.end(),
                                      [](const DemodWindow& w) { return !w.finished; });
        if (auto report = machine.stuck_report(more_input))
            throw DeadlockError(fmt::format("deadlock at cycle {}: {}", machine.global_cycle(), *report));
        machine.step();

        const auto& events = machine.events();
        for (; consumed_events < events.size(); ++consumed_events) {
            const PulseEvent& e = events[consumed_events];
            const Channel& chan = channels_.by_id(e.channel);
            switch (chan.kind) {
            case ChannelKind::QubitDrive: {
                auto samples = synth_pulse(e.cmd, memories_.at(e.channel));
                model_.apply_drive(qubit_of_dest(chan.name), samples,
                                   freq_from_word(e.cmd.freq_word, chan.sample_rate_hz),
                                   phase_from_word(e.cmd.phase_word));
                if (capture && options.dump_waveforms) {
                    dac_hold.push_back(std::move(samples));
                    dac_inputs[chan.converter].push_back(
                        {static_cast<std::size_t>(e.qclk) * chan.samples_per_tick(), &dac_hold.back()});
                }
                break;
            }
            case ChannelKind::ReadoutDrive: {
                if (capture && options.dump_waveforms) {
                    auto samples = synth_pulse(e.cmd, memories_.at(e.channel));
                    dac_hold.push_back(std::move(samples));
                    dac_inputs[chan.converter].push_back(
                        {static_cast<std::size_t>(e.qclk) * chan.samples_per_tick(), &dac_hold.back()});
                }
                break;
            }
            case ChannelKind::ReadoutDemod: {
                DemodWindow w;
                w.start_cycle = e.cycle;
                w.qubit = qubit_of_dest(chan.name);
                w.cmd = e.cmd;
                w.window_samples = e.cmd.length;
                std::uint32_t spt = chan.samples_per_tick();
                w.end_cycle = e.cycle + (e.cmd.length + spt - 1) / spt;
                w.start_sample = e.qclk * spt;
                // Collapse at the window start; the IQ answer and delivery
                // land after the window closes.
                w.bit = model_.measure(w.qubit);
                if (options.mode == ReadoutMode::Waveform) {
                    double f = static_cast<double>(e.cmd.freq_word) / 16777216.0;
                    w.response = model_.response_samples(w.qubit, w.bit, 0, w.window_samples, f,
                                                         w.window_samples);
                }
                windows.push_back(std::move(w));
                break;
            }
            }
        }
    }
    // Windows still open at halt (programs ending right after a measure).
    for (auto& w : windows)
        if (!w.finished)
            finish_window(w);

    if (capture && options.dump_waveforms) {
        for (auto& [converter, inputs] : dac_inputs) {
            auto mux = mux_readout(inputs);
            waveforms_.taps[fmt::format("dac{}", converter)] =
                acquire(mux.samples, options.acquisition_capacity).samples;
        }
    }
    if (capture && options.trace) {
        first_shot_trace_ = machine.trace();
        first_shot_sync_trace_ = machine.sync_trace();
    }
    if (capture)
        first_shot_events_ = machine.events();
    last_shot_cycles_ = machine.global_cycle();

    std::stable_sort(records.begin(), records.end(),
                     [](const MeasurementRecord& a, const MeasurementRecord& b) { return a.cycle < b.cycle; });
    return records;
}

RunReport ShotRunner::run(const ShotRunnerOptions& options, const ProgramBinary& program) {
    program_ = &program;
    return run(options);
}

RunReport ShotRunner::run(const ShotRunnerOptions& options) {
    if (options.shots == 0)
        throw ConfigError("shot count must be at least 1");
    RunReport report;
    report.shots = options.shots;
    report.seed = options.seed;
    report.mode = options.mode;

    std::uint64_t total_cycles = 0;
    for (std::uint64_t shot = 0; shot < options.shots; ++shot) {
        auto records = run_shot(shot, options, shot == 0);
        total_cycles += last_shot_cycles_;

        std::map<std::string, int> measured; // map order = lexicographic
        for (const auto& rec : records)
            measured[rec.qubit] = rec.bit;
        if (report.qubit_order.empty())
            for (const auto& [q, b] : measured)
                report.qubit_order.push_back(q);

        std::string bits;
        for (const auto& q : report.qubit_order) {
            auto it = measured.find(q);
            bits += it == measured.end() ? '-' : static_cast<char>('0' + it->second);
        }
        ++report.counts[bits];
        if (options.record_shots)
            report.per_shot.push_back(std::move(records));
    }
    report.mean_cycles_per_shot =
        static_cast<double>(total_cycles) / static_cast<double>(options.shots);
    return report;
}

std::string report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["shots"] = report.shots;
    j["seed"] = report.seed;
    j["mode"] = readout_mode_name(report.mode);
    j["qubits"] = report.qubit_order;
    j["counts"] = report.counts;
    j["mean_cycles_per_shot"] = report.mean_cycles_per_shot;
    if (!report.per_shot.empty()) {
        nlohmann::json shots = nlohmann::json::array();
        for (const auto& recs : report.per_shot) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : recs)
                arr.push_back({{"cycle", r.cycle},
                               {"qubit", r.qubit},
                               {"bit", r.bit},
                               {"true_bit", r.true_bit}});
            shots.push_back(arr);
        }
        j["per_shot"] = shots;
    }
    return j.dump(2) + "\n";
}

std::string counts_to_csv(const RunReport& report) {
    std::string out = "bitstring,count\n";
    for (const auto& [bits, count] : report.counts)
        out += fmt::format("{},{}\n", bits, count);
    return out;
}

std::string waveform_to_csv(const std::vector<cplx>& samples) {
    std::string out = "n,i,q\n";
    for (std::size_t n = 0; n < samples.size(); ++n)
        out += fmt::format("{},{},{}\n", n, samples[n].real(), samples[n].imag());
    return out;
}

const char* readout_mode_name(ReadoutMode mode) {
    return mode == ReadoutMode::IdealIq ? "ideal-iq" : "waveform";
}

} // namespace qcs
