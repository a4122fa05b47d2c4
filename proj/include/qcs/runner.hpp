#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcs/assembler.hpp"
#include "qcs/config.hpp"
#include "qcs/emulator.hpp"
#include "qcs/qpu_model.hpp"

// Closed-loop shot execution: the emulator produces pulse events, drive
// events rotate the qubit model, demod windows trigger measurement and
// (ideal-iq or via the DSP chain) discrimination, and the resulting bits are
// delivered to the function-processor mailboxes.

namespace qcs {

// Discriminated bits are delivered this many ticks after the demod window
// closes. The compiler's feedback latency must exceed it (plus the branch
// pipeline) for dependent pulses to be schedulable.
inline constexpr std::uint64_t kFprocDeliveryLatencyTicks = 16;

enum class ReadoutMode { IdealIq, Waveform };

struct MeasurementRecord {
    std::uint64_t cycle = 0; // demod window start
    std::string qubit;
    int bit = 0;      // discriminated bit (what the control flow sees)
    int true_bit = 0; // state the model collapsed to
};

struct RunReport {
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    ReadoutMode mode = ReadoutMode::IdealIq;
    std::map<std::string, std::uint64_t> counts; // final bitstring -> occurrences
    std::vector<std::string> qubit_order;        // column order of the bitstrings
    double mean_cycles_per_shot = 0.0;
    std::vector<std::vector<MeasurementRecord>> per_shot; // kept when record_shots
};

struct WaveformDump {
    // tap name ("dac0", "adc.Q0.rdemod.0", "dlo.Q0.rdemod.0") -> samples
    std::map<std::string, std::vector<cplx>> taps;
};

struct ShotRunnerOptions {
    std::uint64_t shots = 1;
    std::uint64_t seed = 1;
    ReadoutMode mode = ReadoutMode::IdealIq;
    bool record_shots = false;
    bool trace = false; // keep emulator retirement traces (first shot)
    bool dump_waveforms = false; // capture DAC/ADC/DLO taps on the first shot
    std::uint64_t max_cycles_per_shot = 1'000'000;
    std::size_t acquisition_capacity = 1 << 16;
};

class ShotRunner {
public:
    ShotRunner(const ProgramBinary& program, const std::map<std::uint16_t, EnvelopeImage>& envelopes,
               const ChannelConfig& channels, const CalibrationSet& cal);

    RunReport run(const ShotRunnerOptions& options);

    // Parameterized reuse: run a different binary against the already-loaded
    // envelope memories (commands change, waveform data does not).
    RunReport run(const ShotRunnerOptions& options, const ProgramBinary& program);

    // Populated by run() when dump_waveforms/trace are set (first shot only).
    const WaveformDump& waveforms() const { return waveforms_; }
    const std::vector<RetireRecord>& first_shot_trace() const { return first_shot_trace_; }
    const std::vector<SyncReleaseRecord>& first_shot_sync_trace() const { return first_shot_sync_trace_; }
    const std::vector<PulseEvent>& first_shot_events() const { return first_shot_events_; }

    // Envelope memories live across shots; reruns must not rewrite them.
    const std::map<std::uint16_t, EnvelopeMemory>& envelope_memories() const { return memories_; }
    std::map<std::uint16_t, EnvelopeMemory>& envelope_memories() { return memories_; }

private:
    std::vector<MeasurementRecord> run_shot(std::uint64_t shot_index,
                                            const ShotRunnerOptions& options, bool capture);

    const ProgramBinary* program_;
    const ChannelConfig& channels_;
    const CalibrationSet& cal_;
    std::map<std::uint16_t, EnvelopeMemory> memories_;
    QpuModel model_;
    WaveformDump waveforms_;
    std::vector<RetireRecord> first_shot_trace_;
    std::vector<SyncReleaseRecord> first_shot_sync_trace_;
    std::vector<PulseEvent> first_shot_events_;
    std::uint64_t last_shot_cycles_ = 0;
};

std::string report_to_json(const RunReport& report);
std::string counts_to_csv(const RunReport& report);
std::string waveform_to_csv(const std::vector<cplx>& samples);

const char* readout_mode_name(ReadoutMode mode);

} // namespace qcs
