#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcs/config.hpp"

// Pulse-level intermediate representation. Gate resolution produces untimed
// nodes; the scheduler fills in start times (qclk ticks). Control flow stays
// structured until per-core splitting.

namespace qcs {

struct IrPulse {
    std::string dest; // channel name
    std::string qubit;
    PulseRole role = PulseRole::QubitDrive;
    double freq = 0.0;  // Hz
    double phase = 0.0; // rad
    double amp = 0.0;
    std::string envelope;
    std::uint32_t length_ticks = 0;
    std::optional<std::uint64_t> start; // qclk tick, set by the scheduler
};

// One mid- or end-of-circuit measurement: readout drive pulse, demod window
// starting demod_offset_ticks later, and a function-processor read of the
// discriminated bit on the measured qubit's core.
struct IrMeasure {
    std::string qubit;
    std::string result;
    std::string drive_dest;
    double drive_freq = 0.0;
    double drive_amp = 0.0;
    std::string drive_envelope;
    std::string demod_dest;
    double dlo_freq = 0.0;
    std::uint32_t window_ticks = 0;
    std::uint32_t demod_offset_ticks = 0;
    std::optional<std::uint64_t> start; // readout drive start
};

struct IrVirtualZ {
    std::string qubit;
    double phase = 0.0;
};

struct IrBarrier {
    std::vector<std::string> qubits;
};

struct IrDelay {
    std::vector<std::string> qubits;
    std::uint64_t ticks = 0;
};

struct IrNode;

struct IrIfElse {
    std::string result;
    int expected_bit = 1;
    std::vector<IrNode> then_body;
    std::vector<IrNode> else_body;
    std::optional<std::uint64_t> start; // earliest start of either arm
};

struct IrNode {
    std::variant<IrPulse, IrMeasure, IrVirtualZ, IrBarrier, IrDelay, IrIfElse> v;
};

struct IrProgram {
    std::vector<IrNode> nodes;
    std::vector<std::string> qubits;                 // lexicographic
    std::map<std::string, std::string> result_qubit; // result name -> measured qubit
    std::map<std::string, std::uint16_t> fproc_of;   // qubit -> fproc channel id
    std::map<std::string, EnvelopeShape> envelopes;  // shapes used by the program
    std::uint32_t feedback_latency_ticks = 64;
    bool scheduled = false;
};

} // namespace qcs
