#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcs/circuit.hpp"
#include "qcs/config.hpp"
#include "qcs/ir.hpp"

// Compiler passes: gate resolution, virtual-phase application, ASAP
// scheduling, and the per-core split. The output is one pulse-level program
// per core plus the envelope shapes it references.

namespace qcs {

// --- Per-core pulse-level program -------------------------------------------

struct CoreTimedPulse {
    std::uint64_t time = 0;
    std::string dest;
    double freq = 0.0;  // Hz; for demod windows this is the DLO frequency
    double phase = 0.0; // rad
    double amp = 0.0;
    std::string envelope; // empty for demod windows
    std::uint32_t length_ticks = 0;
    bool is_demod = false;

    bool operator==(const CoreTimedPulse&) const = default;
};

// Read the discriminated bit for `result` into a core-local register.
struct CoreReadResult {
    std::string result;
    std::uint16_t fproc = 0;
};

struct CoreItem;

// Condition source for a lowered if/else: the fproc channel directly (first
// use on a core that did not measure the result) or a register written by an
// earlier read (measuring core, or repeated use).
struct CoreCond {
    enum class Kind { Fproc, Register } kind = Kind::Fproc;
    std::uint16_t fproc = 0;
    std::string result; // register form: resolved to a register at assembly
    int expected_bit = 1;
};

struct CoreIfElse {
    std::uint64_t time = 0; // branch decision point in the schedule
    CoreCond cond;
    std::vector<CoreItem> then_items;
    std::vector<CoreItem> else_items;
};

struct CoreItem {
    std::variant<CoreTimedPulse, CoreReadResult, CoreIfElse> v;
};

struct CoreProgram {
    std::uint16_t core_id = 0;
    std::vector<CoreItem> items;
};

struct CompiledProgram {
    std::vector<CoreProgram> cores;                 // ordered by core id
    std::uint64_t sync_core_mask = 0;               // participants of the leading barrier
    std::vector<std::string> qubits;                // lexicographic
    std::map<std::string, std::uint16_t> fproc_of;  // qubit -> fproc channel
    std::map<std::string, std::string> result_qubit;
    std::map<std::string, EnvelopeShape> envelopes;
};

// --- Passes -----------------------------------------------------------------

IrProgram resolve_gates(const CircuitProgram& prog, const CalibrationSet& cal);

// Folds VirtualZ nodes into the phases of subsequent qubit-drive pulses.
// Accumulation inside a conditional arm is local to that arm.
IrProgram apply_virtual_z(IrProgram ir);

// ASAP schedule in qclk ticks: ops start at the max ready time of every
// channel and qubit they touch; a conditional may not start before
// measure start + demod offset + readout window + feedback latency; both
// arms are padded to equal duration.
IrProgram schedule(IrProgram ir);

CompiledProgram split_per_core(const IrProgram& ir, const MappingConfig& mapping);

// Convenience pipeline: parse -> resolve -> virtual-z -> schedule -> split.
CompiledProgram compile_circuit(const CircuitProgram& prog, const CalibrationSet& cal,
                                const MappingConfig& mapping);

// --- Serialization ----------------------------------------------------------

std::string compiled_to_json(const CompiledProgram& prog);
CompiledProgram compiled_from_json(const std::string& text, const std::string& context);

// Human-readable schedule listing, one line per timed item.
std::string schedule_listing(const CompiledProgram& prog);

} // namespace qcs
