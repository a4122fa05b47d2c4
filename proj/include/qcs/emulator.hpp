#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcs/isa.hpp"

// Cycle-accurate lockstep emulator for the distributed processor: timed
// pulse dispatch against each core's qclk counter, ALU/register semantics,
// halt-until-result function-processor reads, and barrier synchronization
// that resets the participating cores' time references.
//
// Instruction latencies (cycles from issue to retirement, inclusive):
//   Pulse        4, plus the wait until qclk reaches the command time
//   AluOp, Jump  4
//   BranchAlu    5
//   ReadFproc    5 + wait for the value
//   BranchFproc  5 + wait for the value
//   Sync         5 + wait for the barrier
//   Halt         4
// A pulse whose command time cannot be met (time < qclk + 3 at issue) is a
// hard pulse-late error.

namespace qcs {

enum class CoreStatus { Running, WaitingFproc, WaitingSync, Halted };

struct PulseEvent {
    std::uint64_t cycle = 0; // global cycle of emission
    std::uint64_t qclk = 0;  // emitting core's qclk (equals cmd time)
    std::uint16_t channel = 0;
    std::uint16_t core_id = 0;
    PulseCommand cmd;
};

struct RetireRecord {
    std::uint16_t core_id = 0;
    Opcode kind = Opcode::Halt;
    std::uint64_t issue_cycle = 0;
    std::uint64_t retire_cycle = 0;
    std::uint64_t stall_cycles = 0; // cycles waited beyond the fixed latency
};

struct SyncReleaseRecord {
    std::uint16_t core_id = 0;
    std::uint8_t barrier_id = 0;
    std::uint64_t release_cycle = 0;
    std::uint64_t qclk_at_resume = 0;
};

struct CoreState {
    std::uint16_t core_id = 0;
    std::uint32_t pc = 0;
    RegisterFile regs;
    std::uint64_t qclk = 0;
    CoreStatus status = CoreStatus::Running;

    bool inflight = false;
    std::uint64_t issue_cycle = 0;
    std::uint64_t min_retire = 0;
};

struct Delivery {
    std::uint64_t cycle = 0;
    std::uint16_t fproc_id = 0;
    std::int32_t value = 0;
};

enum class RunOutcome { AllHalted, BudgetExhausted };

struct MachineOptions {
    bool trace = false;
};

class Machine {
public:
    Machine(const ProgramBinary& program, MachineOptions options = {});

    // Appends the value to every core's FIFO for this fproc channel; a core
    // waiting on the channel consumes its copy on the next evaluated cycle.
    void deliver_fproc(std::uint16_t fproc_id, std::int32_t value);

    // Advances one global cycle.
    void step();

    // Steps until all cores halt or the budget runs out, applying scripted
    // deliveries at their cycles. Throws DeadlockError when every live core
    // is waiting and nothing can unblock it.
    RunOutcome run(std::uint64_t max_cycles, const std::vector<Delivery>& script = {});

    bool all_halted() const;
    std::uint64_t global_cycle() const { return global_cycle_; }
    const std::vector<PulseEvent>& events() const { return events_; }
    const std::vector<CoreState>& cores() const { return cores_; }
    const CoreState& core_by_id(std::uint16_t id) const;
    const std::vector<RetireRecord>& trace() const { return trace_; }
    const std::vector<SyncReleaseRecord>& sync_trace() const { return sync_trace_; }

    // Description of why the machine cannot progress, or nullopt if it can.
    // `more_deliveries` tells the check whether external input may still come.
    std::optional<std::string> stuck_report(bool more_deliveries) const;

private:
    struct Waiting;

    void evaluate_core(std::size_t idx);
    void retire(std::size_t idx, std::uint64_t stall, std::uint32_t next_pc);
    void release_barriers();
    const Instruction& fetch(const CoreState& core) const;
    std::int32_t alu_apply(AluKind op, std::int32_t lhs, std::int32_t rhs) const;

    std::vector<std::vector<Instruction>> programs_;
    std::vector<CoreState> cores_;
    std::map<std::uint16_t, std::size_t> core_index_;
    std::vector<std::map<std::uint16_t, std::deque<std::int32_t>>> mailboxes_;
    std::map<std::uint8_t, std::map<std::size_t, std::uint64_t>> barrier_arrivals_;
    std::vector<bool> released_this_cycle_;
    std::uint64_t global_cycle_ = 0;
    std::vector<PulseEvent> events_;
    MachineOptions options_;
    std::vector<RetireRecord> trace_;
    std::vector<SyncReleaseRecord> sync_trace_;
};

// Event log CSV: "cycle,channel,freq_word,phase_word,amp_word,length,env_addr".
std::string events_to_csv(const std::vector<PulseEvent>& events);

// Delivery script CSV: "cycle,fproc_id,value" (header optional).
std::vector<Delivery> parse_delivery_script(const std::string& text);

} // namespace qcs
