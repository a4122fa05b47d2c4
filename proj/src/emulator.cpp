#include "qcs/emulator.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

namespace qcs {

namespace {

constexpr std::uint64_t latency_of(const Instruction& instr) {
    return std::visit(
        [](const auto& in) -> std::uint64_t {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, PulseInstr>)
                return 4;
            else if constexpr (std::is_same_v<T, AluInstr>)
                return 4;
            else if constexpr (std::is_same_v<T, JumpInstr>)
                return 4;
            else if constexpr (std::is_same_v<T, BranchAluInstr>)
                return 5;
            else if constexpr (std::is_same_v<T, ReadFprocInstr>)
                return 5;
            else if constexpr (std::is_same_v<T, BranchFprocInstr>)
                return 5;
            else if constexpr (std::is_same_v<T, SyncInstr>)
                return 5;
            else
                return 4; // Halt
        },
        instr);
}

Opcode opcode_of(const Instruction& instr) {
    return std::visit(
        [](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, PulseInstr>)
                return Opcode::Pulse;
            else if constexpr (std::is_same_v<T, AluInstr>)
                return Opcode::Alu;
            else if constexpr (std::is_same_v<T, JumpInstr>)
                return Opcode::Jump;
            else if constexpr (std::is_same_v<T, BranchAluInstr>)
                return Opcode::BranchAlu;
            else if constexpr (std::is_same_v<T, ReadFprocInstr>)
                return Opcode::ReadFproc;
            else if constexpr (std::is_same_v<T, BranchFprocInstr>)
                return Opcode::BranchFproc;
            else if constexpr (std::is_same_v<T, SyncInstr>)
                return Opcode::Sync;
            else
                return Opcode::Halt;
        },
        instr);
}

} // namespace

Machine::Machine(const ProgramBinary& program, MachineOptions options) : options_(options) {
    std::vector<const CoreBinary*> sorted;
    for (const auto& c : program.cores)
        sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const CoreBinary* a, const CoreBinary* b) { return a->core_id < b->core_id; });
    for (const auto* c : sorted) {
        if (core_index_.count(c->core_id))
            throw EmulatorError(fmt::format("duplicate core id {}", c->core_id));
        core_index_[c->core_id] = cores_.size();
        CoreState state;
        state.core_id = c->core_id;
        cores_.push_back(state);
        programs_.push_back(c->instructions);
    }
    mailboxes_.resize(cores_.size());
    released_this_cycle_.assign(cores_.size(), false);
}

void Machine::deliver_fproc(std::uint16_t fproc_id, std::int32_t value) {
    for (auto& box : mailboxes_)
        box[fproc_id].push_back(value);
}

const Instruction& Machine::fetch(const CoreState& core) const {
    const auto& program = programs_[core_index_.at(core.core_id)];
    if (core.pc >= program.size())
        throw EmulatorError(fmt::format("core {}: pc {} out of bounds ({} instructions)",
                                        core.core_id, core.pc, program.size()));
    return program[core.pc];
}

std::int32_t Machine::alu_apply(AluKind op, std::int32_t lhs, std::int32_t rhs) const {
    // add/sub wrap around in 32 bits; comparisons yield 1/0
    auto ul = static_cast<std::uint32_t>(lhs);
    auto ur = static_cast<std::uint32_t>(rhs);
    switch (op) {
    case AluKind::Add: return static_cast<std::int32_t>(ul + ur);
    case AluKind::Sub: return static_cast<std::int32_t>(ul - ur);
    case AluKind::Eq: return lhs == rhs ? 1 : 0;
    case AluKind::Gt: return lhs > rhs ? 1 : 0;
    case AluKind::Lt: return lhs < rhs ? 1 : 0;
    case AluKind::Ge: return lhs >= rhs ? 1 : 0;
    case AluKind::Le: return lhs <= rhs ? 1 : 0;
    }
    throw EmulatorError("invalid ALU op");
}

void Machine::retire(std::size_t idx, std::uint64_t stall, std::uint32_t next_pc) {
    CoreState& core = cores_[idx];
    if (options_.trace)
        trace_.push_back({core.core_id, opcode_of(fetch(core)), core.issue_cycle, global_cycle_, stall});
    core.pc = next_pc;
    core.inflight = false;
    core.status = CoreStatus::Running;
}

void Machine::evaluate_core(std::size_t idx) {
    CoreState& core = cores_[idx];
    if (core.status == CoreStatus::Halted)
        return;

    if (!core.inflight) {
        fetch(core); // bounds check
        core.inflight = true;
        core.issue_cycle = global_cycle_;
        core.min_retire = global_cycle_ + latency_of(fetch(core)) - 1;
    }

    const Instruction& instr = fetch(core);
    const std::uint64_t c = global_cycle_;

    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, PulseInstr>) {
                if (core.issue_cycle == c && std::uint64_t{in.time} < core.qclk + 3)
                    throw EmulatorError(fmt::format(
                        "pulse-late on core {}: command time {} already passed (qclk {} at issue, channel {})",
                        core.core_id, in.time, core.qclk, in.dest_channel));
                if (c >= core.min_retire && core.qclk == in.time) {
                    events_.push_back({c, core.qclk, in.dest_channel, core.core_id, in.cmd});
                    retire(idx, c - core.min_retire, core.pc + 1);
                }
            } else if constexpr (std::is_same_v<T, AluInstr>) {
                if (c < core.min_retire)
                    return;
                std::int32_t rhs = in.rhs.is_immediate ? in.rhs.immediate : core.regs.read(in.rhs.reg);
                std::int32_t result = alu_apply(in.op, core.regs.read(in.lhs), rhs);
                std::uint32_t next_pc = core.pc + 1;
                switch (in.dest_kind) {
                case AluDestKind::Register:
                    core.regs.write(in.dest_reg, result);
                    break;
                case AluDestKind::QclkIncrement:
                    core.qclk += static_cast<std::uint64_t>(static_cast<std::int64_t>(result));
                    break;
                case AluDestKind::InstructionPointer:
                    next_pc = static_cast<std::uint32_t>(result);
                    break;
                }
                retire(idx, 0, next_pc);
            } else if constexpr (std::is_same_v<T, JumpInstr>) {
                if (c >= core.min_retire)
                    retire(idx, 0, in.target);
            } else if constexpr (std::is_same_v<T, BranchAluInstr>) {
                if (c < core.min_retire)
                    return;
                std::int32_t rhs = in.rhs.is_immediate ? in.rhs.immediate : core.regs.read(in.rhs.reg);
                std::int32_t result = alu_apply(in.op, core.regs.read(in.lhs), rhs);
                retire(idx, 0, result != 0 ? in.target : core.pc + 1);
            } else if constexpr (std::is_same_v<T, ReadFprocInstr>) {
                if (c < core.min_retire)
                    return;
                auto& box = mailboxes_[idx][in.fproc_id];
                if (box.empty()) {
                    core.status = CoreStatus::WaitingFproc;
                    return;
                }
                std::int32_t value = box.front();
                box.pop_front();
                core.regs.write(in.dest_reg, value);
                retire(idx, c - core.min_retire, core.pc + 1);
            } else if constexpr (std::is_same_v<T, BranchFprocInstr>) {
                if (c < core.min_retire)
                    return;
                auto& box = mailboxes_[idx][in.fproc_id];
                if (box.empty()) {
                    core.status = CoreStatus::WaitingFproc;
                    return;
                }
                std::int32_t value = box.front();
                box.pop_front();
                retire(idx, c - core.min_retire, value == in.compare_value ? in.target : core.pc + 1);
            } else if constexpr (std::is_same_v<T, SyncInstr>) {
                if (c < core.min_retire)
                    return;
                if (core.status != CoreStatus::WaitingSync) {
                    if (((in.core_mask >> core.core_id) & 1) == 0)
                        throw EmulatorError(fmt::format(
                            "core {} executes sync barrier {} without being in its mask 0x{:x}",
                            core.core_id, in.barrier_id, in.core_mask));
                    for (std::uint16_t id = 0; id < 64; ++id)
                        if (((in.core_mask >> id) & 1) != 0 && !core_index_.count(id))
                            throw EmulatorError(fmt::format(
                                "sync barrier {} names unknown core {}", in.barrier_id, id));
                    core.status = CoreStatus::WaitingSync;
                    barrier_arrivals_[in.barrier_id][idx] = c;
                }
                // releases are processed after all cores have been evaluated
            } else { // Halt
                if (c >= core.min_retire) {
                    if (options_.trace)
                        trace_.push_back({core.core_id, Opcode::Halt, core.issue_cycle, c, 0});
                    core.inflight = false;
                    core.status = CoreStatus::Halted;
                }
            }
        },
        instr);
}

void Machine::release_barriers() {
    for (auto it = barrier_arrivals_.begin(); it != barrier_arrivals_.end();) {
        std::uint8_t barrier_id = it->first;
        auto& arrivals = it->second;
        // Mask is identical across participants; read it from any arrival.
        std::size_t any_idx = arrivals.begin()->first;
        const auto& sync = std::get<SyncInstr>(fetch(cores_[any_idx]));
        bool complete = true;
        for (std::uint16_t id = 0; id < 64 && complete; ++id)
            if (((sync.core_mask >> id) & 1) != 0 && !arrivals.count(core_index_.at(id)))
                complete = false;
        if (!complete) {
            ++it;
            continue;
        }
        for (auto& [idx, arrival_cycle] : arrivals) {
            CoreState& core = cores_[idx];
            if (options_.trace)
                trace_.push_back({core.core_id, Opcode::Sync, core.issue_cycle, global_cycle_,
                                  global_cycle_ - core.min_retire});
            core.pc = core.pc + 1;
            core.inflight = false;
            core.status = CoreStatus::Running;
            core.qclk = 0;
            released_this_cycle_[idx] = true;
            sync_trace_.push_back({core.core_id, barrier_id, global_cycle_, core.qclk});
        }
        it = barrier_arrivals_.erase(it);
    }
}

void Machine::step() {
    std::fill(released_this_cycle_.begin(), released_this_cycle_.end(), false);
    for (std::size_t idx = 0; idx < cores_.size(); ++idx)
        evaluate_core(idx);
    release_barriers();
    for (std::size_t idx = 0; idx < cores_.size(); ++idx) {
        CoreState& core = cores_[idx];
        if (core.status == CoreStatus::Halted)
            continue;
        if (released_this_cycle_[idx])
            continue; // qclk reads 0 on the resume cycle
        ++core.qclk;
    }
    ++global_cycle_;
}

bool Machine::all_halted() const {
    return std::all_of(cores_.begin(), cores_.end(),
                       [](const CoreState& c) { return c.status == CoreStatus::Halted; });
}

const CoreState& Machine::core_by_id(std::uint16_t id) const {
    return cores_.at(core_index_.at(id));
}

std::optional<std::string> Machine::stuck_report(bool more_deliveries) const {
    bool any_live = false;
    std::string report;
    for (std::size_t idx = 0; idx < cores_.size(); ++idx) {
        const CoreState& core = cores_[idx];
        switch (core.status) {
        case CoreStatus::Halted:
            continue;
        case CoreStatus::Running:
            return std::nullopt;
        case CoreStatus::WaitingFproc: {
            const auto& instr = fetch(core);
            std::uint16_t id = std::holds_alternative<ReadFprocInstr>(instr)
                                   ? std::get<ReadFprocInstr>(instr).fproc_id
                                   : std::get<BranchFprocInstr>(instr).fproc_id;
            auto it = mailboxes_[idx].find(id);
            if (it != mailboxes_[idx].end() && !it->second.empty())
                return std::nullopt; // will consume next cycle
            if (more_deliveries)
                return std::nullopt;
            report += fmt::format("core {} waiting on fproc {} with an empty mailbox; ", core.core_id, id);
            any_live = true;
            break;
        }
        case CoreStatus::WaitingSync: {
            const auto& sync = std::get<SyncInstr>(fetch(core));
            report += fmt::format("core {} waiting at barrier {} (mask 0x{:x}); ", core.core_id,
                                  sync.barrier_id, sync.core_mask);
            any_live = true;
            break;
        }
        }
    }
    if (!any_live)
        return std::nullopt; // all halted
    return report;
}

RunOutcome Machine::run(std::uint64_t max_cycles, const std::vector<Delivery>& script) {
    if (max_cycles == 0)
        throw EmulatorError("run requires a positive cycle budget");
    std::size_t next_delivery = 0;
    auto sorted = script;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Delivery& a, const Delivery& b) { return a.cycle < b.cycle; });
    std::uint64_t start = global_cycle_;
    while (global_cycle_ - start < max_cycles) {
        if (all_halted())
            return RunOutcome::AllHalted;
        while (next_delivery < sorted.size() && sorted[next_delivery].cycle <= global_cycle_) {
            deliver_fproc(sorted[next_delivery].fproc_id, sorted[next_delivery].value);
            ++next_delivery;
        }
        if (auto report = stuck_report(next_delivery < sorted.size()))
            throw DeadlockError(fmt::format("deadlock at cycle {}: {}", global_cycle_, *report));
        step();
    }
    return all_halted() ? RunOutcome::AllHalted : RunOutcome::BudgetExhausted;
}

std::string events_to_csv(const std::vector<PulseEvent>& events) {
    std::string out = "cycle,channel,freq_word,phase_word,amp_word,length,env_addr\n";
    for (const auto& e : events)
        out += fmt::format("{},{},{},{},{},{},{}\n", e.cycle, e.channel, e.cmd.freq_word,
                           e.cmd.phase_word, e.cmd.amp_word, e.cmd.length, e.cmd.env_addr);
    return out;
}

std::vector<Delivery> parse_delivery_script(const std::string& text) {
    std::vector<Delivery> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind("cycle", 0) == 0 || line[0] == '#')
            continue;
        Delivery d;
        unsigned long long cycle;
        unsigned fproc;
        long value;
        if (std::sscanf(line.c_str(), "%llu,%u,%ld", &cycle, &fproc, &value) != 3)
            throw ConfigError(fmt::format("delivery script line {}: expected 'cycle,fproc_id,value'", lineno));
        d.cycle = cycle;
        d.fproc_id = static_cast<std::uint16_t>(fproc);
        d.value = static_cast<std::int32_t>(value);
        out.push_back(d);
    }
    return out;
}

} // namespace qcs
