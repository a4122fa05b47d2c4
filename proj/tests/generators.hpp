#pragma once

#include <random>
#include <string>
#include <vector>

#include "qcs/circuit.hpp"
#include "qcs/config.hpp"
#include "qcs/isa.hpp"

// Random-input generators shared by the property tests.

namespace qcs::testgen {

inline PulseCommand random_pulse_command(std::mt19937_64& rng) {
    PulseCommand cmd;
    cmd.freq_word = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    cmd.phase_word = static_cast<std::uint16_t>(rng() & 0x3FFF);
    cmd.amp_word = static_cast<std::uint16_t>(rng() & 0x3FF);
    cmd.length = static_cast<std::uint16_t>(rng() & 0xFFF);
    cmd.env_addr = static_cast<std::uint16_t>(rng() & 0xFFF);
    return cmd;
}

inline AluOperand random_operand(std::mt19937_64& rng) {
    if (rng() & 1)
        return AluOperand::from_imm(static_cast<std::int32_t>(rng()));
    return AluOperand::from_reg(static_cast<std::uint8_t>(rng() % kRegisterCount));
}

inline AluKind random_alu_kind(std::mt19937_64& rng) {
    return static_cast<AluKind>(rng() % 7);
}

// Structurally valid instruction with bounded targets.
inline Instruction random_instruction(std::mt19937_64& rng, std::uint32_t max_target = 1000) {
    switch (rng() % 8) {
    case 0: {
        PulseInstr in;
        in.time = static_cast<std::uint32_t>(rng());
        in.dest_channel = static_cast<std::uint16_t>(rng() % 64);
        in.cmd = random_pulse_command(rng);
        return in;
    }
    case 1: {
        AluInstr in;
        in.op = random_alu_kind(rng);
        in.lhs = static_cast<std::uint8_t>(rng() % kRegisterCount);
        in.rhs = random_operand(rng);
        switch (rng() % 3) {
        case 0:
            in.dest_kind = AluDestKind::Register;
            in.dest_reg = static_cast<std::uint8_t>(rng() % kRegisterCount);
            break;
        case 1:
            in.dest_kind = AluDestKind::QclkIncrement;
            break;
        default:
            in.dest_kind = AluDestKind::InstructionPointer;
            break;
        }
        return in;
    }
    case 2:
        return JumpInstr{static_cast<std::uint32_t>(rng() % max_target)};
    case 3: {
        BranchAluInstr in;
        in.op = random_alu_kind(rng);
        in.lhs = static_cast<std::uint8_t>(rng() % kRegisterCount);
        in.rhs = random_operand(rng);
        in.target = static_cast<std::uint32_t>(rng() % max_target);
        return in;
    }
    case 4: {
        ReadFprocInstr in;
        in.fproc_id = static_cast<std::uint16_t>(rng() % 256);
        in.dest_reg = static_cast<std::uint8_t>(rng() % kRegisterCount);
        return in;
    }
    case 5: {
        BranchFprocInstr in;
        in.fproc_id = static_cast<std::uint16_t>(rng() % 256);
        in.compare_value = static_cast<std::int32_t>(rng());
        in.target = static_cast<std::uint32_t>(rng() % max_target);
        return in;
    }
    case 6: {
        SyncInstr in;
        in.barrier_id = static_cast<std::uint8_t>(rng() % 16);
        in.core_mask = rng();
        return in;
    }
    default:
        return HaltInstr{};
    }
}

// Straight-line random circuit over the demo qubits; optionally wraps a
// conditional block around the tail.
inline CircuitProgram random_circuit(std::mt19937_64& rng, int n_statements, bool with_conditional) {
    const std::vector<std::string> qubits = {"Q0", "Q1"};
    CircuitProgram prog;
    int measure_count = 0;
    auto random_statement = [&](int salt) -> Statement {
        std::string q = qubits[rng() % qubits.size()];
        switch (rng() % 5) {
        case 0:
            return Statement{GateStmt{"X90", {q}}, salt, 1};
        case 1:
            return Statement{VirtualZStmt{q, 0.1 * static_cast<double>(rng() % 60)}, salt, 1};
        case 2:
            return Statement{DelayStmt{{q}, rng() % 40}, salt, 1};
        case 3:
            return Statement{BarrierStmt{{}}, salt, 1};
        default: {
            RawPulseStmt p;
            p.dest = drive_channel_name(q);
            p.freq = q == "Q0" ? 3.2e9 : 3.4e9;
            p.phase = 0.25 * static_cast<double>(rng() % 8);
            p.amp = 0.5;
            p.envelope = "flat";
            p.length_ticks = 4 + rng() % 28;
            return Statement{p, salt, 1};
        }
        }
    };
    for (int i = 0; i < n_statements; ++i)
        prog.statements.push_back(random_statement(i + 1));
    if (with_conditional) {
        std::string q = qubits[rng() % qubits.size()];
        std::string result = "m" + std::to_string(measure_count++);
        prog.statements.push_back(Statement{MeasureStmt{q, result}, n_statements + 1, 1});
        IfElseStmt cond;
        cond.result = result;
        cond.expected_bit = static_cast<int>(rng() % 2);
        int n_then = 1 + static_cast<int>(rng() % 3);
        int n_else = static_cast<int>(rng() % 2);
        for (int i = 0; i < n_then; ++i)
            cond.then_body.push_back(random_statement(100 + i));
        for (int i = 0; i < n_else; ++i)
            cond.else_body.push_back(random_statement(200 + i));
        prog.statements.push_back(Statement{std::move(cond), n_statements + 2, 1});
        prog.statements.push_back(Statement{MeasureStmt{"Q0", "mf"}, n_statements + 3, 1});
    }
    return prog;
}

} // namespace qcs::testgen
