#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qcs/errors.hpp"

// High-level circuit language: gates, raw pulses, virtual-Z, measurement,
// if/else feed-forward, barriers and delays. The concrete syntax is JSON:
// either one statement object per line, or a single (possibly multi-line)
// JSON array of statement objects. See docs/FORMATS.md for the schema.

namespace qcs {

struct GateStmt {
    std::string name;
    std::vector<std::string> qubits;
};

struct RawPulseStmt {
    std::string dest;   // channel name, "<qubit>.<role>" convention
    double freq = 0.0;  // Hz
    double phase = 0.0; // rad
    double amp = 0.0;   // [0, 1)
    std::string envelope;
    std::uint32_t length_ticks = 0;
};

struct VirtualZStmt {
    std::string qubit;
    double phase = 0.0; // rad
};

struct MeasureStmt {
    std::string qubit;
    std::string result;
};

struct BarrierStmt {
    std::vector<std::string> qubits; // empty = all qubits in the program
};

struct DelayStmt {
    std::vector<std::string> qubits;
    std::uint64_t ticks = 0;
};

struct Statement;

struct IfElseStmt {
    std::string result;
    int expected_bit = 1;
    std::vector<Statement> then_body;
    std::vector<Statement> else_body;
};

struct Statement {
    std::variant<GateStmt, RawPulseStmt, VirtualZStmt, MeasureStmt, IfElseStmt, BarrierStmt,
                 DelayStmt>
        v;
    int line = 0;
    int column = 0;
};

struct CircuitProgram {
    std::vector<Statement> statements;
};

struct Diagnostic {
    int line = 0;
    int column = 0;
    std::string message;
};

struct ParseResult {
    std::optional<CircuitProgram> program; // absent when diagnostics exist
    std::vector<Diagnostic> diagnostics;
};

ParseResult parse_circuit(const std::string& text);
ParseResult parse_circuit_file(const std::string& path);

std::string format_diagnostics(const std::vector<Diagnostic>& diags);

} // namespace qcs
