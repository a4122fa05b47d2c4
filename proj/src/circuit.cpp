#include "qcs/circuit.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace qcs {

namespace {

using nlohmann::json;

struct Element {
    int line;
    int column;
    std::string text;
};

// Splits a top-level JSON array into its element substrings while tracking
// line/column, so each statement keeps a usable source position.
std::vector<Element> split_array_elements(const std::string& text, std::vector<Diagnostic>& diags) {
    std::vector<Element> out;
    int line = 1, col = 0;
    std::size_t i = 0;
    auto advance = [&]() {
        if (text[i] == '\n') {
            ++line;
            col = 0;
        } else {
            ++col;
        }
        ++i;
    };
    // find '['
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
        advance();
    if (i >= text.size() || text[i] != '[') {
        diags.push_back({line, col + 1, "expected '[' at start of circuit document"});
        return out;
    }
    advance();
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t elem_begin = std::string::npos;
    int elem_line = 0, elem_col = 0;
    bool done = false;
    while (i < text.size() && !done) {
        char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
        } else if (depth == 0 && elem_begin == std::string::npos) {
            if (c == ']') {
                done = true;
            } else if (!std::isspace(static_cast<unsigned char>(c)) && c != ',') {
                elem_begin = i;
                elem_line = line;
                elem_col = col + 1;
                if (c == '{' || c == '[')
                    ++depth;
                else if (c == '"')
                    in_string = true;
            }
        } else {
            if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                if (depth == 0 && c == ']') {
                    // end of the array right after a scalar element
                    out.push_back({elem_line, elem_col, text.substr(elem_begin, i - elem_begin)});
                    elem_begin = std::string::npos;
                    done = true;
                    advance();
                    continue;
                }
                --depth;
            } else if (depth == 0 && c == ',') {
                out.push_back({elem_line, elem_col, text.substr(elem_begin, i - elem_begin)});
                elem_begin = std::string::npos;
            }
        }
        advance();
    }
    if (!done) {
        diags.push_back({line, col, "unterminated array in circuit document"});
    } else if (elem_begin != std::string::npos) {
        out.push_back({elem_line, elem_col, text.substr(elem_begin)});
    }
    return out;
}

std::vector<Element> split_elements(const std::string& text, std::vector<Diagnostic>& diags) {
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
        ++i;
    if (i < text.size() && text[i] == '[')
        return split_array_elements(text, diags);

    // JSON-lines form: one statement object per line.
    std::vector<Element> out;
    std::istringstream in(text);
    std::string lineText;
    int line = 0;
    while (std::getline(in, lineText)) {
        ++line;
        std::size_t first = lineText.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        out.push_back({line, static_cast<int>(first) + 1, lineText});
    }
    return out;
}

class StatementBuilder {
public:
    explicit StatementBuilder(std::vector<Diagnostic>& diags) : diags_(diags) {}

    std::optional<Statement> build(const json& j, int line, int col) {
        if (!j.is_object()) {
            error(line, col, "statement must be a JSON object");
            return std::nullopt;
        }
        if (j.contains("gate"))
            return gate(j, line, col);
        if (j.contains("pulse"))
            return pulse(j, line, col);
        if (j.contains("virtual_z"))
            return virtual_z(j, line, col);
        if (j.contains("measure"))
            return measure(j, line, col);
        if (j.contains("if"))
            return if_else(j, line, col);
        if (j.contains("barrier"))
            return barrier(j, line, col);
        if (j.contains("delay"))
            return delay(j, line, col);
        error(line, col, fmt::format("unknown statement kind: {}", j.dump()));
        return std::nullopt;
    }

    // Result names must be produced by a textually preceding measure.
    void validate_results(const std::vector<Statement>& stmts) {
        std::set<std::string> defined;
        walk_results(stmts, defined);
    }

private:
    std::vector<Diagnostic>& diags_;

    void error(int line, int col, std::string msg) { diags_.push_back({line, col, std::move(msg)}); }

    std::optional<std::vector<std::string>> string_list(const json& j, int line, int col,
                                                        const char* what) {
        std::vector<std::string> out;
        if (j.is_string()) {
            out.push_back(j.get<std::string>());
            return out;
        }
        if (!j.is_array()) {
            error(line, col, fmt::format("{} must be a string or array of strings", what));
            return std::nullopt;
        }
        for (const auto& e : j) {
            if (!e.is_string()) {
                error(line, col, fmt::format("{} entries must be strings", what));
                return std::nullopt;
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::optional<Statement> gate(const json& j, int line, int col) {
        GateStmt g;
        if (!j["gate"].is_string()) {
            error(line, col, "gate name must be a string");
            return std::nullopt;
        }
        g.name = j["gate"].get<std::string>();
        if (j.contains("qubit")) {
            auto q = string_list(j["qubit"], line, col, "qubit");
            if (!q)
                return std::nullopt;
            g.qubits = *q;
        } else if (j.contains("qubits")) {
            auto q = string_list(j["qubits"], line, col, "qubits");
            if (!q)
                return std::nullopt;
            g.qubits = *q;
        }
        if (g.qubits.empty()) {
            error(line, col, fmt::format("gate '{}' names no qubits", g.name));
            return std::nullopt;
        }
        return Statement{g, line, col};
    }

    std::optional<Statement> pulse(const json& j, int line, int col) {
        const json& p = j["pulse"];
        if (!p.is_object()) {
            error(line, col, "pulse body must be an object");
            return std::nullopt;
        }
        RawPulseStmt s;
        try {
            s.dest = p.at("dest").get<std::string>();
            s.freq = p.at("freq").get<double>();
            s.phase = p.value("phase", 0.0);
            s.amp = p.at("amp").get<double>();
            s.envelope = p.at("env").get<std::string>();
            s.length_ticks = p.at("length").get<std::uint32_t>();
        } catch (const json::exception& e) {
            error(line, col, fmt::format("malformed pulse: {}", e.what()));
            return std::nullopt;
        }
        if (s.length_ticks == 0) {
            error(line, col, "pulse length must be positive");
            return std::nullopt;
        }
        return Statement{s, line, col};
    }

    std::optional<Statement> virtual_z(const json& j, int line, int col) {
        const json& p = j["virtual_z"];
        VirtualZStmt s;
        try {
            s.qubit = p.at("qubit").get<std::string>();
            s.phase = p.at("phase").get<double>();
        } catch (const json::exception& e) {
            error(line, col, fmt::format("malformed virtual_z: {}", e.what()));
            return std::nullopt;
        }
        return Statement{s, line, col};
    }

    std::optional<Statement> measure(const json& j, int line, int col) {
        MeasureStmt s;
        try {
            s.qubit = j.at("measure").get<std::string>();
            s.result = j.at("result").get<std::string>();
        } catch (const json::exception& e) {
            error(line, col, fmt::format("malformed measure: {}", e.what()));
            return std::nullopt;
        }
        return Statement{s, line, col};
    }

    std::optional<Statement> if_else(const json& j, int line, int col) {
        const json& c = j["if"];
        IfElseStmt s;
        try {
            s.result = c.at("result").get<std::string>();
            s.expected_bit = c.at("equals").get<int>();
        } catch (const json::exception& e) {
            error(line, col, fmt::format("malformed if condition: {}", e.what()));
            return std::nullopt;
        }
        if (s.expected_bit != 0 && s.expected_bit != 1) {
            error(line, col, fmt::format("if condition bit must be 0 or 1, got {}", s.expected_bit));
            return std::nullopt;
        }
        bool ok = true;
        for (const char* arm : {"then", "else"}) {
            if (!j.contains(arm))
                continue;
            if (!j[arm].is_array()) {
                error(line, col, fmt::format("'{}' body must be an array", arm));
                ok = false;
                continue;
            }
            auto& body = std::string(arm) == "then" ? s.then_body : s.else_body;
            for (const auto& e : j[arm]) {
                auto st = build(e, line, col);
                if (st)
                    body.push_back(std::move(*st));
                else
                    ok = false;
            }
        }
        if (!ok)
            return std::nullopt;
        return Statement{std::move(s), line, col};
    }

    std::optional<Statement> barrier(const json& j, int line, int col) {
        BarrierStmt s;
        if (j["barrier"].is_string() && j["barrier"].get<std::string>() == "all") {
            return Statement{s, line, col};
        }
        auto q = string_list(j["barrier"], line, col, "barrier");
        if (!q)
            return std::nullopt;
        s.qubits = *q;
        return Statement{s, line, col};
    }

    std::optional<Statement> delay(const json& j, int line, int col) {
        const json& p = j["delay"];
        DelayStmt s;
        try {
            auto q = string_list(p.at("qubits"), line, col, "delay qubits");
            if (!q)
                return std::nullopt;
            s.qubits = *q;
            s.ticks = p.at("ticks").get<std::uint64_t>();
        } catch (const json::exception& e) {
            error(line, col, fmt::format("malformed delay: {}", e.what()));
            return std::nullopt;
        }
        return Statement{s, line, col};
    }

    void walk_results(const std::vector<Statement>& stmts, std::set<std::string>& defined) {
        for (const auto& st : stmts) {
            if (const auto* m = std::get_if<MeasureStmt>(&st.v)) {
                if (!defined.insert(m->result).second)
                    error(st.line, st.column,
                          fmt::format("result name '{}' measured more than once", m->result));
            } else if (const auto* f = std::get_if<IfElseStmt>(&st.v)) {
                if (!defined.count(f->result))
                    error(st.line, st.column,
                          fmt::format("if references undefined result '{}'", f->result));
                walk_results(f->then_body, defined);
                walk_results(f->else_body, defined);
            }
        }
    }
};

} // namespace

ParseResult parse_circuit(const std::string& text) {
    ParseResult result;
    auto elements = split_elements(text, result.diagnostics);
    StatementBuilder builder(result.diagnostics);

    CircuitProgram prog;
    for (const auto& el : elements) {
        json j;
        try {
            j = json::parse(el.text);
        } catch (const json::parse_error& e) {
            // byte offset within this element; report its column
            result.diagnostics.push_back(
                {el.line, el.column + static_cast<int>(e.byte), fmt::format("JSON syntax error: {}", e.what())});
            continue;
        }
        auto st = builder.build(j, el.line, el.column);
        if (st)
            prog.statements.push_back(std::move(*st));
    }
    builder.validate_results(prog.statements);

    if (result.diagnostics.empty())
        result.program = std::move(prog);
    return result;
}

ParseResult parse_circuit_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError(fmt::format("cannot open circuit file '{}'", path));
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_circuit(ss.str());
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags)
        out += fmt::format("{}:{}: {}\n", d.line, d.column, d.message);
    return out;
}

} // namespace qcs
