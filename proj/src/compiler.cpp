#include "qcs/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace qcs {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_phase(double phi) {
    double m = std::fmod(phi, kTwoPi);
    return m < 0.0 ? m + kTwoPi : m;
}

} // namespace

// ---------------------------------------------------------------------------
// resolve_gates
// ---------------------------------------------------------------------------

namespace {

class GateResolver {
public:
    GateResolver(const CalibrationSet& cal, IrProgram& ir) : cal_(cal), ir_(ir) {}

    void resolve(const std::vector<Statement>& stmts, std::vector<IrNode>& out) {
        for (const auto& st : stmts)
            std::visit([&](const auto& s) { lower(s, out); }, st.v);
    }

    void note_qubit(const std::string& q) {
        cal_.qubit(q); // throws if uncalibrated
        seen_qubits_.insert(q);
    }

    void note_envelope(const std::string& name) {
        auto it = cal_.envelopes.find(name);
        if (it == cal_.envelopes.end())
            throw ConfigError(fmt::format("envelope '{}' not defined in the calibration set", name));
        ir_.envelopes.emplace(name, it->second);
    }

    std::set<std::string> seen_qubits_;

private:
    const CalibrationSet& cal_;
    IrProgram& ir_;

    void lower(const GateStmt& g, std::vector<IrNode>& out) {
        for (const auto& q : g.qubits)
            note_qubit(q);
        std::string key = CalibrationSet::gate_key(g.name, g.qubits);
        auto it = cal_.gates.find(key);
        if (it == cal_.gates.end())
            throw ConfigError(fmt::format("no calibration entry for gate '{}'", key));
        for (const auto& t : it->second) {
            note_qubit(t.qubit);
            note_envelope(t.envelope);
            const QubitCal& qc = cal_.qubit(t.qubit);
            IrPulse p;
            p.qubit = t.qubit;
            p.role = t.role;
            if (t.role == PulseRole::QubitDrive) {
                p.dest = drive_channel_name(t.qubit);
                p.freq = qc.drive_freq_hz;
            } else {
                p.dest = readout_drive_channel_name(t.qubit);
                p.freq = qc.readout_freq_hz;
            }
            p.phase = t.phase;
            p.amp = t.amp;
            p.envelope = t.envelope;
            p.length_ticks = t.length_ticks;
            out.push_back(IrNode{std::move(p)});
        }
    }

    void lower(const RawPulseStmt& s, std::vector<IrNode>& out) {
        IrPulse p;
        p.dest = s.dest;
        p.qubit = qubit_of_dest(s.dest);
        note_qubit(p.qubit);
        note_envelope(s.envelope);
        p.role = s.dest.size() > 5 && s.dest.substr(s.dest.size() - 5) == ".qdrv"
                     ? PulseRole::QubitDrive
                     : PulseRole::ReadoutDrive;
        p.freq = s.freq;
        p.phase = s.phase;
        p.amp = s.amp;
        p.envelope = s.envelope;
        p.length_ticks = s.length_ticks;
        out.push_back(IrNode{std::move(p)});
    }

    void lower(const VirtualZStmt& s, std::vector<IrNode>& out) {
        note_qubit(s.qubit);
        out.push_back(IrNode{IrVirtualZ{s.qubit, s.phase}});
    }

    void lower(const MeasureStmt& s, std::vector<IrNode>& out) {
        note_qubit(s.qubit);
        const QubitCal& qc = cal_.qubit(s.qubit);
        note_envelope(qc.readout_envelope);
        IrMeasure m;
        m.qubit = s.qubit;
        m.result = s.result;
        m.drive_dest = readout_drive_channel_name(s.qubit);
        m.drive_freq = qc.readout_freq_hz;
        m.drive_amp = qc.readout_amp;
        m.drive_envelope = qc.readout_envelope;
        m.demod_dest = demod_channel_name(s.qubit);
        m.dlo_freq = qc.readout_freq_hz;
        m.window_ticks = cal_.readout_window_ticks;
        m.demod_offset_ticks = cal_.demod_window_offset_ticks;
        ir_.result_qubit[s.result] = s.qubit;
        out.push_back(IrNode{std::move(m)});
    }

    void lower(const IfElseStmt& s, std::vector<IrNode>& out) {
        IrIfElse node;
        node.result = s.result;
        node.expected_bit = s.expected_bit;
        resolve(s.then_body, node.then_body);
        resolve(s.else_body, node.else_body);
        out.push_back(IrNode{std::move(node)});
    }

    void lower(const BarrierStmt& s, std::vector<IrNode>& out) {
        for (const auto& q : s.qubits)
            note_qubit(q);
        out.push_back(IrNode{IrBarrier{s.qubits}});
    }

    void lower(const DelayStmt& s, std::vector<IrNode>& out) {
        for (const auto& q : s.qubits)
            note_qubit(q);
        out.push_back(IrNode{IrDelay{s.qubits, s.ticks}});
    }
};

} // namespace

IrProgram resolve_gates(const CircuitProgram& prog, const CalibrationSet& cal) {
    IrProgram ir;
    ir.feedback_latency_ticks = cal.feedback_latency_ticks;
    GateResolver resolver(cal, ir);
    resolver.resolve(prog.statements, ir.nodes);
    ir.qubits.assign(resolver.seen_qubits_.begin(), resolver.seen_qubits_.end());
    for (const auto& q : ir.qubits)
        ir.fproc_of[q] = cal.fproc_of(q);
    return ir;
}

// ---------------------------------------------------------------------------
// apply_virtual_z
// ---------------------------------------------------------------------------

namespace {

void fold_virtual_z(std::vector<IrNode>& nodes, std::map<std::string, double> acc) {
    std::vector<IrNode> out;
    out.reserve(nodes.size());
    for (auto& node : nodes) {
        if (auto* vz = std::get_if<IrVirtualZ>(&node.v)) {
            acc[vz->qubit] += vz->phase;
            continue; // node removed
        }
        if (auto* p = std::get_if<IrPulse>(&node.v)) {
            if (p->role == PulseRole::QubitDrive) {
                auto it = acc.find(p->qubit);
                if (it != acc.end())
                    p->phase = wrap_phase(p->phase + it->second);
            }
        } else if (auto* f = std::get_if<IrIfElse>(&node.v)) {
            // Arm-local accumulation: phases added inside an arm do not leak
            // past the join.
            fold_virtual_z(f->then_body, acc);
            fold_virtual_z(f->else_body, acc);
        }
        out.push_back(std::move(node));
    }
    nodes = std::move(out);
}

} // namespace

IrProgram apply_virtual_z(IrProgram ir) {
    fold_virtual_z(ir.nodes, {});
    return ir;
}

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

namespace {

struct ResourceClock {
    std::map<std::string, std::uint64_t> qubit_ready;
    std::map<std::string, std::uint64_t> chan_ready;
    std::map<std::string, std::uint64_t> result_ready;

    std::uint64_t& qubit(const std::string& q) { return qubit_ready[q]; }
    std::uint64_t& chan(const std::string& c) { return chan_ready[c]; }
};

struct Touched {
    std::set<std::string> qubits;
    std::set<std::string> chans;
};

void collect_touched(const std::vector<IrNode>& nodes, Touched& t) {
    for (const auto& node : nodes) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, IrPulse>) {
                    t.qubits.insert(n.qubit);
                    t.chans.insert(n.dest);
                } else if constexpr (std::is_same_v<T, IrMeasure>) {
                    t.qubits.insert(n.qubit);
                    t.chans.insert(n.drive_dest);
                    t.chans.insert(n.demod_dest);
                } else if constexpr (std::is_same_v<T, IrBarrier>) {
                    for (const auto& q : n.qubits)
                        t.qubits.insert(q);
                } else if constexpr (std::is_same_v<T, IrDelay>) {
                    for (const auto& q : n.qubits)
                        t.qubits.insert(q);
                } else if constexpr (std::is_same_v<T, IrIfElse>) {
                    collect_touched(n.then_body, t);
                    collect_touched(n.else_body, t);
                }
            },
            node.v);
    }
}

class Scheduler {
public:
    explicit Scheduler(const IrProgram& ir) : ir_(ir) {}

    void run(std::vector<IrNode>& nodes, ResourceClock& clk) {
        for (auto& node : nodes)
            std::visit([&](auto& n) { place(n, clk); }, node.v);
    }

private:
    const IrProgram& ir_;

    void place(IrPulse& p, ResourceClock& clk) {
        std::uint64_t t = std::max(clk.qubit(p.qubit), clk.chan(p.dest));
        p.start = t;
        clk.qubit(p.qubit) = t + p.length_ticks;
        clk.chan(p.dest) = t + p.length_ticks;
    }

    void place(IrMeasure& m, ResourceClock& clk) {
        std::uint64_t off = m.demod_offset_ticks;
        std::uint64_t demod_ready = clk.chan(m.demod_dest);
        std::uint64_t t = std::max(clk.qubit(m.qubit), clk.chan(m.drive_dest));
        t = std::max(t, demod_ready > off ? demod_ready - off : 0);
        m.start = t;
        clk.chan(m.drive_dest) = t + m.window_ticks;
        clk.chan(m.demod_dest) = t + off + m.window_ticks;
        // The measuring core holds at the result read until the bit returns,
        // so the qubit is busy through the feedback latency.
        std::uint64_t ready = t + off + m.window_ticks + ir_.feedback_latency_ticks;
        clk.qubit(m.qubit) = ready;
        clk.result_ready[m.result] = ready;
    }

    void place(IrVirtualZ&, ResourceClock&) {}

    void place(IrBarrier& b, ResourceClock& clk) {
        const auto& qs = b.qubits.empty() ? ir_.qubits : b.qubits;
        std::uint64_t t = 0;
        for (const auto& q : qs)
            t = std::max(t, clk.qubit(q));
        for (const auto& q : qs)
            clk.qubit(q) = t;
    }

    void place(IrDelay& d, ResourceClock& clk) {
        for (const auto& q : d.qubits)
            clk.qubit(q) += d.ticks;
    }

    void place(IrIfElse& f, ResourceClock& clk) {
        auto it = clk.result_ready.find(f.result);
        if (it == clk.result_ready.end())
            throw ScheduleError(fmt::format("conditional references unmeasured result '{}'", f.result));
        std::uint64_t start = it->second;

        Touched touched;
        collect_touched(f.then_body, touched);
        collect_touched(f.else_body, touched);
        for (const auto& q : touched.qubits)
            start = std::max(start, clk.qubit(q));
        for (const auto& c : touched.chans)
            start = std::max(start, clk.chan(c));
        f.start = start;

        auto arm_clock = [&]() {
            ResourceClock c = clk;
            for (const auto& q : touched.qubits)
                c.qubit(q) = std::max(c.qubit(q), start);
            for (const auto& ch : touched.chans)
                c.chan(ch) = std::max(c.chan(ch), start);
            return c;
        };

        ResourceClock then_clk = arm_clock();
        run(f.then_body, then_clk);
        ResourceClock else_clk = arm_clock();
        run(f.else_body, else_clk);

        auto arm_end = [&](const ResourceClock& c) {
            std::uint64_t end = start;
            for (const auto& q : touched.qubits)
                end = std::max(end, c.qubit_ready.at(q));
            for (const auto& ch : touched.chans)
                end = std::max(end, c.chan_ready.at(ch));
            return end;
        };
        std::uint64_t join = std::max(arm_end(then_clk), arm_end(else_clk));

        // Both arms are padded to the same duration: every resource either
        // arm touches becomes ready at the common join time.
        for (const auto& q : touched.qubits)
            clk.qubit(q) = join;
        for (const auto& c : touched.chans)
            clk.chan(c) = join;
        for (const auto* armc : {&then_clk, &else_clk})
            for (const auto& [r, ready] : armc->result_ready)
                clk.result_ready[r] = std::max(clk.result_ready[r], ready);
    }
};

} // namespace

IrProgram schedule(IrProgram ir) {
    ResourceClock clk;
    Scheduler s(ir);
    s.run(ir.nodes, clk);
    ir.scheduled = true;
    return ir;
}

// ---------------------------------------------------------------------------
// split_per_core
// ---------------------------------------------------------------------------

namespace {

struct KeyedItem {
    std::uint64_t time;
    std::uint64_t seq;
    CoreItem item;
};

class Splitter {
public:
    Splitter(const IrProgram& ir, const MappingConfig& mapping) : ir_(ir), mapping_(mapping) {
        for (const auto& q : ir.qubits)
            mapping.core_of(q); // validate up front
        count_uses(ir.nodes);
    }

    CompiledProgram build() {
        std::map<std::uint16_t, std::vector<KeyedItem>> streams;
        emit(ir_.nodes, streams);

        CompiledProgram out;
        out.qubits = ir_.qubits;
        out.fproc_of = ir_.fproc_of;
        out.result_qubit = ir_.result_qubit;
        out.envelopes = ir_.envelopes;

        std::set<std::uint16_t> all_cores;
        for (const auto& [q, c] : mapping_.qubit_core)
            if (std::find(ir_.qubits.begin(), ir_.qubits.end(), q) != ir_.qubits.end())
                all_cores.insert(c);
        for (std::uint16_t core : all_cores) {
            CoreProgram cp;
            cp.core_id = core;
            auto it = streams.find(core);
            if (it != streams.end()) {
                sort_items(it->second);
                for (auto& k : it->second)
                    cp.items.push_back(std::move(k.item));
                out.sync_core_mask |= std::uint64_t{1} << core;
            }
            out.cores.push_back(std::move(cp));
        }
        // A lone participant still gets a leading sync (released instantly);
        // it keeps program timing uniform across mappings.
        return out;
    }

private:
    const IrProgram& ir_;
    const MappingConfig& mapping_;
    std::uint64_t seq_ = 0;
    std::map<std::pair<std::uint16_t, std::string>, int> cond_uses_;
    std::map<std::string, std::uint16_t> measure_core_;
    std::set<std::pair<std::uint16_t, std::string>> read_emitted_;

    std::uint16_t core_of_dest(const std::string& dest) const {
        return mapping_.core_of(qubit_of_dest(dest));
    }

    void cores_touched(const std::vector<IrNode>& nodes, std::set<std::uint16_t>& cores) const {
        Touched t;
        collect_touched(nodes, t);
        for (const auto& q : t.qubits)
            cores.insert(mapping_.core_of(q));
        for (const auto& c : t.chans)
            cores.insert(core_of_dest(c));
    }

    void count_uses(const std::vector<IrNode>& nodes) {
        for (const auto& node : nodes) {
            if (const auto* m = std::get_if<IrMeasure>(&node.v)) {
                measure_core_[m->result] = mapping_.core_of(m->qubit);
            } else if (const auto* f = std::get_if<IrIfElse>(&node.v)) {
                std::set<std::uint16_t> involved;
                cores_touched(f->then_body, involved);
                cores_touched(f->else_body, involved);
                for (std::uint16_t c : involved)
                    ++cond_uses_[{c, f->result}];
                count_uses(f->then_body);
                count_uses(f->else_body);
            }
        }
    }

    void emit(const std::vector<IrNode>& nodes, std::map<std::uint16_t, std::vector<KeyedItem>>& streams) {
        for (const auto& node : nodes)
            std::visit([&](const auto& n) { emit_node(n, streams); }, node.v);
    }

    void emit_node(const IrPulse& p, std::map<std::uint16_t, std::vector<KeyedItem>>& streams) {
        CoreTimedPulse tp;
        tp.time = require_start(p.start, "pulse");
        tp.dest = p.dest;
        tp.freq = p.freq;
        tp.phase = p.phase;
        tp.amp = p.amp;
        tp.envelope = p.envelope;
        tp.length_ticks = p.length_ticks;
        streams[core_of_dest(p.dest)].push_back({tp.time, seq_++, CoreItem{tp}});
    }

    void emit_node(const IrMeasure& m, std::map<std::uint16_t, std::vector<KeyedItem>>& streams) {
        std::uint64_t t = require_start(m.start, "measure");
        std::uint16_t core = mapping_.core_of(m.qubit);

        CoreTimedPulse drive;
        drive.time = t;
        drive.dest = m.drive_dest;
        drive.freq = m.drive_freq;
        drive.amp = m.drive_amp;
        drive.envelope = m.drive_envelope;
        drive.length_ticks = m.window_ticks;
        streams[core_of_dest(m.drive_dest)].push_back({t, seq_++, CoreItem{drive}});

        CoreTimedPulse demod;
        demod.time = t + m.demod_offset_ticks;
        demod.dest = m.demod_dest;
        demod.freq = m.dlo_freq;
        demod.length_ticks = m.window_ticks;
        demod.is_demod = true;
        streams[core_of_dest(m.demod_dest)].push_back({demod.time, seq_++, CoreItem{demod}});

        CoreReadResult read;
        read.result = m.result;
        read.fproc = ir_.fproc_of.at(m.qubit);
        streams[core].push_back({demod.time + m.window_ticks, seq_++, CoreItem{read}});
        read_emitted_.insert({core, m.result});
    }

    void emit_node(const IrVirtualZ&, std::map<std::uint16_t, std::vector<KeyedItem>>&) {
        throw ScheduleError("virtual-z nodes must be folded before the per-core split");
    }

    void emit_node(const IrBarrier&, std::map<std::uint16_t, std::vector<KeyedItem>>&) {}
    void emit_node(const IrDelay&, std::map<std::uint16_t, std::vector<KeyedItem>>&) {}

    void emit_node(const IrIfElse& f, std::map<std::uint16_t, std::vector<KeyedItem>>& streams) {
        std::uint64_t start = require_start(f.start, "conditional");
        std::map<std::uint16_t, std::vector<KeyedItem>> then_streams, else_streams;
        emit(f.then_body, then_streams);
        emit(f.else_body, else_streams);

        std::set<std::uint16_t> involved;
        for (const auto& [c, v] : then_streams)
            involved.insert(c);
        for (const auto& [c, v] : else_streams)
            involved.insert(c);

        const std::string& result = f.result;
        std::uint16_t fproc = ir_.fproc_of.at(ir_.result_qubit.at(result));
        for (std::uint16_t core : involved) {
            CoreCond cond;
            cond.fproc = fproc;
            cond.result = result;
            cond.expected_bit = f.expected_bit;
            bool measured_here = measure_core_.count(result) && measure_core_.at(result) == core;
            bool multi_use = cond_uses_.at({core, result}) >= 2;
            if (measured_here || read_emitted_.count({core, result})) {
                cond.kind = CoreCond::Kind::Register;
            } else if (multi_use) {
                // First of several uses on this core: pull the bit into a
                // register once, then branch on the register.
                CoreReadResult read;
                read.result = result;
                read.fproc = fproc;
                streams[core].push_back({start, seq_++, CoreItem{read}});
                read_emitted_.insert({core, result});
                cond.kind = CoreCond::Kind::Register;
            } else {
                cond.kind = CoreCond::Kind::Fproc;
            }

            CoreIfElse item;
            item.time = start;
            item.cond = cond;
            auto take = [&](std::map<std::uint16_t, std::vector<KeyedItem>>& src,
                            std::vector<CoreItem>& dst) {
                auto it = src.find(core);
                if (it == src.end())
                    return;
                sort_items(it->second);
                for (auto& k : it->second)
                    dst.push_back(std::move(k.item));
            };
            take(then_streams, item.then_items);
            take(else_streams, item.else_items);
            streams[core].push_back({start, seq_++, CoreItem{std::move(item)}});
        }
    }

    static std::uint64_t require_start(const std::optional<std::uint64_t>& start, const char* what) {
        if (!start)
            throw ScheduleError(fmt::format("{} node reached the splitter without a start time; run schedule() first", what));
        return *start;
    }

    static void sort_items(std::vector<KeyedItem>& items) {
        std::stable_sort(items.begin(), items.end(), [](const KeyedItem& a, const KeyedItem& b) {
            return a.time != b.time ? a.time < b.time : a.seq < b.seq;
        });
    }
};

} // namespace

CompiledProgram split_per_core(const IrProgram& ir, const MappingConfig& mapping) {
    if (!ir.scheduled)
        throw ScheduleError("split_per_core requires a scheduled program");
    return Splitter(ir, mapping).build();
}

CompiledProgram compile_circuit(const CircuitProgram& prog, const CalibrationSet& cal,
                                const MappingConfig& mapping) {
    IrProgram ir = resolve_gates(prog, cal);
    ir = apply_virtual_z(std::move(ir));
    ir = schedule(std::move(ir));
    return split_per_core(ir, mapping);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json pulse_to_json(const CoreTimedPulse& p) {
    json j{{"time", p.time},        {"dest", p.dest},   {"freq", p.freq},
           {"phase", p.phase},      {"amp", p.amp},     {"env", p.envelope},
           {"length", p.length_ticks}};
    if (p.is_demod)
        j["demod"] = true;
    return json{{"pulse", j}};
}

json items_to_json(const std::vector<CoreItem>& items);

json item_to_json(const CoreItem& item) {
    return std::visit(
        [](const auto& it) -> json {
            using T = std::decay_t<decltype(it)>;
            if constexpr (std::is_same_v<T, CoreTimedPulse>) {
                return pulse_to_json(it);
            } else if constexpr (std::is_same_v<T, CoreReadResult>) {
                return json{{"read", {{"result", it.result}, {"fproc", it.fproc}}}};
            } else {
                json cond{{"result", it.cond.result},
                          {"fproc", it.cond.fproc},
                          {"equals", it.cond.expected_bit},
                          {"kind", it.cond.kind == CoreCond::Kind::Fproc ? "fproc" : "reg"}};
                return json{{"if", {{"time", it.time},
                                    {"cond", cond},
                                    {"then", items_to_json(it.then_items)},
                                    {"else", items_to_json(it.else_items)}}}};
            }
        },
        item.v);
}

json items_to_json(const std::vector<CoreItem>& items) {
    json arr = json::array();
    for (const auto& it : items)
        arr.push_back(item_to_json(it));
    return arr;
}

json shape_to_json(const EnvelopeShape& s) {
    switch (s.kind) {
    case EnvelopeShape::Kind::Square:
        return json{{"kind", "square"}};
    case EnvelopeShape::Kind::Gaussian:
        return json{{"kind", "gaussian"}, {"sigma", s.gauss_sigma}};
    case EnvelopeShape::Kind::Samples: {
        json iv = json::array(), qv = json::array();
        for (const auto& c : s.samples) {
            iv.push_back(c.real());
            qv.push_back(c.imag());
        }
        return json{{"kind", "samples"}, {"i", iv}, {"q", qv}};
    }
    }
    return {};
}

EnvelopeShape shape_from_json(const json& j) {
    EnvelopeShape s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "square") {
        s.kind = EnvelopeShape::Kind::Square;
    } else if (kind == "gaussian") {
        s.kind = EnvelopeShape::Kind::Gaussian;
        s.gauss_sigma = j.value("sigma", 0.25);
    } else if (kind == "samples") {
        s.kind = EnvelopeShape::Kind::Samples;
        const auto& iv = j.at("i");
        const auto& qv = j.at("q");
        for (std::size_t k = 0; k < iv.size(); ++k)
            s.samples.emplace_back(iv.at(k).get<double>(), qv.at(k).get<double>());
    } else {
        throw ConfigError(fmt::format("unknown envelope kind '{}'", kind));
    }
    return s;
}

std::vector<CoreItem> items_from_json(const json& arr);

CoreItem item_from_json(const json& j) {
    if (j.contains("pulse")) {
        const auto& p = j["pulse"];
        CoreTimedPulse tp;
        tp.time = p.at("time").get<std::uint64_t>();
        tp.dest = p.at("dest").get<std::string>();
        tp.freq = p.at("freq").get<double>();
        tp.phase = p.value("phase", 0.0);
        tp.amp = p.value("amp", 0.0);
        tp.envelope = p.value("env", std::string());
        tp.length_ticks = p.at("length").get<std::uint32_t>();
        tp.is_demod = p.value("demod", false);
        return CoreItem{tp};
    }
    if (j.contains("read")) {
        const auto& r = j["read"];
        CoreReadResult read;
        read.result = r.at("result").get<std::string>();
        read.fproc = r.at("fproc").get<std::uint16_t>();
        return CoreItem{read};
    }
    if (j.contains("if")) {
        const auto& f = j["if"];
        CoreIfElse item;
        item.time = f.at("time").get<std::uint64_t>();
        const auto& c = f.at("cond");
        item.cond.result = c.at("result").get<std::string>();
        item.cond.fproc = c.at("fproc").get<std::uint16_t>();
        item.cond.expected_bit = c.at("equals").get<int>();
        item.cond.kind = c.at("kind").get<std::string>() == "fproc" ? CoreCond::Kind::Fproc
                                                                    : CoreCond::Kind::Register;
        item.then_items = items_from_json(f.value("then", json::array()));
        item.else_items = items_from_json(f.value("else", json::array()));
        return CoreItem{std::move(item)};
    }
    throw ConfigError(fmt::format("unknown core item: {}", j.dump()));
}

std::vector<CoreItem> items_from_json(const json& arr) {
    std::vector<CoreItem> out;
    for (const auto& j : arr)
        out.push_back(item_from_json(j));
    return out;
}

} // namespace

std::string compiled_to_json(const CompiledProgram& prog) {
    json j;
    j["version"] = 1;
    j["sync_mask"] = prog.sync_core_mask;
    j["qubits"] = prog.qubits;
    j["fproc"] = prog.fproc_of;
    j["results"] = prog.result_qubit;
    json envs;
    for (const auto& [name, shape] : prog.envelopes)
        envs[name] = shape_to_json(shape);
    j["envelopes"] = envs;
    json cores = json::array();
    for (const auto& cp : prog.cores)
        cores.push_back(json{{"core", cp.core_id}, {"items", items_to_json(cp.items)}});
    j["cores"] = cores;
    return j.dump(2) + "\n";
}

CompiledProgram compiled_from_json(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", context, e.what()));
    }
    CompiledProgram prog;
    try {
        prog.sync_core_mask = j.at("sync_mask").get<std::uint64_t>();
        prog.qubits = j.at("qubits").get<std::vector<std::string>>();
        if (j.contains("fproc"))
            prog.fproc_of = j["fproc"].get<std::map<std::string, std::uint16_t>>();
        if (j.contains("results"))
            prog.result_qubit = j["results"].get<std::map<std::string, std::string>>();
        if (j.contains("envelopes"))
            for (const auto& [name, shape] : j["envelopes"].items())
                prog.envelopes.emplace(name, shape_from_json(shape));
        for (const auto& jc : j.at("cores")) {
            CoreProgram cp;
            cp.core_id = jc.at("core").get<std::uint16_t>();
            cp.items = items_from_json(jc.at("items"));
            prog.cores.push_back(std::move(cp));
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", context, e.what()));
    }
    return prog;
}

namespace {

void list_items(const std::vector<CoreItem>& items, int indent, std::string& out) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& item : items) {
        std::visit(
            [&](const auto& it) {
                using T = std::decay_t<decltype(it)>;
                if constexpr (std::is_same_v<T, CoreTimedPulse>) {
                    out += fmt::format("{}t={:<8} {} {} freq={:.6g} phase={:.6g} amp={:.4g} len={}\n",
                                       pad, it.time, it.is_demod ? "demod" : "pulse", it.dest,
                                       it.freq, it.phase, it.amp, it.length_ticks);
                } else if constexpr (std::is_same_v<T, CoreReadResult>) {
                    out += fmt::format("{}read {} <- fproc {}\n", pad, it.result, it.fproc);
                } else {
                    out += fmt::format("{}t={:<8} if {} == {} ({}):\n", pad, it.time, it.cond.result,
                                       it.cond.expected_bit,
                                       it.cond.kind == CoreCond::Kind::Fproc ? "fproc" : "reg");
                    out += fmt::format("{}then:\n", pad);
                    list_items(it.then_items, indent + 1, out);
                    out += fmt::format("{}else:\n", pad);
                    list_items(it.else_items, indent + 1, out);
                }
            },
            item.v);
    }
}

} // namespace

std::string schedule_listing(const CompiledProgram& prog) {
    std::string out;
    for (const auto& cp : prog.cores) {
        out += fmt::format("core {}:\n", cp.core_id);
        list_items(cp.items, 1, out);
    }
    return out;
}

} // namespace qcs
