#include "qcs/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace qcs {

namespace {

std::int16_t quantize_sample(double x) {
    long long v = std::llround(x * 32767.0);
    v = std::clamp<long long>(v, -32767, 32767);
    return static_cast<std::int16_t>(v);
}

// Per-channel envelope allocator: first-fit sequential in program order,
// deduplicating on exact quantized sample content.
class EnvelopeAllocator {
public:
    explicit EnvelopeAllocator(const Channel& chan) : chan_(chan) {}

    std::uint16_t place(const std::string& name, const EnvelopeShape& shape,
                        std::uint32_t n_samples) {
        auto rendered = render_envelope(shape, n_samples, name);
        std::vector<std::pair<std::int16_t, std::int16_t>> q(rendered.size());
        for (std::size_t k = 0; k < rendered.size(); ++k)
            q[k] = {quantize_sample(rendered[k].real()), quantize_sample(rendered[k].imag())};

        auto it = by_content_.find(q);
        if (it != by_content_.end())
            return it->second;

        if (next_addr_ + n_samples > chan_.env_capacity)
            throw AssemblyError(fmt::format(
                "envelope memory overflow on channel '{}': need {} samples at {}, capacity {}",
                chan_.name, n_samples, next_addr_, chan_.env_capacity));
        std::uint16_t addr = static_cast<std::uint16_t>(next_addr_);
        next_addr_ += n_samples;

        EnvelopeEntry entry;
        entry.addr = addr;
        entry.length = static_cast<std::uint16_t>(n_samples);
        entry.samples = q;
        image_.entries.push_back(std::move(entry));
        by_content_.emplace(std::move(q), addr);
        directory_.emplace_back(name, addr, static_cast<std::uint16_t>(n_samples));
        return addr;
    }

    EnvelopeImage take_image() { return std::move(image_); }
    std::vector<std::tuple<std::string, std::uint16_t, std::uint16_t>> take_directory() {
        return std::move(directory_);
    }
    bool used() const { return !image_.entries.empty(); }

private:
    const Channel& chan_;
    std::uint32_t next_addr_ = 0;
    EnvelopeImage image_;
    std::map<std::vector<std::pair<std::int16_t, std::int16_t>>, std::uint16_t> by_content_;
    std::vector<std::tuple<std::string, std::uint16_t, std::uint16_t>> directory_;
};

class CoreAssembler {
public:
    CoreAssembler(const CompiledProgram& prog, const ChannelConfig& channels,
                  const AsmOptions& options,
                  std::map<std::uint16_t, EnvelopeAllocator>& allocators)
        : prog_(prog), channels_(channels), options_(options), allocators_(allocators) {}

    std::vector<Instruction> assemble_core(const CoreProgram& core) {
        instructions_.clear();
        result_reg_.clear();
        next_reg_ = 0;
        if (!core.items.empty() && (prog_.sync_core_mask >> core.core_id) & 1) {
            SyncInstr sync;
            sync.barrier_id = 0;
            sync.core_mask = prog_.sync_core_mask;
            instructions_.push_back(sync);
        }
        emit_items(core.items);
        instructions_.push_back(HaltInstr{});
        return std::move(instructions_);
    }

private:
    const CompiledProgram& prog_;
    const ChannelConfig& channels_;
    const AsmOptions& options_;
    std::map<std::uint16_t, EnvelopeAllocator>& allocators_;
    std::vector<Instruction> instructions_;
    std::map<std::string, std::uint8_t> result_reg_;
    std::uint8_t next_reg_ = 0;

    std::uint8_t reg_for(const std::string& result, bool allocate) {
        auto it = result_reg_.find(result);
        if (it != result_reg_.end())
            return it->second;
        if (!allocate)
            throw AssemblyError(fmt::format(
                "conditional on '{}' wants a register but no read placed one", result));
        std::uint8_t r = next_reg_;
        next_reg_ = static_cast<std::uint8_t>((next_reg_ + 1) % kRegisterCount);
        result_reg_[result] = r;
        return r;
    }

    void emit_items(const std::vector<CoreItem>& items) {
        for (const auto& item : items)
            std::visit([&](const auto& it) { emit(it); }, item.v);
    }

    void emit(const CoreTimedPulse& p) {
        std::uint16_t chan_id = channels_.id_of(p.dest);
        const Channel& chan = channels_.by_id(chan_id);

        if (p.is_demod && chan.kind != ChannelKind::ReadoutDemod)
            throw AssemblyError(fmt::format("demod window routed to non-demod channel '{}'", p.dest));
        if (!p.is_demod && chan.kind == ChannelKind::ReadoutDemod)
            throw AssemblyError(fmt::format("pulse routed to demod channel '{}'", p.dest));

        if (!(p.freq < chan.sample_rate_hz / 2.0) || p.freq < 0.0)
            throw AssemblyError(fmt::format(
                "frequency {:.6g} Hz outside the Nyquist range [0, {:.6g}) of channel '{}'",
                p.freq, chan.sample_rate_hz / 2.0, p.dest));

        std::uint32_t spt = chan.samples_per_tick();
        std::uint64_t n_samples = static_cast<std::uint64_t>(p.length_ticks) * spt;
        if (n_samples == 0 || n_samples >= (1u << kLengthBits))
            throw AssemblyError(fmt::format(
                "pulse of {} ticks is {} samples on channel '{}', outside the {}-bit length field",
                p.length_ticks, n_samples, p.dest, kLengthBits));

        PulseCommand cmd;
        cmd.freq_word = quantize_freq(p.freq, chan.sample_rate_hz);
        cmd.length = static_cast<std::uint16_t>(n_samples);
        if (p.is_demod) {
            // Demod windows carry only the DLO frequency and the window
            // length; amplitude, phase and envelope address are unused.
            cmd.phase_word = 0;
            cmd.amp_word = 0;
            cmd.env_addr = 0;
        } else {
            cmd.phase_word = quantize_phase(p.phase);
            cmd.amp_word = quantize_amp(p.amp);
            auto it = prog_.envelopes.find(p.envelope);
            if (it == prog_.envelopes.end())
                throw AssemblyError(fmt::format("envelope '{}' is not defined", p.envelope));
            auto alloc = allocators_.find(chan_id);
            if (alloc == allocators_.end())
                alloc = allocators_.emplace(chan_id, EnvelopeAllocator(chan)).first;
            cmd.env_addr = alloc->second.place(p.envelope, it->second,
                                               static_cast<std::uint32_t>(n_samples));
        }

        std::uint64_t time = p.time + options_.time_offset_ticks;
        if (time > 0xFFFFFFFFull)
            throw AssemblyError(fmt::format("pulse time {} exceeds the 32-bit time field", time));

        PulseInstr instr;
        instr.time = static_cast<std::uint32_t>(time);
        instr.dest_channel = chan_id;
        instr.cmd = cmd;
        instructions_.push_back(instr);
    }

    void emit(const CoreReadResult& r) {
        ReadFprocInstr instr;
        instr.fproc_id = r.fproc;
        instr.dest_reg = reg_for(r.result, true);
        instructions_.push_back(instr);
    }

    void emit(const CoreIfElse& f) {
        // [branch -> THEN] [else items] [jump END] [THEN: then items] [END]
        std::size_t branch_pos = instructions_.size();
        if (f.cond.kind == CoreCond::Kind::Fproc) {
            BranchFprocInstr b;
            b.fproc_id = f.cond.fproc;
            b.compare_value = f.cond.expected_bit;
            instructions_.push_back(b);
        } else {
            BranchAluInstr b;
            b.op = AluKind::Eq;
            b.lhs = reg_for(f.cond.result, false);
            b.rhs = AluOperand::from_imm(f.cond.expected_bit);
            instructions_.push_back(b);
        }
        emit_items(f.else_items);
        std::size_t jump_pos = instructions_.size();
        instructions_.push_back(JumpInstr{});
        std::uint32_t then_target = static_cast<std::uint32_t>(instructions_.size());
        emit_items(f.then_items);
        std::uint32_t end_target = static_cast<std::uint32_t>(instructions_.size());

        if (auto* bf = std::get_if<BranchFprocInstr>(&instructions_[branch_pos]))
            bf->target = then_target;
        else
            std::get<BranchAluInstr>(instructions_[branch_pos]).target = then_target;
        std::get<JumpInstr>(instructions_[jump_pos]).target = end_target;
    }
};

} // namespace

AssemblyOutput assemble(const CompiledProgram& prog, const ChannelConfig& channels,
                        const AsmOptions& options) {
    AssemblyOutput out;
    std::map<std::uint16_t, EnvelopeAllocator> allocators;
    CoreAssembler assembler(prog, channels, options, allocators);

    for (const auto& core : prog.cores) {
        CoreBinary bin;
        bin.core_id = core.core_id;
        bin.instructions = assembler.assemble_core(core);
        out.program.cores.push_back(std::move(bin));
    }
    for (auto& [chan_id, alloc] : allocators) {
        if (!alloc.used())
            continue;
        out.directory[chan_id] = alloc.take_directory();
        out.envelopes[chan_id] = alloc.take_image();
    }
    return out;
}

std::string disassemble(const ProgramBinary& prog) {
    std::string out;
    for (const auto& core : prog.cores) {
        out += fmt::format("core {} ({} instructions)\n", core.core_id, core.instructions.size());
        for (std::size_t i = 0; i < core.instructions.size(); ++i)
            out += fmt::format("  {:4}: {}\n", i, format_instruction(core.instructions[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Envelope image files
// ---------------------------------------------------------------------------

namespace {
constexpr char kEnvMagic[4] = {'Q', 'E', 'V', '1'};

void put_u16v(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
} // namespace

std::vector<std::uint8_t> write_envelope_image(const EnvelopeImage& image) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kEnvMagic, kEnvMagic + 4);
    put_u16v(out, static_cast<std::uint16_t>(image.entries.size()));
    for (const auto& e : image.entries) {
        put_u16v(out, e.addr);
        put_u16v(out, e.length);
        for (const auto& [i, q] : e.samples) {
            put_u16v(out, static_cast<std::uint16_t>(i));
            put_u16v(out, static_cast<std::uint16_t>(q));
        }
    }
    return out;
}

EnvelopeImage read_envelope_image(const std::uint8_t* data, std::size_t size) {
    auto need = [&](std::size_t n) {
        if (size < n)
            throw DecodeError("truncated envelope image");
    };
    need(6);
    if (std::memcmp(data, kEnvMagic, 4) != 0)
        throw DecodeError("bad envelope image magic, expected \"QEV1\"");
    std::size_t pos = 4;
    auto u16 = [&]() {
        need(pos + 2);
        std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
        pos += 2;
        return v;
    };
    EnvelopeImage image;
    std::uint16_t count = u16();
    for (std::uint16_t k = 0; k < count; ++k) {
        EnvelopeEntry e;
        e.addr = u16();
        e.length = u16();
        e.samples.reserve(e.length);
        for (std::uint16_t s = 0; s < e.length; ++s) {
            std::int16_t i = static_cast<std::int16_t>(u16());
            std::int16_t q = static_cast<std::int16_t>(u16());
            e.samples.emplace_back(i, q);
        }
        image.entries.push_back(std::move(e));
    }
    if (pos != size)
        throw DecodeError("trailing bytes after envelope image data");
    return image;
}

EnvelopeImage read_envelope_image(const std::vector<std::uint8_t>& data) {
    return read_envelope_image(data.data(), data.size());
}

void write_envelope_image_file(const std::string& path, const EnvelopeImage& image) {
    auto bytes = write_envelope_image(image);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError(fmt::format("cannot open '{}' for writing", path));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EnvelopeImage read_envelope_image_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError(fmt::format("cannot open envelope image '{}'", path));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return read_envelope_image(bytes);
}

void load_envelope_memory(const EnvelopeImage& image, EnvelopeMemory& mem) {
    for (const auto& e : image.entries) {
        std::vector<cplx> samples(e.samples.size());
        for (std::size_t k = 0; k < e.samples.size(); ++k)
            samples[k] = {static_cast<double>(e.samples[k].first) / 32767.0,
                          static_cast<double>(e.samples[k].second) / 32767.0};
        mem.write(e.addr, samples);
    }
}

} // namespace qcs
