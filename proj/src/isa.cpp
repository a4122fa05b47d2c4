#include "qcs/isa.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace qcs {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_width(const char* field, std::uint64_t value, unsigned bits) {
    if (bits < 64 && value >= (std::uint64_t{1} << bits))
        throw EncodingError(fmt::format("field '{}' value {} exceeds {} bits", field, value, bits));
}

void check_reg(const char* field, std::uint8_t id) {
    if (id >= kRegisterCount)
        throw EncodingError(fmt::format("field '{}' register id {} out of [0, {})", field, id, kRegisterCount));
}

} // namespace

// ---------------------------------------------------------------------------
// Word128
// ---------------------------------------------------------------------------

void Word128::set_bits(unsigned pos, unsigned width, std::uint64_t value) {
    if (width < 64 && value >= (std::uint64_t{1} << width))
        throw EncodingError(fmt::format("value {} exceeds {} bits", value, width));
    for (unsigned i = 0; i < width; ++i) {
        unsigned bit = pos + i;
        std::uint64_t& half = bit < 64 ? lo : hi;
        unsigned off = bit & 63;
        half = (half & ~(std::uint64_t{1} << off)) | (((value >> i) & 1) << off);
    }
}

std::uint64_t Word128::get_bits(unsigned pos, unsigned width) const {
    std::uint64_t out = 0;
    for (unsigned i = 0; i < width; ++i) {
        unsigned bit = pos + i;
        const std::uint64_t& half = bit < 64 ? lo : hi;
        out |= ((half >> (bit & 63)) & 1) << i;
    }
    return out;
}

std::array<std::uint8_t, 16> Word128::to_bytes() const {
    std::array<std::uint8_t, 16> out;
    for (int i = 0; i < 8; ++i) {
        out[i] = static_cast<std::uint8_t>(lo >> (8 * i));
        out[8 + i] = static_cast<std::uint8_t>(hi >> (8 * i));
    }
    return out;
}

Word128 Word128::from_bytes(const std::uint8_t* p) {
    Word128 w;
    for (int i = 0; i < 8; ++i) {
        w.lo |= std::uint64_t{p[i]} << (8 * i);
        w.hi |= std::uint64_t{p[8 + i]} << (8 * i);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Pulse command packing
// ---------------------------------------------------------------------------

Word128 pack_pulse_command(const PulseCommand& cmd) {
    check_width("freq_word", cmd.freq_word, kFreqBits);
    check_width("phase_word", cmd.phase_word, kPhaseBits);
    check_width("amp_word", cmd.amp_word, kAmpBits);
    check_width("length", cmd.length, kLengthBits);
    check_width("env_addr", cmd.env_addr, kEnvAddrBits);
    Word128 w;
    w.set_bits(0, kEnvAddrBits, cmd.env_addr);
    w.set_bits(12, kLengthBits, cmd.length);
    w.set_bits(24, kAmpBits, cmd.amp_word);
    w.set_bits(34, kPhaseBits, cmd.phase_word);
    w.set_bits(48, kFreqBits, cmd.freq_word);
    return w;
}

PulseCommand unpack_pulse_command(const Word128& w) {
    PulseCommand cmd;
    cmd.env_addr = static_cast<std::uint16_t>(w.get_bits(0, kEnvAddrBits));
    cmd.length = static_cast<std::uint16_t>(w.get_bits(12, kLengthBits));
    cmd.amp_word = static_cast<std::uint16_t>(w.get_bits(24, kAmpBits));
    cmd.phase_word = static_cast<std::uint16_t>(w.get_bits(34, kPhaseBits));
    cmd.freq_word = static_cast<std::uint32_t>(w.get_bits(48, kFreqBits));
    return cmd;
}

// ---------------------------------------------------------------------------
// Instruction codec
// ---------------------------------------------------------------------------

namespace {

constexpr unsigned kOpcodePos = 120;

void encode_alu_operand(Word128& w, const AluOperand& rhs) {
    w.set_bits(3, 1, rhs.is_immediate ? 1 : 0);
    if (rhs.is_immediate) {
        w.set_bits(12, 32, static_cast<std::uint32_t>(rhs.immediate));
    } else {
        check_reg("rhs", rhs.reg);
        w.set_bits(8, 4, rhs.reg);
    }
}

AluOperand decode_alu_operand(const Word128& w) {
    AluOperand rhs;
    rhs.is_immediate = w.get_bits(3, 1) != 0;
    if (rhs.is_immediate) {
        if (w.get_bits(8, 4) != 0)
            throw DecodeError("nonzero rhs register field in immediate-form ALU word");
        rhs.immediate = static_cast<std::int32_t>(static_cast<std::uint32_t>(w.get_bits(12, 32)));
    } else {
        if (w.get_bits(12, 32) != 0)
            throw DecodeError("nonzero immediate field in register-form ALU word");
        rhs.reg = static_cast<std::uint8_t>(w.get_bits(8, 4));
    }
    return rhs;
}

AluKind decode_alu_kind(const Word128& w) {
    std::uint64_t op = w.get_bits(0, 3);
    if (op > static_cast<std::uint64_t>(AluKind::Le))
        throw DecodeError(fmt::format("invalid ALU op field {}", op));
    return static_cast<AluKind>(op);
}

void check_reserved_zero(const Word128& w, unsigned from, unsigned to, const char* what) {
    for (unsigned pos = from; pos < to; pos += 48) {
        unsigned width = std::min(48u, to - pos);
        if (w.get_bits(pos, width) != 0)
            throw DecodeError(fmt::format("nonzero reserved bits in {} word", what));
    }
}

} // namespace

Word128 encode_instruction(const Instruction& instr) {
    Word128 w;
    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, PulseInstr>) {
                w = pack_pulse_command(in.cmd);
                w.set_bits(72, 16, in.dest_channel);
                w.set_bits(88, 32, in.time);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::Pulse));
            } else if constexpr (std::is_same_v<T, AluInstr>) {
                check_reg("lhs", in.lhs);
                w.set_bits(0, 3, static_cast<std::uint64_t>(in.op));
                encode_alu_operand(w, in.rhs);
                w.set_bits(4, 4, in.lhs);
                w.set_bits(44, 2, static_cast<std::uint64_t>(in.dest_kind));
                if (in.dest_kind == AluDestKind::Register) {
                    check_reg("dest", in.dest_reg);
                    w.set_bits(46, 4, in.dest_reg);
                } else if (in.dest_reg != 0) {
                    throw EncodingError("dest_reg must be 0 for non-register ALU destinations");
                }
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::Alu));
            } else if constexpr (std::is_same_v<T, JumpInstr>) {
                w.set_bits(0, 32, in.target);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::Jump));
            } else if constexpr (std::is_same_v<T, BranchAluInstr>) {
                check_reg("lhs", in.lhs);
                w.set_bits(0, 3, static_cast<std::uint64_t>(in.op));
                encode_alu_operand(w, in.rhs);
                w.set_bits(4, 4, in.lhs);
                w.set_bits(44, 32, in.target);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::BranchAlu));
            } else if constexpr (std::is_same_v<T, ReadFprocInstr>) {
                check_reg("dest", in.dest_reg);
                w.set_bits(0, 16, in.fproc_id);
                w.set_bits(16, 4, in.dest_reg);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::ReadFproc));
            } else if constexpr (std::is_same_v<T, BranchFprocInstr>) {
                w.set_bits(0, 16, in.fproc_id);
                w.set_bits(16, 32, static_cast<std::uint32_t>(in.compare_value));
                w.set_bits(48, 32, in.target);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::BranchFproc));
            } else if constexpr (std::is_same_v<T, SyncInstr>) {
                w.set_bits(0, 8, in.barrier_id);
                w.set_bits(8, 32, in.core_mask & 0xFFFFFFFFu);
                w.set_bits(40, 32, in.core_mask >> 32);
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::Sync));
            } else if constexpr (std::is_same_v<T, HaltInstr>) {
                w.set_bits(kOpcodePos, 8, static_cast<std::uint64_t>(Opcode::Halt));
            }
        },
        instr);
    return w;
}

Instruction decode_instruction(const Word128& word) {
    auto opcode = word.get_bits(kOpcodePos, 8);
    switch (static_cast<Opcode>(opcode)) {
    case Opcode::Pulse: {
        PulseInstr in;
        in.cmd = unpack_pulse_command(word);
        in.dest_channel = static_cast<std::uint16_t>(word.get_bits(72, 16));
        in.time = static_cast<std::uint32_t>(word.get_bits(88, 32));
        return in;
    }
    case Opcode::Alu: {
        AluInstr in;
        in.op = decode_alu_kind(word);
        in.lhs = static_cast<std::uint8_t>(word.get_bits(4, 4));
        in.rhs = decode_alu_operand(word);
        auto kind = word.get_bits(44, 2);
        if (kind > static_cast<std::uint64_t>(AluDestKind::InstructionPointer))
            throw DecodeError(fmt::format("invalid ALU dest kind {}", kind));
        in.dest_kind = static_cast<AluDestKind>(kind);
        in.dest_reg = static_cast<std::uint8_t>(word.get_bits(46, 4));
        if (in.dest_kind != AluDestKind::Register && in.dest_reg != 0)
            throw DecodeError("nonzero dest register for non-register ALU destination");
        check_reserved_zero(word, 50, kOpcodePos, "alu");
        return in;
    }
    case Opcode::Jump: {
        JumpInstr in;
        in.target = static_cast<std::uint32_t>(word.get_bits(0, 32));
        check_reserved_zero(word, 32, kOpcodePos, "jump");
        return in;
    }
    case Opcode::BranchAlu: {
        BranchAluInstr in;
        in.op = decode_alu_kind(word);
        in.lhs = static_cast<std::uint8_t>(word.get_bits(4, 4));
        in.rhs = decode_alu_operand(word);
        in.target = static_cast<std::uint32_t>(word.get_bits(44, 32));
        check_reserved_zero(word, 76, kOpcodePos, "branch-alu");
        return in;
    }
    case Opcode::ReadFproc: {
        ReadFprocInstr in;
        in.fproc_id = static_cast<std::uint16_t>(word.get_bits(0, 16));
        in.dest_reg = static_cast<std::uint8_t>(word.get_bits(16, 4));
        check_reserved_zero(word, 20, kOpcodePos, "read-fproc");
        return in;
    }
    case Opcode::BranchFproc: {
        BranchFprocInstr in;
        in.fproc_id = static_cast<std::uint16_t>(word.get_bits(0, 16));
        in.compare_value = static_cast<std::int32_t>(static_cast<std::uint32_t>(word.get_bits(16, 32)));
        in.target = static_cast<std::uint32_t>(word.get_bits(48, 32));
        check_reserved_zero(word, 80, kOpcodePos, "branch-fproc");
        return in;
    }
    case Opcode::Sync: {
        SyncInstr in;
        in.barrier_id = static_cast<std::uint8_t>(word.get_bits(0, 8));
        in.core_mask = word.get_bits(8, 32) | (word.get_bits(40, 32) << 32);
        check_reserved_zero(word, 72, kOpcodePos, "sync");
        return in;
    }
    case Opcode::Halt: {
        check_reserved_zero(word, 0, kOpcodePos, "halt");
        return HaltInstr{};
    }
    default:
        throw DecodeError(fmt::format("unknown opcode 0x{:02X}", opcode));
    }
}

const char* opcode_name(Opcode op) {
    switch (op) {
    case Opcode::Pulse: return "pulse";
    case Opcode::Alu: return "alu";
    case Opcode::Jump: return "jump";
    case Opcode::BranchAlu: return "balu";
    case Opcode::ReadFproc: return "rdfp";
    case Opcode::BranchFproc: return "bfp";
    case Opcode::Sync: return "sync";
    case Opcode::Halt: return "halt";
    }
    return "?";
}

const char* alu_kind_name(AluKind k) {
    switch (k) {
    case AluKind::Add: return "add";
    case AluKind::Sub: return "sub";
    case AluKind::Eq: return "eq";
    case AluKind::Gt: return "gt";
    case AluKind::Lt: return "lt";
    case AluKind::Ge: return "ge";
    case AluKind::Le: return "le";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

std::uint32_t quantize_freq(double f_hz, double fs_hz) {
    if (!(fs_hz > 0.0))
        throw RangeError("sample rate must be positive");
    if (!(f_hz >= 0.0) || !(f_hz < fs_hz))
        throw RangeError(fmt::format("frequency {} Hz outside [0, {}) Hz", f_hz, fs_hz));
    long long w = std::llround(f_hz / fs_hz * 16777216.0);
    if (w >= 16777216)
        throw RangeError(fmt::format("frequency {} Hz rounds past the 24-bit range at fs {} Hz", f_hz, fs_hz));
    return static_cast<std::uint32_t>(w);
}

std::uint16_t quantize_phase(double phi_rad) {
    double m = std::fmod(phi_rad, kTwoPi);
    if (m < 0.0)
        m += kTwoPi;
    long long w = std::llround(m / kTwoPi * 16384.0);
    return static_cast<std::uint16_t>(w & 0x3FFF); // mod 2^14
}

std::uint16_t quantize_amp(double a) {
    if (!(a >= 0.0) || !(a < 1.0))
        throw RangeError(fmt::format("amplitude {} outside [0, 1)", a));
    long long w = std::llround(a * 1024.0);
    if (w > 1023)
        w = 1023; // saturate at the top code
    return static_cast<std::uint16_t>(w);
}

// ---------------------------------------------------------------------------
// Program container
// ---------------------------------------------------------------------------

bool ProgramBinary::operator==(const ProgramBinary& other) const {
    if (version != other.version || cores.size() != other.cores.size())
        return false;
    for (std::size_t i = 0; i < cores.size(); ++i) {
        if (cores[i].core_id != other.cores[i].core_id ||
            cores[i].instructions != other.cores[i].instructions)
            return false;
    }
    return true;
}

namespace {

constexpr char kMagic[4] = {'Q', 'B', 'C', '2'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void need(std::size_t n) const {
        if (left < n)
            throw DecodeError("truncated program file");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t{p[i]} << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
};

} // namespace

std::vector<std::uint8_t> write_program(const ProgramBinary& prog) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, prog.version);
    put_u16(out, static_cast<std::uint16_t>(prog.cores.size()));
    for (const auto& core : prog.cores) {
        put_u16(out, core.core_id);
        put_u32(out, static_cast<std::uint32_t>(core.instructions.size()));
        for (const auto& instr : core.instructions) {
            auto bytes = encode_instruction(instr).to_bytes();
            out.insert(out.end(), bytes.begin(), bytes.end());
        }
    }
    return out;
}

ProgramBinary read_program(const std::uint8_t* data, std::size_t size) {
    Reader r{data, size};
    r.need(4);
    if (std::memcmp(r.p, kMagic, 4) != 0)
        throw DecodeError(fmt::format("bad magic \"{}{}{}{}\", expected \"QBC2\"",
                                      static_cast<char>(r.p[0]), static_cast<char>(r.p[1]),
                                      static_cast<char>(r.p[2]), static_cast<char>(r.p[3])));
    r.p += 4;
    r.left -= 4;
    ProgramBinary prog;
    prog.version = r.u16();
    if (prog.version != 1)
        throw DecodeError(fmt::format("unsupported program version {}", prog.version));
    std::uint16_t n_cores = r.u16();
    for (std::uint16_t c = 0; c < n_cores; ++c) {
        CoreBinary core;
        core.core_id = r.u16();
        std::uint32_t count = r.u32();
        core.instructions.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            r.need(16);
            core.instructions.push_back(decode_instruction(Word128::from_bytes(r.p)));
            r.p += 16;
            r.left -= 16;
        }
        prog.cores.push_back(std::move(core));
    }
    if (r.left != 0)
        throw DecodeError("trailing bytes after program data");
    // Jump/branch targets must land inside the owning core's program.
    for (const auto& core : prog.cores) {
        auto size_ok = [&](std::uint32_t t) { return t < core.instructions.size(); };
        for (const auto& instr : core.instructions) {
            bool ok = std::visit(
                [&](const auto& in) {
                    using T = std::decay_t<decltype(in)>;
                    if constexpr (std::is_same_v<T, JumpInstr>)
                        return size_ok(in.target);
                    else if constexpr (std::is_same_v<T, BranchAluInstr>)
                        return size_ok(in.target);
                    else if constexpr (std::is_same_v<T, BranchFprocInstr>)
                        return size_ok(in.target);
                    else
                        return true;
                },
                instr);
            if (!ok)
                throw DecodeError(fmt::format("branch target out of range in core {}", core.core_id));
        }
    }
    return prog;
}

ProgramBinary read_program(const std::vector<std::uint8_t>& data) {
    return read_program(data.data(), data.size());
}

void write_program_file(const std::string& path, const ProgramBinary& prog) {
    auto bytes = write_program(prog);
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError(fmt::format("cannot open '{}' for writing", path));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ProgramBinary read_program_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError(fmt::format("cannot open program file '{}'", path));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return read_program(bytes);
}

std::string format_instruction(const Instruction& instr) {
    return std::visit(
        [](const auto& in) -> std::string {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, PulseInstr>) {
                return fmt::format("pulse t={} ch={} freq_word={} phase_word={} amp_word={} len={} env_addr={}",
                                   in.time, in.dest_channel, in.cmd.freq_word, in.cmd.phase_word,
                                   in.cmd.amp_word, in.cmd.length, in.cmd.env_addr);
            } else if constexpr (std::is_same_v<T, AluInstr>) {
                std::string rhs = in.rhs.is_immediate ? fmt::format("#{}", in.rhs.immediate)
                                                      : fmt::format("r{}", in.rhs.reg);
                std::string dst = in.dest_kind == AluDestKind::Register
                                      ? fmt::format("r{}", in.dest_reg)
                                      : (in.dest_kind == AluDestKind::QclkIncrement ? "qclk+" : "iptr");
                return fmt::format("alu {} r{}, {} -> {}", alu_kind_name(in.op), in.lhs, rhs, dst);
            } else if constexpr (std::is_same_v<T, JumpInstr>) {
                return fmt::format("jump {}", in.target);
            } else if constexpr (std::is_same_v<T, BranchAluInstr>) {
                std::string rhs = in.rhs.is_immediate ? fmt::format("#{}", in.rhs.immediate)
                                                      : fmt::format("r{}", in.rhs.reg);
                return fmt::format("balu {} r{}, {} -> {}", alu_kind_name(in.op), in.lhs, rhs, in.target);
            } else if constexpr (std::is_same_v<T, ReadFprocInstr>) {
                return fmt::format("rdfp f{} -> r{}", in.fproc_id, in.dest_reg);
            } else if constexpr (std::is_same_v<T, BranchFprocInstr>) {
                return fmt::format("bfp f{} == {} -> {}", in.fproc_id, in.compare_value, in.target);
            } else if constexpr (std::is_same_v<T, SyncInstr>) {
                return fmt::format("sync b{} mask=0x{:x}", in.barrier_id, in.core_mask);
            } else {
                return "halt";
            }
        },
        instr);
}

} // namespace qcs
