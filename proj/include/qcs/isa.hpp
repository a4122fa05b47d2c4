#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "qcs/errors.hpp"

// Instruction set of the distributed processor: the 72-bit parameterized
// pulse command, the control-flow/ALU instructions, and a bit-exact codec
// into 128-bit little-endian words.

namespace qcs {

// ---------------------------------------------------------------------------
// Pulse command
// ---------------------------------------------------------------------------

// Field widths of the packed pulse command. Packing order, MSB first:
//   [freq:24 | phase:14 | amp:10 | length:12 | env_addr:12]  = 72 bits
inline constexpr unsigned kFreqBits = 24;
inline constexpr unsigned kPhaseBits = 14;
inline constexpr unsigned kAmpBits = 10;
inline constexpr unsigned kLengthBits = 12;
inline constexpr unsigned kEnvAddrBits = 12;
inline constexpr unsigned kPulseCommandBits =
    kFreqBits + kPhaseBits + kAmpBits + kLengthBits + kEnvAddrBits;
static_assert(kPulseCommandBits == 72);

inline constexpr std::size_t kEnvelopeMemoryCapacity = 4096;

// Parameterized pulse descriptor. Physical meaning of the words:
//   f   = freq_word / 2^24 * fs        carrier frequency
//   phi = phase_word / 2^14 * 2*pi     initial phase
//   a   = amp_word / 2^10              amplitude scale in [0, 1)
//   length                             duration in output samples
//   env_addr                           start index into envelope memory
struct PulseCommand {
    std::uint32_t freq_word = 0;
    std::uint16_t phase_word = 0;
    std::uint16_t amp_word = 0;
    std::uint16_t length = 0;
    std::uint16_t env_addr = 0;

    bool operator==(const PulseCommand&) const = default;
};

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

inline constexpr unsigned kRegisterCount = 16;

enum class AluKind : std::uint8_t { Add = 0, Sub, Eq, Gt, Lt, Ge, Le };

enum class AluDestKind : std::uint8_t { Register = 0, QclkIncrement, InstructionPointer };

// Right-hand operand: a register id or a signed 32-bit immediate.
struct AluOperand {
    bool is_immediate = false;
    std::uint8_t reg = 0;
    std::int32_t immediate = 0;

    static AluOperand from_reg(std::uint8_t r) { return {false, r, 0}; }
    static AluOperand from_imm(std::int32_t v) { return {true, 0, v}; }

    bool operator==(const AluOperand&) const = default;
};

struct PulseInstr {
    std::uint32_t time = 0; // qclk tick at which the command fires
    std::uint16_t dest_channel = 0;
    PulseCommand cmd;
    bool operator==(const PulseInstr&) const = default;
};

struct AluInstr {
    AluKind op = AluKind::Add;
    std::uint8_t lhs = 0; // register id
    AluOperand rhs;
    AluDestKind dest_kind = AluDestKind::Register;
    std::uint8_t dest_reg = 0;
    bool operator==(const AluInstr&) const = default;
};

struct JumpInstr {
    std::uint32_t target = 0;
    bool operator==(const JumpInstr&) const = default;
};

struct BranchAluInstr {
    AluKind op = AluKind::Eq;
    std::uint8_t lhs = 0;
    AluOperand rhs;
    std::uint32_t target = 0; // taken when the comparison yields nonzero
    bool operator==(const BranchAluInstr&) const = default;
};

struct ReadFprocInstr {
    std::uint16_t fproc_id = 0;
    std::uint8_t dest_reg = 0;
    bool operator==(const ReadFprocInstr&) const = default;
};

struct BranchFprocInstr {
    std::uint16_t fproc_id = 0;
    std::int32_t compare_value = 0;
    std::uint32_t target = 0; // taken when the popped value equals compare_value
    bool operator==(const BranchFprocInstr&) const = default;
};

struct SyncInstr {
    std::uint8_t barrier_id = 0;
    std::uint64_t core_mask = 0; // bit i set = core i participates
    bool operator==(const SyncInstr&) const = default;
};

struct HaltInstr {
    bool operator==(const HaltInstr&) const = default;
};

using Instruction = std::variant<PulseInstr, AluInstr, JumpInstr, BranchAluInstr,
                                 ReadFprocInstr, BranchFprocInstr, SyncInstr, HaltInstr>;

// 16 x 32-bit signed register bank. Never-written registers read as 0.
struct RegisterFile {
    std::array<std::int32_t, kRegisterCount> regs{};

    std::int32_t read(std::uint8_t id) const { return regs.at(id); }
    void write(std::uint8_t id, std::int32_t v) { regs.at(id) = v; }
};

// ---------------------------------------------------------------------------
// Binary codec
// ---------------------------------------------------------------------------

// One 128-bit instruction word, little-endian on disk (lo first). Bit n of
// the word is bit (n % 64) of lo (n < 64) or hi (n >= 64).
struct Word128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    void set_bits(unsigned pos, unsigned width, std::uint64_t value);
    std::uint64_t get_bits(unsigned pos, unsigned width) const;

    std::array<std::uint8_t, 16> to_bytes() const;
    static Word128 from_bytes(const std::uint8_t* p);

    bool operator==(const Word128&) const = default;
};

enum class Opcode : std::uint8_t {
    Pulse = 0x01,
    Alu = 0x02,
    Jump = 0x03,
    BranchAlu = 0x04,
    ReadFproc = 0x05,
    BranchFproc = 0x06,
    Sync = 0x07,
    Halt = 0x08,
};

// Packs the command into the low 72 bits of the returned word pair
// (value = freq << 48 | phase << 34 | amp << 24 | length << 12 | env_addr).
Word128 pack_pulse_command(const PulseCommand& cmd);
PulseCommand unpack_pulse_command(const Word128& w);

// Bit-exact instruction codec. Layouts are documented in docs/FORMATS.md;
// the opcode occupies bits [120,128) and the pulse payload bits [0,72).
Word128 encode_instruction(const Instruction& instr);
Instruction decode_instruction(const Word128& word);

const char* opcode_name(Opcode op);
const char* alu_kind_name(AluKind k);

// ---------------------------------------------------------------------------
// Quantization (rounding is ties-away-from-zero everywhere)
// ---------------------------------------------------------------------------

// round(f/fs * 2^24); requires 0 <= f < fs and a representable result.
std::uint32_t quantize_freq(double f_hz, double fs_hz);
// round(mod(phi, 2*pi)/(2*pi) * 2^14) mod 2^14; any real accepted.
std::uint16_t quantize_phase(double phi_rad);
// round(a * 2^10), saturating at 2^10-1; requires 0 <= a < 1.
std::uint16_t quantize_amp(double a);

inline double freq_from_word(std::uint32_t word, double fs_hz) {
    return static_cast<double>(word) / 16777216.0 * fs_hz; // / 2^24
}
inline double phase_from_word(std::uint16_t word) {
    return static_cast<double>(word) / 16384.0 * 6.283185307179586476925286766559; // / 2^14 * 2pi
}
inline double amp_from_word(std::uint16_t word) {
    return static_cast<double>(word) / 1024.0; // / 2^10
}

// ---------------------------------------------------------------------------
// Program container ("QBC2" file format)
// ---------------------------------------------------------------------------

struct CoreBinary {
    std::uint16_t core_id = 0;
    std::vector<Instruction> instructions;
};

struct ProgramBinary {
    std::uint16_t version = 1;
    std::vector<CoreBinary> cores;

    bool operator==(const ProgramBinary&) const;
};

// Serializes as: magic "QBC2", version u16, core count u16, then per core:
// core id u16, instruction count u32, instructions as LE 128-bit words.
std::vector<std::uint8_t> write_program(const ProgramBinary& prog);
ProgramBinary read_program(const std::uint8_t* data, std::size_t size);
ProgramBinary read_program(const std::vector<std::uint8_t>& data);

void write_program_file(const std::string& path, const ProgramBinary& prog);
ProgramBinary read_program_file(const std::string& path);

// One line of human-readable text per instruction.
std::string format_instruction(const Instruction& instr);

} // namespace qcs
