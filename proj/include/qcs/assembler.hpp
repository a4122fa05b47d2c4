#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qcs/compiler.hpp"
#include "qcs/config.hpp"
#include "qcs/dsp.hpp"
#include "qcs/isa.hpp"

// Assembler: converts per-core pulse-level programs into binary core
// programs plus per-channel envelope memory images, using the channel
// configuration for channel ids, sample rates and pulse-word quantization.

namespace qcs {

// Envelope samples are signed 16-bit I/Q at full scale 2^15 - 1.
struct EnvelopeEntry {
    std::uint16_t addr = 0;
    std::uint16_t length = 0; // in channel samples
    std::vector<std::pair<std::int16_t, std::int16_t>> samples;

    bool operator==(const EnvelopeEntry&) const = default;
};

struct EnvelopeImage {
    std::vector<EnvelopeEntry> entries;

    bool operator==(const EnvelopeImage&) const = default;
};

struct AsmOptions {
    // Added to every pulse command time so the first command clears the
    // post-barrier pipeline (a command at qclk 0 cannot retire >= 4 cycles
    // after issue). The schedule itself starts at t = 0.
    std::uint32_t time_offset_ticks = 32;
};

struct AssemblyOutput {
    ProgramBinary program;
    std::map<std::uint16_t, EnvelopeImage> envelopes; // by channel id
    // name@length -> (addr, length) per channel, for listings and tests
    std::map<std::uint16_t, std::vector<std::tuple<std::string, std::uint16_t, std::uint16_t>>>
        directory;
};

AssemblyOutput assemble(const CompiledProgram& prog, const ChannelConfig& channels,
                        const AsmOptions& options = {});

// Textual listing of a program binary, one instruction per line.
std::string disassemble(const ProgramBinary& prog);

// "QEV1" envelope image file: magic, entry count u16, then per entry
// addr u16, length u16, samples as I/Q s16 little-endian pairs.
std::vector<std::uint8_t> write_envelope_image(const EnvelopeImage& image);
EnvelopeImage read_envelope_image(const std::uint8_t* data, std::size_t size);
EnvelopeImage read_envelope_image(const std::vector<std::uint8_t>& data);

void write_envelope_image_file(const std::string& path, const EnvelopeImage& image);
EnvelopeImage read_envelope_image_file(const std::string& path);

// Dequantizes an image into envelope memory (writes are access-logged).
void load_envelope_memory(const EnvelopeImage& image, EnvelopeMemory& mem);

} // namespace qcs
