// qcs: compile circuits to distributed-processor binaries, run them against
// the stochastic qubit model, inspect binaries, and exercise the PTP clock
// synchronization arithmetic.
//
// Exit codes: 0 success, 1 runtime failure (deadlock, pulse-late),
// 2 input validation failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qcs/assembler.hpp"
#include "qcs/circuit.hpp"
#include "qcs/compiler.hpp"
#include "qcs/config.hpp"
#include "qcs/emulator.hpp"
#include "qcs/ptp.hpp"
#include "qcs/runner.hpp"

namespace fs = std::filesystem;
using namespace qcs;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f)
        throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
    f << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path);
    if (!f)
        throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::string env_image_filename(const std::string& channel_name) {
    return fmt::format("env_{}.qev1", channel_name);
}

void write_assembly(const fs::path& out_dir, const AssemblyOutput& out,
                    const ChannelConfig& channels, bool dump_listing) {
    fs::create_directories(out_dir);
    write_program_file((out_dir / "program.qbc2").string(), out.program);
    for (const auto& [chan_id, image] : out.envelopes)
        write_envelope_image_file(
            (out_dir / env_image_filename(channels.by_id(chan_id).name)).string(), image);
    std::string listing = disassemble(out.program);
    write_text(out_dir / "listing.txt", listing);
    if (dump_listing)
        std::cout << listing;
}

struct LoadedProgram {
    ProgramBinary program;
    std::map<std::uint16_t, EnvelopeImage> envelopes;
};

LoadedProgram load_program(const fs::path& path, const ChannelConfig& channels) {
    LoadedProgram lp;
    fs::path bin = path;
    fs::path dir = path;
    if (fs::is_directory(path)) {
        bin = path / "program.qbc2";
    } else {
        dir = path.parent_path();
    }
    lp.program = read_program_file(bin.string());
    for (const auto& chan : channels.channels) {
        fs::path env = dir / env_image_filename(chan.name);
        if (fs::exists(env))
            lp.envelopes[channels.id_of(chan.name)] = read_envelope_image_file(env.string());
    }
    return lp;
}

int cmd_compile(const std::string& circuit_path, const std::string& cal_path,
                const std::string& channels_path, const std::string& map_path,
                const std::string& out_path, std::uint32_t time_offset, bool dump_listing) {
    auto parse = parse_circuit_file(circuit_path);
    if (!parse.program) {
        std::cerr << fmt::format("{}: circuit has errors\n", circuit_path)
                  << format_diagnostics(parse.diagnostics);
        return 2;
    }
    CalibrationSet cal = load_calibration(cal_path);
    ChannelConfig channels = load_channel_config(channels_path);
    MappingConfig mapping = load_mapping(map_path);

    CompiledProgram compiled = compile_circuit(*parse.program, cal, mapping);
    AsmOptions opts;
    opts.time_offset_ticks = time_offset;
    AssemblyOutput out = assemble(compiled, channels, opts);

    fs::path out_dir(out_path);
    fs::create_directories(out_dir);
    write_text(out_dir / "program.json", compiled_to_json(compiled));
    write_text(out_dir / "schedule.txt", schedule_listing(compiled));
    write_assembly(out_dir, out, channels, dump_listing);
    std::cout << fmt::format("compiled {} -> {}\n", circuit_path, out_path);
    return 0;
}

int cmd_asm(const std::string& program_path, const std::string& channels_path,
            const std::string& out_path, std::uint32_t time_offset, bool dump_listing) {
    CompiledProgram compiled = compiled_from_json(read_text(program_path), program_path);
    ChannelConfig channels = load_channel_config(channels_path);
    AsmOptions opts;
    opts.time_offset_ticks = time_offset;
    AssemblyOutput out = assemble(compiled, channels, opts);
    write_assembly(fs::path(out_path), out, channels, dump_listing);
    std::cout << fmt::format("assembled {} -> {}\n", program_path, out_path);
    return 0;
}

int cmd_disasm(const std::string& binary_path) {
    fs::path p(binary_path);
    if (fs::is_directory(p))
        p /= "program.qbc2";
    std::cout << disassemble(read_program_file(p.string()));
    return 0;
}

int cmd_run(const std::string& program_path, const std::string& channels_path,
            const std::string& cal_path, const std::string& out_path, std::uint64_t shots,
            std::uint64_t seed, const std::string& mode_name, bool record_shots,
            bool dump_waveforms, bool gnuplot, bool events_csv) {
    ChannelConfig channels = load_channel_config(channels_path);
    CalibrationSet cal = load_calibration(cal_path);
    LoadedProgram lp = load_program(program_path, channels);

    ShotRunnerOptions opts;
    opts.shots = shots;
    opts.seed = seed;
    if (mode_name == "ideal-iq")
        opts.mode = ReadoutMode::IdealIq;
    else if (mode_name == "waveform")
        opts.mode = ReadoutMode::Waveform;
    else
        throw ConfigError(fmt::format("unknown mode '{}'; expected ideal-iq or waveform", mode_name));
    opts.record_shots = record_shots;
    opts.dump_waveforms = dump_waveforms;

    ShotRunner runner(lp.program, lp.envelopes, channels, cal);
    RunReport report = runner.run(opts);

    fs::path out_dir(out_path);
    fs::create_directories(out_dir);
    write_text(out_dir / "report.json", report_to_json(report));
    write_text(out_dir / "hist.csv", counts_to_csv(report));
    if (events_csv)
        write_text(out_dir / "events.csv", events_to_csv(runner.first_shot_events()));
    if (dump_waveforms)
        for (const auto& [tap, samples] : runner.waveforms().taps)
            write_text(out_dir / fmt::format("wave_{}.csv", tap), waveform_to_csv(samples));
    if (gnuplot)
        write_text(out_dir / "hist.gp",
                   "set datafile separator ','\n"
                   "set style data histogram\n"
                   "set style fill solid 0.8\n"
                   "set yrange [0:*]\n"
                   "set ylabel 'shots'\n"
                   "plot 'hist.csv' skip 1 using 2:xtic(1) title 'counts'\n");

    for (const auto& [bits, count] : report.counts)
        std::cout << fmt::format("{}: {}\n", bits, count);
    std::cout << fmt::format("report written to {}\n", out_path);
    return 0;
}

int cmd_ptp(std::uint64_t trials, std::uint64_t seed, std::int64_t min_delay, std::int64_t max_delay,
            std::int64_t min_offset, std::int64_t max_offset, std::int64_t asymmetry,
            std::int64_t max_gap, const std::string& out_path) {
    if (min_delay < 0 || max_delay < min_delay)
        throw ConfigError("delay range must satisfy 0 <= min <= max");
    if (max_offset < min_offset)
        throw ConfigError("offset range must satisfy min <= max");
    if (max_gap < 0)
        throw ConfigError("processing gap bound must be nonnegative");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> delay_dist(min_delay, max_delay);
    std::uniform_int_distribution<std::int64_t> offset_dist(min_offset, max_offset);
    std::uniform_int_distribution<std::int64_t> gap_dist(0, max_gap);

    std::string csv = "trial,true_offset,estimated_offset,residual\n";
    std::int64_t max_abs_residual = 0;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        std::int64_t offset = offset_dist(rng);
        std::int64_t d_ps = delay_dist(rng);
        std::int64_t d_sp = d_ps + asymmetry;
        auto exchange = ptp::simulate_exchange(offset, d_ps, d_sp, gap_dist(rng), 0);
        std::int64_t estimate = ptp::compute_offset(exchange);
        ptp::ClockNode secondary{offset, ptp::ClockRole::Secondary};
        secondary = ptp::apply_correction(secondary, estimate);
        std::int64_t residual = secondary.true_offset;
        max_abs_residual = std::max(max_abs_residual, std::abs(residual));
        csv += fmt::format("{},{},{},{}\n", trial, offset, estimate, residual);
    }
    csv += fmt::format("# max_abs_residual,{}\n", max_abs_residual);
    if (!out_path.empty())
        write_text(out_path, csv);
    else
        std::cout << csv;
    std::cout << fmt::format("max |residual| over {} trials: {}\n", trials, max_abs_residual);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"software model of a distributed-processor qubit control stack"};
    app.require_subcommand(1);

    // compile
    auto* compile = app.add_subcommand("compile", "compile a circuit to binaries + envelope images");
    std::string circuit_path, cal_path, channels_path, map_path, out_path = "out";
    std::uint32_t time_offset = 32;
    bool dump_listing = false;
    compile->add_option("--circuit", circuit_path, "circuit source file")->required();
    compile->add_option("--cal", cal_path, "calibration set")->required();
    compile->add_option("--channels", channels_path, "channel configuration")->required();
    compile->add_option("--map", map_path, "qubit-to-core mapping")->required();
    compile->add_option("--out", out_path, "output directory");
    compile->add_option("--time-offset", time_offset, "ticks added to every command time");
    compile->add_flag("--dump-listing", dump_listing, "print the disassembly");

    // asm
    auto* asmc = app.add_subcommand("asm", "assemble a pulse-level program (program.json)");
    std::string pulse_program_path;
    asmc->add_option("--program", pulse_program_path, "pulse-level program JSON")->required();
    asmc->add_option("--channels", channels_path, "channel configuration")->required();
    asmc->add_option("--out", out_path, "output directory");
    asmc->add_option("--time-offset", time_offset, "ticks added to every command time");
    asmc->add_flag("--dump-listing", dump_listing, "print the disassembly");

    // disasm
    auto* disasmc = app.add_subcommand("disasm", "print the instruction listing of a binary");
    std::string binary_path;
    disasmc->add_option("binary", binary_path, "program.qbc2 or its directory")->required();

    // run
    auto* runc = app.add_subcommand("run", "run shots against the qubit model");
    std::uint64_t shots = 1, seed = 1;
    std::string mode_name = "ideal-iq";
    bool record_shots = false, dump_waveforms = false, gnuplot = false, events_csv = false;
    runc->add_option("--program", binary_path, "binary directory or program.qbc2")->required();
    runc->add_option("--channels", channels_path, "channel configuration")->required();
    runc->add_option("--cal", cal_path, "calibration set")->required();
    runc->add_option("--shots", shots, "number of shots");
    runc->add_option("--seed", seed, "RNG seed");
    runc->add_option("--mode", mode_name, "ideal-iq | waveform");
    runc->add_option("--out", out_path, "output directory");
    runc->add_flag("--record-shots", record_shots, "keep per-shot measurement records");
    runc->add_flag("--dump-waveforms", dump_waveforms, "write DAC/ADC/DLO taps of the first shot");
    runc->add_flag("--gnuplot", gnuplot, "emit a gnuplot script for the histogram");
    runc->add_flag("--events-csv", events_csv, "write the first shot's pulse event log");

    // ptp
    auto* ptpc = app.add_subcommand("ptp", "simulate clock-offset estimation exchanges");
    std::uint64_t trials = 1000;
    std::int64_t min_delay = 0, max_delay = 1000, min_offset = -1000, max_offset = 1000;
    std::int64_t asymmetry = 0, max_gap = 100;
    std::string ptp_out;
    ptpc->add_option("--trials", trials, "number of exchanges")->check(CLI::PositiveNumber);
    ptpc->add_option("--seed", seed, "RNG seed");
    ptpc->add_option("--min-delay", min_delay, "minimum path delay (ticks)");
    ptpc->add_option("--max-delay", max_delay, "maximum path delay (ticks)");
    ptpc->add_option("--min-offset", min_offset, "minimum true offset (ticks)");
    ptpc->add_option("--max-offset", max_offset, "maximum true offset (ticks)");
    ptpc->add_option("--asymmetry", asymmetry, "d_sp - d_ps (ticks)");
    ptpc->add_option("--max-gap", max_gap, "maximum processing gap (ticks)");
    ptpc->add_option("--out", ptp_out, "CSV output path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compile)
            return cmd_compile(circuit_path, cal_path, channels_path, map_path, out_path,
                               time_offset, dump_listing);
        if (*asmc)
            return cmd_asm(pulse_program_path, channels_path, out_path, time_offset, dump_listing);
        if (*disasmc)
            return cmd_disasm(binary_path);
        if (*runc)
            return cmd_run(binary_path, channels_path, cal_path, out_path, shots, seed, mode_name,
                           record_shots, dump_waveforms, gnuplot, events_csv);
        if (*ptpc)
            return cmd_ptp(trials, seed, min_delay, max_delay, min_offset, max_offset, asymmetry,
                           max_gap, ptp_out);
    } catch (const DeadlockError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const EmulatorError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        // validation-class failures: bad files, bad configs, bad circuits
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
