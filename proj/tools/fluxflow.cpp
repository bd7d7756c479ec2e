// fluxflow: temporal perturbation of video frame datasets.
//
//   fluxflow augment  --frame|--block ... -i manifest.jsonl -o out/prefix
//   fluxflow metrics  -i manifest.jsonl -o report.jsonl [--csv series.csv]
//   fluxflow inspect  out/prefix.log.jsonl
//   fluxflow bench    [--clips N]
//
// Verbosity of stderr diagnostics comes from FLUXFLOW_LOG
// (trace, debug, info, warn, error, critical, off; default warn).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fluxflow/fluxflow.hpp"
#include "fluxflow/pipeline.hpp"

namespace {

using namespace fluxflow;

struct SpecFlags {
    bool frame = false;
    bool block = false;
    std::optional<std::uint64_t> count;
    std::optional<double> ratio;
    std::optional<std::uint64_t> block_size;
    std::optional<std::uint64_t> min_gap;
    std::optional<double> gap_ratio;
    bool require_move = false;

    void add_to(CLI::App& cmd)
    {
        auto* f = cmd.add_flag("--frame", frame, "Frame-level perturbation");
        auto* b = cmd.add_flag("--block", block, "Block-level perturbation");
        f->excludes(b);
        cmd.add_option("--count", count, "Number of frames (or blocks) to perturb");
        cmd.add_option("--ratio", ratio, "Fraction of frames (or blocks) to perturb, floor(r * units)");
        cmd.add_option("--block-size", block_size, "Frames per block (block mode)")->check(CLI::PositiveNumber);
        auto* g = cmd.add_option("--min-gap", min_gap, "Minimum index distance between selected units");
        auto* gr = cmd.add_option("--gap-ratio", gap_ratio, "Minimum distance as a fraction of units, in [0, 1)");
        g->excludes(gr);
        cmd.add_flag("--require-move", require_move, "Never emit an identity arrangement of a selection");
    }

    PerturbationSpec to_spec() const
    {
        if (!frame && !block)
            throw CLI::ValidationError{"mode", "one of --frame or --block is required"};
        if (!count && !ratio)
            throw CLI::ValidationError{"degree", "one of --count or --ratio is required"};
        if (block && !block_size)
            throw CLI::ValidationError{"--block-size", "--block-size is required with --block"};
        if (frame && block_size)
            throw CLI::ValidationError{"--block-size", "--block-size is only valid with --block"};
        if (count && ratio)
            spdlog::warn("both --count and --ratio given; --count takes precedence");

        PerturbationSpec spec;
        spec.mode = block ? Mode::Block : Mode::Frame;
        spec.degree = count ? Degree{Count{*count}} : Degree{Ratio{*ratio}};
        spec.block_size = block_size;
        if (gap_ratio)
            spec.interval = GapRatio{*gap_ratio};
        else
            spec.interval = MinGap{min_gap.value_or(0)};
        spec.require_move = require_move;
        try {
            spec.validate();
        } catch (const Error& ex) {
            throw CLI::ValidationError{"spec", ex.what()};
        }
        return spec;
    }
};

void configure_logging()
{
    auto logger = spdlog::stderr_color_mt("fluxflow");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("FLUXFLOW_LOG"))
        spdlog::set_level(spdlog::level::from_str(env));
}

int cmd_augment(const AugmentConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto summary = run_augment(config);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& d : summary.diagnostics)
        spdlog::warn("{}", d);
    for (const auto& p : summary.outputs)
        spdlog::info("wrote {}", p.string());
    std::cout << "augment: clips=" << summary.clips << " frames_moved=" << summary.frames_moved
              << " elapsed=" << elapsed << "s\n";
    return 0;
}

int cmd_metrics(const MetricsConfig& config)
{
    const auto summary = run_metrics(config);
    for (const auto& f : summary.failures)
        spdlog::error("{}", f);
    std::cout << "metrics: clips_ok=" << summary.clips_ok << " failed=" << summary.failures.size() << "\n";
    return summary.failures.empty() ? 0 : 1;
}

int cmd_inspect(const std::filesystem::path& log_path)
{
    const auto summary = inspect_log_file(log_path);
    std::cout << "OK, " << summary.records << " records verified\n";
    std::cout << "displacement histogram (|map[i] - i| : frames)\n";
    for (const auto& [d, n] : summary.displacement_histogram)
        std::cout << "  " << d << " : " << n << "\n";
    return 0;
}

int cmd_bench(const BenchConfig& config, const std::optional<std::filesystem::path>& out_path)
{
    const auto result = run_bench(config);
    const auto json = bench_to_json(result);
    std::cout << json << "\n";
    if (out_path) {
        std::ofstream out{*out_path, std::ios::binary | std::ios::trunc};
        out << json << '\n';
        if (!out)
            throw Error{ErrorCode::IoError, "failed writing " + out_path->string()};
    }
    if (result.permutations_per_sec < 1e5)
        spdlog::warn("index-mode throughput {:.0f}/s is below the 1e5/s target", result.permutations_per_sec);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Temporal perturbation and diagnostics for video frame datasets"};
    app.set_version_flag("--version", std::string{fluxflow::version});
    app.require_subcommand(1);

    // augment
    auto* augment = app.add_subcommand("augment", "Perturb clips and write manifests or shards plus the audit log");
    SpecFlags spec_flags;
    spec_flags.add_to(*augment);
    AugmentConfig aug;
    std::string mode_name = "index";
    augment->add_option("-i,--input", aug.inputs, "Manifest (.jsonl) or frame directory; repeatable")
        ->required()
        ->check(CLI::ExistingPath);
    augment->add_option("-o,--output", aug.output_prefix, "Output prefix")->required();
    augment->add_option("--seed", aug.global_seed, "Global seed");
    augment->add_option("--mode", mode_name, "index | materialize")
        ->check(CLI::IsMember({"index", "materialize"}));
    augment->add_option("--shard-size", aug.shard_size, "Clips per tar shard")->check(CLI::PositiveNumber);
    augment->add_option("--workers", aug.workers, "Worker threads")->check(CLI::PositiveNumber);
    augment->add_option("--pattern", aug.frame_pattern, "Frame file glob for directory inputs");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Temporal-coherence report per clip");
    MetricsConfig met;
    metrics->add_option("-i,--input", met.inputs, "Manifest (.jsonl) or frame directory; repeatable")
        ->required()
        ->check(CLI::ExistingPath);
    metrics->add_option("-o,--output", met.report_path, "Report JSONL path")->required();
    std::filesystem::path csv_path;
    metrics->add_option("--csv", csv_path, "Also write the angular series as CSV");
    metrics->add_option("--block", met.options.block, "Block side in pixels")->check(CLI::PositiveNumber);
    metrics->add_option("--radius", met.options.radius, "Search radius in pixels")->check(CLI::PositiveNumber);
    metrics->add_option("--epsilon", met.options.min_magnitude, "Mean-flow magnitude below which angles are undefined");
    metrics->add_option("--workers", met.workers, "Worker threads")->check(CLI::PositiveNumber);
    metrics->add_option("--pattern", met.frame_pattern, "Frame file glob for directory inputs");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Replay and validate a perturbation log");
    std::filesystem::path log_path;
    inspect->add_option("log", log_path, "Perturbation log (.log.jsonl)")->required()->check(CLI::ExistingFile);

    // bench
    auto* bench = app.add_subcommand("bench", "Throughput on synthetic workloads");
    BenchConfig bc;
    std::filesystem::path bench_out;
    bench->add_option("--clips", bc.clips, "Index-mode clips");
    bench->add_option("--frames", bc.frames, "Frames per clip")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bc.seed, "Global seed");
    bench->add_option("--raster-clips", bc.raster_clips, "Raster-mode clips");
    bench->add_option("--shard-size", bc.shard_size, "Clips per shard in raster mode")->check(CLI::PositiveNumber);
    bench->add_option("-o,--output", bench_out, "Also write the JSON result here");

    try {
        app.parse(argc, argv);
        if (*augment) {
            aug.spec = spec_flags.to_spec();
            aug.output_mode = mode_name == "materialize" ? OutputMode::Materialize : OutputMode::Index;
        }
        if (*metrics && !csv_path.empty())
            met.csv_path = csv_path;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*augment)
            return cmd_augment(aug);
        if (*metrics)
            return cmd_metrics(met);
        if (*inspect)
            return cmd_inspect(log_path);
        if (*bench)
            return cmd_bench(bc, bench_out.empty() ? std::nullopt : std::optional{bench_out});
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
