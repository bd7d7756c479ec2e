#include <doctest.h>

#include <atomic>
#include <sstream>

#include "fluxflow/error.hpp"
#include "fluxflow/fluxflow.hpp"
#include "fluxflow/pipeline.hpp"
#include "fluxflow/tar.hpp"
#include "test_support.hpp"

using namespace fluxflow;
namespace fs = std::filesystem;

namespace {

// Several clips of varying length on disk, plus a manifest listing them.
struct Corpus {
    testing::TempDir dir;
    fs::path manifest;
    std::vector<fs::path> clip_dirs;

    explicit Corpus(std::size_t clips = 6)
    {
        std::string lines;
        for (std::size_t c = 0; c < clips; ++c) {
            std::vector<FrameRaster> frames;
            for (std::size_t f = 0; f < 5 + 3 * c; ++f)
                frames.push_back(testing::random_texture(8, 6, 100 * c + f));
            auto id = "clip" + std::to_string(c);
            clip_dirs.push_back(testing::write_clip_dir(dir.path(), id, frames));
            lines += "{\"clip_id\":\"" + id + "\",\"frames\":[";
            for (std::size_t f = 0; f < frames.size(); ++f) {
                char name[48];
                std::snprintf(name, sizeof name, "%s\"%s/f%05zu.pgm\"", f ? "," : "", id.c_str(), f);
                lines += name;
            }
            lines += "]}\n";
        }
        manifest = dir / "clips.jsonl";
        testing::write_text(manifest, lines);
    }
};

std::string slurp(const fs::path& p)
{
    return testing::read_text(p);
}

} // namespace

TEST_CASE("parallel_for")
{
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 8, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits)
        CHECK(h == 1);

    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 31)
                throw Error{ErrorCode::IoError, "index " + std::to_string(i)};
        });
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string{e.what()}.find("index 7") != std::string::npos);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL("no calls expected"); });
}

TEST_CASE("load_inputs")
{
    Corpus corpus{3};
    auto from_manifest = load_inputs({corpus.manifest}, "*.pgm");
    REQUIRE(from_manifest.size() == 3);
    CHECK(fs::exists(from_manifest[2].frame_path(0)));

    auto from_dirs = load_inputs({corpus.clip_dirs[1], corpus.clip_dirs[0]}, "*.pgm");
    REQUIRE(from_dirs.size() == 2);
    CHECK(from_dirs[0].entry.clip_id == "clip1");
    CHECK(from_dirs[0].entry.frames.size() == 8);
    CHECK(fs::exists(from_dirs[0].frame_path(7)));

    try {
        load_inputs({corpus.manifest, corpus.clip_dirs[0]}, "*.pgm");
        FAIL("expected DuplicateClip");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateClip);
    }
}

TEST_CASE("run_augment index mode")
{
    Corpus corpus;
    AugmentConfig cfg;
    cfg.inputs = {corpus.manifest};
    cfg.spec = PerturbationSpec::frames(Count{2}, MinGap{0}, true);
    cfg.global_seed = 17;
    cfg.output_prefix = corpus.dir / "out";

    auto summary = run_augment(cfg);
    CHECK(summary.clips == 6);
    CHECK(summary.frames_moved == 12);

    auto entries = load_manifest_file(manifest_output_path(cfg.output_prefix));
    auto source = load_manifest_file(corpus.manifest);
    auto records = read_perturbation_log(slurp(log_output_path(cfg.output_prefix)));
    REQUIRE(entries.size() == source.size());
    REQUIRE(records.size() == source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        CHECK(records[i].clip_id == source[i].clip_id);
        CHECK(records[i].permutation.moved_count() == 2);
        CHECK(entries[i].frames == apply_permutation(source[i].frames, records[i].permutation));
        CHECK_NOTHROW(verify_record(records[i]));
    }

    SUBCASE("reruns and worker counts are byte-identical")
    {
        const auto manifest = slurp(manifest_output_path(cfg.output_prefix));
        const auto log = slurp(log_output_path(cfg.output_prefix));
        for (std::size_t workers : {1, 3, 8}) {
            cfg.workers = workers;
            cfg.output_prefix = corpus.dir / ("w" + std::to_string(workers));
            run_augment(cfg);
            CHECK(slurp(manifest_output_path(cfg.output_prefix)) == manifest);
            CHECK(slurp(log_output_path(cfg.output_prefix)) == log);
        }
    }

    SUBCASE("inspect replays the log")
    {
        std::istringstream log{slurp(log_output_path(cfg.output_prefix))};
        auto s = inspect_log(log);
        CHECK(s.records == 6);
        std::size_t frames = 0, still = 0;
        for (auto [d, n] : s.displacement_histogram) {
            frames += n;
            if (d == 0)
                still = n;
        }
        CHECK(frames == 5 + 8 + 11 + 14 + 17 + 20);
        CHECK(still == frames - 12);
    }

    SUBCASE("different global seeds differ")
    {
        cfg.global_seed = 18;
        cfg.output_prefix = corpus.dir / "other";
        run_augment(cfg);
        CHECK(slurp(log_output_path(cfg.output_prefix)) != slurp(log_output_path(corpus.dir / "out")));
    }
}

TEST_CASE("run_augment block mode on a 33-frame clip")
{
    testing::TempDir dir;
    std::vector<FrameRaster> frames;
    for (std::size_t f = 0; f < 33; ++f)
        frames.push_back(testing::random_texture(4, 4, f));
    auto clip = testing::write_clip_dir(dir.path(), "long", frames);

    AugmentConfig cfg;
    cfg.inputs = {clip};
    cfg.spec = PerturbationSpec::blocks(8, Count{4});
    cfg.output_prefix = dir / "blk";
    run_augment(cfg);
    auto rec = read_perturbation_log(slurp(log_output_path(cfg.output_prefix))).at(0);
    CHECK(rec.permutation[32] == 32);
    for (std::size_t i = 0; i < 32; ++i)
        CHECK(rec.permutation[i] % 8 == i % 8);
    CHECK(rec.selection.indices == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("run_augment materialize mode")
{
    Corpus corpus{5};
    AugmentConfig cfg;
    cfg.inputs = {corpus.manifest};
    cfg.spec = PerturbationSpec::frames(Ratio{0.5});
    cfg.output_prefix = corpus.dir / "shards";
    cfg.output_mode = OutputMode::Materialize;
    cfg.shard_size = 2;
    cfg.workers = 4;
    auto summary = run_augment(cfg);
    CHECK(summary.clips == 5);

    auto records = read_perturbation_log(slurp(log_output_path(cfg.output_prefix)));
    auto inputs = load_inputs({corpus.manifest}, "*");
    std::size_t clip = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        auto tar = fs::path{shard_tar_name(cfg.output_prefix.string(), s)};
        auto side = fs::path{shard_sidecar_name(cfg.output_prefix.string(), s)};
        CHECK_NOTHROW(verify_shard_files(tar, side));
        auto members = read_ustar(read_file_bytes(tar));
        std::size_t offset = 0;
        for (; clip < std::min<std::size_t>(5, 2 * (s + 1)); ++clip) {
            const auto& rec = records[clip];
            for (std::size_t i = 0; i < rec.n_frames; ++i)
                CHECK(members[offset + rec.permutation[i]].data == read_file_bytes(inputs[clip].frame_path(i)));
            offset += rec.n_frames;
        }
        CHECK(offset == members.size());
    }
    CHECK_FALSE(fs::exists(shard_tar_name(cfg.output_prefix.string(), 3)));

    const auto first = read_file_bytes(shard_tar_name(cfg.output_prefix.string(), 1));
    cfg.workers = 1;
    cfg.output_prefix = corpus.dir / "again";
    run_augment(cfg);
    CHECK(read_file_bytes(shard_tar_name(cfg.output_prefix.string(), 1)) == first);
}

TEST_CASE("run_augment removes partial outputs on error")
{
    Corpus corpus{4};
    // Corrupt one frame of the last clip so sharding fails late.
    testing::write_text(corpus.clip_dirs[3] / "f00002.pgm", "P5 8 6 255\n");

    AugmentConfig cfg;
    cfg.inputs = {corpus.manifest};
    cfg.spec = PerturbationSpec::frames(Count{1});
    cfg.output_prefix = corpus.dir / "partial";
    cfg.output_mode = OutputMode::Materialize;
    cfg.shard_size = 1;
    try {
        run_augment(cfg);
        FAIL("expected TruncatedFile");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TruncatedFile);
        CHECK(std::string{e.what()}.find("clip3") != std::string::npos);
    }
    for (const auto& de : fs::directory_iterator{corpus.dir.path()})
        CHECK(de.path().filename().string().rfind("partial", 0) != 0);

    SUBCASE("infeasible spec names the clip and writes nothing")
    {
        cfg.output_mode = OutputMode::Index;
        cfg.spec = PerturbationSpec::frames(Count{6});
        try {
            run_augment(cfg);
            FAIL("expected InfeasibleSelection");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InfeasibleSelection);
            CHECK(std::string{e.what()}.find("clip0") != std::string::npos);
        }
        CHECK_FALSE(fs::exists(manifest_output_path(cfg.output_prefix)));
        CHECK_FALSE(fs::exists(log_output_path(cfg.output_prefix)));
    }
}

TEST_CASE("inspect detects tampering")
{
    const auto spec = PerturbationSpec::frames(Count{3}, MinGap{0}, true);
    auto bad = std::vector<PerturbationRecord>{make_record("good", 10, spec, 1), make_record("bad", 10, spec, 1)};
    bad[1].permutation = Permutation::identity(10);
    std::istringstream in{write_perturbation_log(bad)};
    try {
        inspect_log(in);
        FAIL("expected ReplayMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ReplayMismatch);
        CHECK(std::string{e.what()}.find("bad") != std::string::npos);
    }

    const std::vector<PerturbationRecord> ident{make_record("id", 7, PerturbationSpec::frames(Count{0}), 1)};
    std::istringstream in2{write_perturbation_log(ident)};
    auto s = inspect_log(in2);
    CHECK(s.displacement_histogram == std::map<std::size_t, std::size_t>{{0, 7}});
}

TEST_CASE("run_metrics")
{
    testing::TempDir dir;
    const auto base = testing::random_texture(32, 32, 9);
    auto still = testing::write_clip_dir(dir.path(), "still", std::vector<FrameRaster>(4, base));
    auto moving = testing::write_clip_dir(dir.path(), "moving",
                                          testing::translating_clip(base, {{2, 0}, {2, 0}, {2, 0}, {0, 2}}));
    auto tiny = testing::write_clip_dir(dir.path(), "tiny", {base, base});

    MetricsConfig cfg;
    cfg.inputs = {still, moving, tiny};
    cfg.report_path = dir / "report.jsonl";
    cfg.csv_path = dir / "angles.csv";
    cfg.workers = 3;
    auto summary = run_metrics(cfg);
    CHECK(summary.clips_ok == 2);
    REQUIRE(summary.failures.size() == 1);
    CHECK(summary.failures[0].find("tiny") != std::string::npos);

    auto report = slurp(cfg.report_path);
    CHECK(report.find("\"clip_id\":\"still\"") < report.find("\"clip_id\":\"moving\""));
    auto csv = slurp(*cfg.csv_path);
    CHECK(csv.rfind("clip_id,t,angular_diff\nstill,0,\nstill,1,\nmoving,0,0\nmoving,1,0\nmoving,2,1.57", 0) == 0);
}

TEST_CASE("bench")
{
    BenchConfig cfg;
    cfg.clips = 500;
    cfg.raster_clips = 4;
    cfg.raster_frames = 4;
    cfg.width = cfg.height = 16;
    cfg.shard_size = 2;
    auto a = run_bench(cfg);
    auto b = run_bench(cfg);
    CHECK(a.clips == 500);
    CHECK(a.permutation_digest == b.permutation_digest);
    CHECK(a.shard_digest == b.shard_digest);
    CHECK(a.shard_bytes > 4 * 4 * 16 * 16);
    cfg.seed = 1;
    CHECK(run_bench(cfg).permutation_digest != a.permutation_digest);
    auto json = bench_to_json(a);
    CHECK(json.find("\"index_mode\"") != std::string::npos);
    CHECK(json.find("\"raster_mode\"") != std::string::npos);
}

TEST_CASE("binding entry points")
{
    CHECK(std::string{version} == "0.1.0");
    auto spec = PerturbationSpec::frames(Count{3});
    auto one = permute_indices("clip-A", 12, spec, 5);
    const auto direct = perturb(12, spec, derive_clip_seed(5, "clip-A"));
    CHECK(one == std::vector<std::size_t>(direct.permutation.map().begin(), direct.permutation.map().end()));

    const std::vector<std::string> ids{"a", "b", "c"};
    const std::vector<std::size_t> lens{4, 9, 12};
    auto batch = batch_permute(ids, lens, spec, 5);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(batch[i] == permute_indices(ids[i], lens[i], spec, 5));
    const std::vector<std::size_t> short_lens{4};
    CHECK_THROWS_AS(batch_permute(ids, short_lens, spec, 5), Error);
}
