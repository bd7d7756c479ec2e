#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "fluxflow/emit.hpp"
#include "fluxflow/tar.hpp"
#include "test_support.hpp"

using namespace fluxflow;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

RunResult run_cli(const testing::TempDir& dir, const std::string& args)
{
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string{"'"} + FLUXFLOW_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_text(out), testing::read_text(err)};
}

fs::path make_clips(const testing::TempDir& dir)
{
    std::string lines;
    for (int c = 0; c < 3; ++c) {
        std::vector<FrameRaster> frames;
        for (int f = 0; f < 10; ++f)
            frames.push_back(testing::random_texture(6, 6, 10 * c + f));
        const auto id = "c" + std::to_string(c);
        testing::write_clip_dir(dir.path(), id, frames);
        lines += "{\"clip_id\":\"" + id + "\",\"frames\":[";
        for (int f = 0; f < 10; ++f)
            lines += std::string{f ? "," : ""} + "\"" + id + "/f0000" + std::to_string(f) + ".pgm\"";
        lines += "]}\n";
    }
    testing::write_text(dir / "clips.jsonl", lines);
    return dir / "clips.jsonl";
}

} // namespace

TEST_CASE("cli augment and inspect")
{
    testing::TempDir dir;
    const auto manifest = make_clips(dir);
    const auto in = "-i '" + manifest.string() + "'";

    auto r = run_cli(dir, "augment --frame --count 2 --require-move " + in + " -o '" + (dir / "a").string() + "'");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("augment: clips=3 frames_moved=6", 0) == 0);
    auto first = testing::read_text(dir / "a.manifest.jsonl");
    CHECK_FALSE(first.empty());

    r = run_cli(dir, "augment --frame --count 2 --require-move --workers 8 " + in + " -o '" + (dir / "b").string() +
                         "'");
    REQUIRE(r.exit_code == 0);
    CHECK(testing::read_text(dir / "b.manifest.jsonl") == first);
    CHECK(testing::read_text(dir / "b.log.jsonl") == testing::read_text(dir / "a.log.jsonl"));

    r = run_cli(dir, "inspect '" + (dir / "a.log.jsonl").string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out.rfind("OK, 3 records verified\n", 0) == 0);

    auto tampered = testing::read_text(dir / "a.log.jsonl");
    // require_move guarantees the stored map is not the identity.
    const auto begin = tampered.find("\"permutation\":[") + 15;
    tampered.replace(begin, tampered.find(']', begin) - begin, "0,1,2,3,4,5,6,7,8,9");
    testing::write_text(dir / "bad.log.jsonl", tampered);
    r = run_cli(dir, "inspect '" + (dir / "bad.log.jsonl").string() + "'");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("c0") != std::string::npos);
}

TEST_CASE("cli materialize")
{
    testing::TempDir dir;
    const auto manifest = make_clips(dir);
    auto r = run_cli(dir, "augment --block --block-size 3 --ratio 0.5 --mode materialize --shard-size 2 -i '" +
                              manifest.string() + "' -o '" + (dir / "s").string() + "'");
    REQUIRE(r.exit_code == 0);
    CHECK(verify_shard_files(dir / "s-00000.tar", dir / "s-00000.crc.jsonl") == 20);
    CHECK(verify_shard_files(dir / "s-00001.tar", dir / "s-00001.crc.jsonl") == 10);
    CHECK(fs::exists(dir / "s.log.jsonl"));
    CHECK_FALSE(fs::exists(dir / "s.manifest.jsonl"));
}

TEST_CASE("cli argument validation happens before any output")
{
    testing::TempDir dir;
    const auto manifest = make_clips(dir);
    const auto io = " -i '" + manifest.string() + "' -o '" + (dir / "x").string() + "'";
    const char* bad[] = {
        "augment --frame --block --count 1",
        "augment --block --count 1",
        "augment --frame --block-size 4 --count 1",
        "augment --frame --ratio 1.5",
        "augment --frame --count 1 --gap-ratio 1.0",
        "augment --frame --count 1 --min-gap 1 --gap-ratio 0.2",
        "augment --frame --count 1 --mode zip",
        "augment --count 1",
    };
    for (const char* args : bad) {
        CAPTURE(args);
        auto r = run_cli(dir, std::string{args} + io);
        CHECK(r.exit_code != 0);
        CHECK_FALSE(fs::exists(dir / "x.manifest.jsonl"));
        CHECK_FALSE(fs::exists(dir / "x.log.jsonl"));
    }

    auto r = run_cli(dir, "augment --frame --count 11" + io);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("max=10") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x.log.jsonl"));

    r = run_cli(dir, "augment --frame --count 1 --ratio 0.5" + io);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("frames_moved=") != std::string::npos);
    CHECK(r.err.find("--count") != std::string::npos);
}

TEST_CASE("cli metrics and bench")
{
    testing::TempDir dir;
    const auto base = testing::random_texture(32, 32, 2);
    testing::write_clip_dir(dir.path(), "moving", testing::translating_clip(base, {{2, 0}, {2, 0}, {0, 2}}));
    testing::write_clip_dir(dir.path(), "short", {base});

    auto r = run_cli(dir, "metrics -i '" + (dir / "moving").string() + "' -o '" + (dir / "m.jsonl").string() +
                              "' --csv '" + (dir / "m.csv").string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "metrics: clips_ok=1 failed=0\n");
    CHECK(testing::read_text(dir / "m.jsonl").find("\"clip_id\":\"moving\"") != std::string::npos);

    r = run_cli(dir, "metrics -i '" + (dir / "moving").string() + "' -i '" + (dir / "short").string() + "' -o '" +
                         (dir / "m2.jsonl").string() + "'");
    CHECK(r.exit_code == 1);
    CHECK(r.out == "metrics: clips_ok=1 failed=1\n");

    r = run_cli(dir, "bench --clips 200 --raster-clips 2 -o '" + (dir / "bench.json").string() + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"clips\":200") != std::string::npos);
    CHECK(testing::read_text(dir / "bench.json").find("permutation_digest") != std::string::npos);

    r = run_cli(dir, "--version");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("0.1.0") != std::string::npos);
}
