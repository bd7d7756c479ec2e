#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "fluxflow/raster.hpp"
#include "fluxflow/tar.hpp"
#include "test_support.hpp"

using namespace fluxflow;

namespace {

ShardClip synthetic_clip(const std::string& id, std::size_t frames, std::uint64_t seed, std::size_t channels = 1)
{
    ShardClip c{id, {}};
    for (std::size_t f = 0; f < frames; ++f) {
        auto r = testing::random_texture(4 + f % 3, 3, seed + f);
        if (channels == 3) {
            FrameRaster rgb{r.width, r.height, 3, {}};
            for (auto p : r.pixels)
                rgb.pixels.insert(rgb.pixels.end(), {p, p, p});
            r = rgb;
        }
        c.frames.push_back(encode_pnm(r));
    }
    return c;
}

PerturbationRecord identity_record(const std::string& id, std::size_t n)
{
    return PerturbationRecord{id, n, PerturbationSpec::frames(Count{0}), 0, {}, Permutation::identity(n)};
}

} // namespace

TEST_CASE("crc32 check value")
{
    const std::string s = "123456789";
    CHECK(crc32(std::span{reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}) == 0xCBF43926u);
}

TEST_CASE("ustar header layout")
{
    std::ostringstream buf;
    UstarWriter w{buf};
    const std::vector<std::uint8_t> data{'h', 'i'};
    w.add_file("clip/000000.pgm", data);
    w.finish();
    const auto s = buf.str();
    REQUIRE(s.size() == 512 * 4);
    CHECK(s.substr(0, 15) == "clip/000000.pgm");
    CHECK(s.substr(124, 12) == std::string{"00000000002\0", 12});
    CHECK(s.substr(257, 6) == std::string{"ustar\0", 6});
    CHECK(s.substr(263, 2) == "00");
    CHECK(s[156] == '0');
    CHECK(s.substr(512, 2) == "hi");

    // Checksum: octal sum of header bytes with the field taken as spaces.
    unsigned sum = 0;
    for (int i = 0; i < 512; ++i)
        sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(s[i]);
    CHECK(std::stoul(s.substr(148, 6), nullptr, 8) == sum);
    CHECK(std::all_of(s.begin() + 1024, s.end(), [](char c) { return c == 0; }));
}

TEST_CASE("long member names use the prefix field")
{
    std::ostringstream buf;
    UstarWriter w{buf};
    const std::string id(120, 'x');
    const std::vector<std::uint8_t> data{1, 2, 3};
    w.add_file(id + "/000001.pgm", data);
    w.finish();
    auto s = buf.str();
    auto members = read_ustar(std::span{reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    REQUIRE(members.size() == 1);
    CHECK(members[0].name == id + "/000001.pgm");
    CHECK(members[0].data == data);

    std::ostringstream buf2;
    UstarWriter w2{buf2};
    CHECK_THROWS_AS(w2.add_file(std::string(300, 'y'), data), Error);
}

TEST_CASE("shard contents")
{
    SUBCASE("identity clip keeps source bytes in order")
    {
        const std::vector<ShardClip> clips{synthetic_clip("clip", 2, 1)};
        const std::vector<PerturbationRecord> recs{identity_record("clip", 2)};
        auto shards = write_tar_shards(clips, recs, 10);
        REQUIRE(shards.size() == 1);
        auto members = read_ustar(shards[0].tar);
        REQUIRE(members.size() == 2);
        CHECK(members[0].name == "clip/000000.pgm");
        CHECK(members[1].name == "clip/000001.pgm");
        CHECK(members[0].data == clips[0].frames[0]);
        CHECK(members[1].data == clips[0].frames[1]);
        CHECK(verify_shard(shards[0].tar, shards[0].checksums) == 2);
    }

    SUBCASE("rgb frames get .ppm names")
    {
        const std::vector<ShardClip> clips{synthetic_clip("rgb", 1, 1, 3)};
        const std::vector<PerturbationRecord> recs{identity_record("rgb", 1)};
        auto members = read_ustar(write_tar_shards(clips, recs, 1)[0].tar);
        CHECK(members[0].name == "rgb/000000.ppm");
    }

    SUBCASE("shard_size 1 with 3 clips gives 3 shards")
    {
        std::vector<ShardClip> clips;
        std::vector<PerturbationRecord> recs;
        for (int i = 0; i < 3; ++i) {
            clips.push_back(synthetic_clip("c" + std::to_string(i), 3, 10 * i));
            recs.push_back(identity_record(clips.back().clip_id, 3));
        }
        CHECK(write_tar_shards(clips, recs, 1).size() == 3);
        CHECK(write_tar_shards(clips, recs, 2).size() == 2);
        CHECK_THROWS_AS(write_tar_shards(clips, recs, 0), Error);
    }

    SUBCASE("members follow the permutation and conserve content")
    {
        const auto clip = synthetic_clip("p", 12, 5);
        const auto rec = make_record("p", 12, PerturbationSpec::frames(Count{6}, MinGap{0}, true), 8);
        const std::vector<ShardClip> clips{clip};
        const std::vector<PerturbationRecord> recs{rec};
        auto shard = write_tar_shards(clips, recs, 1)[0];
        auto members = read_ustar(shard.tar);
        REQUIRE(members.size() == 12);
        for (std::size_t i = 0; i < 12; ++i)
            CHECK(members[rec.permutation[i]].data == clip.frames[i]);

        std::multiset<std::vector<std::uint8_t>> src(clip.frames.begin(), clip.frames.end()), out;
        for (auto& m : members)
            out.insert(m.data);
        CHECK(src == out);
    }

    SUBCASE("undecodable frame reports the clip")
    {
        ShardClip bad{"broken", {{'P', '5', ' ', '1'}}};
        const std::vector<ShardClip> clips{bad};
        const std::vector<PerturbationRecord> recs{identity_record("broken", 1)};
        try {
            write_tar_shards(clips, recs, 1);
            FAIL("expected TruncatedFile");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TruncatedFile);
            CHECK(std::string{e.what()}.find("broken") != std::string::npos);
        }
    }
}

TEST_CASE("sidecar verification")
{
    const std::vector<ShardClip> clips{synthetic_clip("v", 4, 2)};
    const std::vector<PerturbationRecord> recs{make_record("v", 4, PerturbationSpec::frames(Count{4}), 1)};
    auto shard = write_tar_shards(clips, recs, 1)[0];

    std::ostringstream side;
    write_checksum_sidecar(side, shard.checksums);
    std::istringstream in{side.str()};
    auto parsed = read_checksum_sidecar(in);
    CHECK(parsed == shard.checksums);
    CHECK(verify_shard(shard.tar, parsed) == 4);

    // Flip one payload byte of the first member.
    auto corrupt = shard.tar;
    corrupt[512 + 20] ^= 0xff;
    CHECK_THROWS_AS(verify_shard(corrupt, parsed), Error);

    // Truncated archive.
    std::vector<std::uint8_t> cut(shard.tar.begin(), shard.tar.begin() + 700);
    CHECK_THROWS_AS(read_ustar(cut), Error);
}

TEST_CASE("shard files on disk")
{
    testing::TempDir dir;
    std::vector<ShardClip> clips;
    std::vector<PerturbationRecord> recs;
    for (int i = 0; i < 5; ++i) {
        clips.push_back(synthetic_clip("d" + std::to_string(i), 3, i));
        recs.push_back(make_record(clips.back().clip_id, 3, PerturbationSpec::frames(Count{2}), 4));
    }
    ShardFileWriter writer{dir / "train", 2};
    for (std::size_t i = 0; i < clips.size(); ++i)
        writer.add_clip(clips[i], recs[i]);
    const auto files = writer.finish();
    REQUIRE(files.size() == 6);
    for (std::size_t s = 0; s < 3; ++s) {
        auto tar = dir / shard_tar_name("train", s);
        auto side = dir / shard_sidecar_name("train", s);
        CHECK(std::filesystem::exists(tar));
        CHECK(verify_shard_files(tar, side) == (s < 2 ? 6u : 3u));
    }
    CHECK(shard_tar_name("x/train", 12) == "x/train-00012.tar");
    CHECK(shard_sidecar_name("train", 3) == "train-00003.crc.jsonl");
    CHECK(shard_member_name("c", 7, 1) == "c/000007.pgm");

    // Same in-memory sharding gives the same archive bytes.
    auto mem = write_tar_shards(clips, recs, 2);
    auto disk = read_file_bytes(dir / shard_tar_name("train", 1));
    CHECK(mem[1].tar == disk);
}
