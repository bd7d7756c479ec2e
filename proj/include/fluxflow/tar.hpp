#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxflow/emit.hpp"

namespace fluxflow {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

// POSIX ustar writer. Headers are fully deterministic: mtime 0, uid/gid 0,
// mode 0644, empty owner names.
class UstarWriter {
public:
    explicit UstarWriter(std::ostream& out) : out_{out} {}

    // Names longer than 100 bytes are split into the ustar prefix field at a
    // '/'. Throws Error{InvalidSpec} if the name cannot be represented.
    void add_file(std::string_view name, std::span<const std::uint8_t> data);

    // Writes the two zero end-of-archive blocks.
    void finish();

    std::uint64_t bytes_written() const noexcept { return written_; }

private:
    void write(const void* data, std::size_t size);

    std::ostream& out_;
    std::uint64_t written_ = 0;
    bool finished_ = false;
};

struct TarMember {
    std::string name;
    std::vector<std::uint8_t> data;
};

// Regular-file members of a ustar archive, header checksums verified.
// Throws Error{TruncatedFile | UnsupportedFormat}.
std::vector<TarMember> read_ustar(std::span<const std::uint8_t> archive);

// One clip's frames as source file bytes, in manifest order.
struct ShardClip {
    std::string clip_id;
    std::vector<std::vector<std::uint8_t>> frames;
};

struct MemberChecksum {
    std::string member;
    std::size_t size = 0;
    std::uint32_t crc32 = 0;
    friend bool operator==(const MemberChecksum&, const MemberChecksum&) = default;
};

struct Shard {
    std::vector<std::uint8_t> tar;
    std::vector<MemberChecksum> checksums;
};

// "{prefix}-{index:05}.tar" and "{prefix}-{index:05}.crc.jsonl"
std::string shard_tar_name(std::string_view prefix, std::size_t index);
std::string shard_sidecar_name(std::string_view prefix, std::size_t index);

// Member name "{clip_id}/{position:06}.pgm" (".ppm" for RGB).
std::string shard_member_name(std::string_view clip_id, std::size_t position, std::size_t channels);

// Appends one clip to an archive in permuted temporal order: the frame with
// input index i becomes member position record.permutation[i]. Every frame
// is decoded first; decode errors are rethrown with the clip and frame index.
void append_clip(UstarWriter& writer, const ShardClip& clip, const PerturbationRecord& record,
                 std::vector<MemberChecksum>& checksums);

// In-memory sharding: at most shard_size clips per shard, records matched
// to clips by position. Throws Error{InvalidSpec} for shard_size == 0.
std::vector<Shard> write_tar_shards(std::span<const ShardClip> clips, std::span<const PerturbationRecord> records,
                                    std::size_t shard_size);

void write_checksum_sidecar(std::ostream& out, std::span<const MemberChecksum> checksums);
std::vector<MemberChecksum> read_checksum_sidecar(std::istream& in);

// Re-reads an archive and checks every member against the sidecar, in
// order. Returns the number of members verified; throws Error{ReplayMismatch}.
std::size_t verify_shard(std::span<const std::uint8_t> archive, std::span<const MemberChecksum> checksums);
std::size_t verify_shard_files(const std::filesystem::path& tar_path, const std::filesystem::path& sidecar_path);

// Streams shards to disk next to `prefix`, one writer per shard.
class ShardFileWriter {
public:
    ShardFileWriter(std::filesystem::path prefix, std::size_t shard_size);

    void add_clip(const ShardClip& clip, const PerturbationRecord& record);

    // Flushes the open shard. Returns every file created, in creation order.
    const std::vector<std::filesystem::path>& finish();

    const std::vector<std::filesystem::path>& files() const noexcept { return files_; }
    std::uint64_t bytes_written() const noexcept { return bytes_written_; }

private:
    void close_shard();

    std::filesystem::path prefix_;
    std::size_t shard_size_;
    std::size_t shard_index_ = 0;
    std::size_t clips_in_shard_ = 0;
    std::unique_ptr<std::ofstream> stream_;
    std::unique_ptr<UstarWriter> writer_;
    std::vector<MemberChecksum> checksums_;
    std::vector<std::filesystem::path> files_;
    std::uint64_t bytes_written_ = 0;
};

} // namespace fluxflow
