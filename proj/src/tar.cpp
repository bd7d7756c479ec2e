#include "fluxflow/tar.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "fluxflow/raster.hpp"

namespace fluxflow {

namespace {

constexpr std::size_t block_size = 512;

using Header = std::array<char, block_size>;

void put_field(Header& h, std::size_t offset, std::size_t width, std::string_view value)
{
    std::memcpy(h.data() + offset, value.data(), std::min(width, value.size()));
}

// width - 1 octal digits followed by NUL.
void put_octal(Header& h, std::size_t offset, std::size_t width, std::uint64_t value)
{
    std::string digits(width - 1, '0');
    for (std::size_t i = width - 1; i-- > 0 && value != 0; value >>= 3)
        digits[i] = static_cast<char>('0' + (value & 7));
    if (value != 0)
        throw Error{ErrorCode::InvalidSpec, "value does not fit ustar octal field"};
    put_field(h, offset, width, digits);
}

unsigned header_checksum(const std::uint8_t* h)
{
    unsigned sum = 0;
    for (std::size_t i = 0; i < block_size; ++i)
        sum += (i >= 148 && i < 156) ? ' ' : h[i];
    return sum;
}

std::uint64_t parse_octal(const std::uint8_t* p, std::size_t width)
{
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < width && p[i] == ' ')
        ++i;
    for (; i < width && p[i] >= '0' && p[i] <= '7'; ++i)
        v = (v << 3) | (p[i] - '0');
    return v;
}

std::string c_field(const std::uint8_t* p, std::size_t width)
{
    std::size_t len = 0;
    while (len < width && p[len] != 0)
        ++len;
    return std::string{reinterpret_cast<const char*>(p), len};
}

std::string hex32(std::uint32_t v)
{
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

std::string indexed_name(std::string_view prefix, std::size_t index, const char* suffix)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%05zu", index);
    return std::string{prefix} + buf + suffix;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    const std::uint8_t* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = ::crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void UstarWriter::write(const void* data, std::size_t size)
{
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out_)
        throw Error{ErrorCode::IoError, "tar write failed"};
    written_ += size;
}

void UstarWriter::add_file(std::string_view name, std::span<const std::uint8_t> data)
{
    std::string_view prefix, base = name;
    if (name.size() > 100) {
        // Longest prefix (<= 155 bytes) whose remaining base fits in 100 bytes.
        std::size_t split = std::string_view::npos;
        for (std::size_t i = std::min<std::size_t>(155, name.size() - 1); i > 0; --i) {
            if (name[i] == '/') {
                if (name.size() - i - 1 <= 100)
                    split = i;
                break;
            }
        }
        if (split == std::string_view::npos || split + 1 == name.size())
            throw Error{ErrorCode::InvalidSpec, "member name not representable in ustar: " + std::string{name}};
        prefix = name.substr(0, split);
        base = name.substr(split + 1);
    }

    Header h{};
    put_field(h, 0, 100, base);
    put_octal(h, 100, 8, 0644);
    put_octal(h, 108, 8, 0);
    put_octal(h, 116, 8, 0);
    put_octal(h, 124, 12, data.size());
    put_octal(h, 136, 12, 0);
    h[156] = '0';
    put_field(h, 257, 6, std::string_view{"ustar\0", 6});
    put_field(h, 263, 2, "00");
    put_octal(h, 329, 8, 0);
    put_octal(h, 337, 8, 0);
    put_field(h, 345, 155, prefix);

    auto sum = header_checksum(reinterpret_cast<const std::uint8_t*>(h.data()));
    char chk[8];
    std::snprintf(chk, sizeof chk, "%06o", sum);
    std::memcpy(h.data() + 148, chk, 7);  // six digits, NUL
    h[155] = ' ';

    write(h.data(), h.size());
    write(data.data(), data.size());
    static constexpr std::array<char, block_size> zeros{};
    if (auto pad = (block_size - data.size() % block_size) % block_size)
        write(zeros.data(), pad);
}

void UstarWriter::finish()
{
    if (finished_)
        return;
    static constexpr std::array<char, 2 * block_size> zeros{};
    write(zeros.data(), zeros.size());
    out_.flush();
    finished_ = true;
}

std::vector<TarMember> read_ustar(std::span<const std::uint8_t> archive)
{
    std::vector<TarMember> members;
    std::size_t pos = 0;
    while (true) {
        if (pos + block_size > archive.size())
            throw Error{ErrorCode::TruncatedFile, "tar archive ends inside a header"};
        const std::uint8_t* h = archive.data() + pos;
        bool zero = std::all_of(h, h + block_size, [](std::uint8_t b) { return b == 0; });
        if (zero)
            break;

        if (std::memcmp(h + 257, "ustar", 5) != 0)
            throw Error{ErrorCode::UnsupportedFormat, "not a ustar header at offset " + std::to_string(pos)};
        if (parse_octal(h + 148, 8) != header_checksum(h))
            throw Error{ErrorCode::UnsupportedFormat, "bad header checksum at offset " + std::to_string(pos)};

        auto size = static_cast<std::size_t>(parse_octal(h + 124, 12));
        auto name = c_field(h, 100);
        auto prefix = c_field(h + 345, 155);
        if (!prefix.empty())
            name = prefix + "/" + name;
        char type = static_cast<char>(h[156]);

        pos += block_size;
        if (pos + size > archive.size())
            throw Error{ErrorCode::TruncatedFile, "tar member \"" + name + "\" is truncated"};
        if (type == '0' || type == '\0')
            members.push_back(TarMember{std::move(name), {archive.begin() + static_cast<std::ptrdiff_t>(pos),
                                                          archive.begin() + static_cast<std::ptrdiff_t>(pos + size)}});
        pos += (size + block_size - 1) / block_size * block_size;
    }
    return members;
}

std::string shard_tar_name(std::string_view prefix, std::size_t index)
{
    return indexed_name(prefix, index, ".tar");
}

std::string shard_sidecar_name(std::string_view prefix, std::size_t index)
{
    return indexed_name(prefix, index, ".crc.jsonl");
}

std::string shard_member_name(std::string_view clip_id, std::size_t position, std::size_t channels)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "/%06zu%s", position, channels == 3 ? ".ppm" : ".pgm");
    return std::string{clip_id} + buf;
}

void append_clip(UstarWriter& writer, const ShardClip& clip, const PerturbationRecord& record,
                 std::vector<MemberChecksum>& checksums)
{
    const auto n = clip.frames.size();
    if (record.clip_id != clip.clip_id || record.permutation.size() != n)
        throw Error{ErrorCode::LengthMismatch, "record for \"" + record.clip_id + "\" does not match clip \"" +
                                                   clip.clip_id + "\""};

    std::vector<std::size_t> channels(n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            channels[i] = load_pnm_raster(std::span<const std::uint8_t>{clip.frames[i]}).channels;
        } catch (const Error& ex) {
            throw Error{ex.code(), "clip \"" + clip.clip_id + "\" frame " + std::to_string(i) + ": " + ex.what()};
        }
    }

    const auto source = record.permutation.inverse();
    for (std::size_t pos = 0; pos < n; ++pos) {
        const auto& bytes = clip.frames[source[pos]];
        auto name = shard_member_name(clip.clip_id, pos, channels[source[pos]]);
        writer.add_file(name, bytes);
        checksums.push_back(MemberChecksum{std::move(name), bytes.size(), crc32(bytes)});
    }
}

std::vector<Shard> write_tar_shards(std::span<const ShardClip> clips, std::span<const PerturbationRecord> records,
                                    std::size_t shard_size)
{
    if (shard_size == 0)
        throw Error{ErrorCode::InvalidSpec, "shard size must be at least 1"};
    if (clips.size() != records.size())
        throw Error{ErrorCode::LengthMismatch, "one record per clip is required"};

    std::vector<Shard> shards;
    for (std::size_t first = 0; first < clips.size(); first += shard_size) {
        std::ostringstream buf;
        UstarWriter writer{buf};
        Shard shard;
        for (std::size_t i = first; i < std::min(clips.size(), first + shard_size); ++i)
            append_clip(writer, clips[i], records[i], shard.checksums);
        writer.finish();
        auto s = std::move(buf).str();
        shard.tar.assign(s.begin(), s.end());
        shards.push_back(std::move(shard));
    }
    return shards;
}

void write_checksum_sidecar(std::ostream& out, std::span<const MemberChecksum> checksums)
{
    for (const auto& c : checksums) {
        nlohmann::ordered_json j;
        j["member"] = c.member;
        j["size"] = c.size;
        j["crc32"] = hex32(c.crc32);
        out << j.dump() << '\n';
    }
}

std::vector<MemberChecksum> read_checksum_sidecar(std::istream& in)
{
    std::vector<MemberChecksum> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            MemberChecksum c;
            c.member = j.at("member").get<std::string>();
            c.size = j.at("size").get<std::size_t>();
            auto hex = j.at("crc32").get<std::string>();
            std::size_t used = 0;
            c.crc32 = static_cast<std::uint32_t>(std::stoul(hex, &used, 16));
            if (used != hex.size() || hex.size() != 8)
                throw std::invalid_argument{"crc32 must be 8 hex digits"};
            out.push_back(std::move(c));
        } catch (const std::exception& ex) {
            throw ParseError{line_no, ex.what()};
        }
    }
    return out;
}

std::size_t verify_shard(std::span<const std::uint8_t> archive, std::span<const MemberChecksum> checksums)
{
    auto members = read_ustar(archive);
    if (members.size() != checksums.size())
        throw Error{ErrorCode::ReplayMismatch, "archive has " + std::to_string(members.size()) +
                                                   " members, sidecar lists " + std::to_string(checksums.size())};
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        const auto& c = checksums[i];
        if (m.name != c.member || m.data.size() != c.size || crc32(m.data) != c.crc32)
            throw Error{ErrorCode::ReplayMismatch, "member \"" + m.name + "\" does not match its checksum entry"};
    }
    return members.size();
}

std::size_t verify_shard_files(const std::filesystem::path& tar_path, const std::filesystem::path& sidecar_path)
{
    auto archive = read_file_bytes(tar_path);
    std::ifstream in{sidecar_path, std::ios::binary};
    if (!in)
        throw Error{ErrorCode::IoError, "cannot open " + sidecar_path.string()};
    return verify_shard(archive, read_checksum_sidecar(in));
}

ShardFileWriter::ShardFileWriter(std::filesystem::path prefix, std::size_t shard_size)
  : prefix_{std::move(prefix)}, shard_size_{shard_size}
{
    if (shard_size_ == 0)
        throw Error{ErrorCode::InvalidSpec, "shard size must be at least 1"};
}

void ShardFileWriter::add_clip(const ShardClip& clip, const PerturbationRecord& record)
{
    if (!writer_) {
        auto path = std::filesystem::path{shard_tar_name(prefix_.string(), shard_index_)};
        stream_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*stream_)
            throw Error{ErrorCode::IoError, "cannot create " + path.string()};
        files_.push_back(path);
        writer_ = std::make_unique<UstarWriter>(*stream_);
    }
    append_clip(*writer_, clip, record, checksums_);
    if (++clips_in_shard_ == shard_size_)
        close_shard();
}

void ShardFileWriter::close_shard()
{
    if (!writer_)
        return;
    writer_->finish();
    bytes_written_ += writer_->bytes_written();
    writer_.reset();
    stream_->close();
    stream_.reset();

    auto path = std::filesystem::path{shard_sidecar_name(prefix_.string(), shard_index_)};
    std::ofstream side{path, std::ios::binary | std::ios::trunc};
    if (!side)
        throw Error{ErrorCode::IoError, "cannot create " + path.string()};
    files_.push_back(path);
    write_checksum_sidecar(side, checksums_);
    if (!side)
        throw Error{ErrorCode::IoError, "failed writing " + path.string()};

    checksums_.clear();
    clips_in_shard_ = 0;
    ++shard_index_;
}

const std::vector<std::filesystem::path>& ShardFileWriter::finish()
{
    close_shard();
    return files_;
}

} // namespace fluxflow
