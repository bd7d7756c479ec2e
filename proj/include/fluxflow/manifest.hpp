#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fluxflow {

// One clip. `frames` is in temporal order; entries are relative paths
// (resolved against the manifest's directory) or opaque tokens.
struct ClipManifestEntry {
    std::string clip_id;
    std::vector<std::string> frames;
    std::optional<double> fps;
    std::map<std::string, std::string> tags;

    // 1-based source line, 0 when the entry was not parsed from a file.
    // Not part of equality.
    std::size_t line_no = 0;

    std::size_t frame_count() const noexcept { return frames.size(); }

    friend bool operator==(const ClipManifestEntry& a, const ClipManifestEntry& b)
    {
        return a.clip_id == b.clip_id && a.frames == b.frames && a.fps == b.fps && a.tags == b.tags;
    }
};

// JSONL manifest: one object per line with `clip_id` (string), `frames`
// (array of strings), and optional `fps` (number > 0) and `tags` (object of
// strings). Blank lines are skipped. Unknown fields are ignored.
//
// Throws ParseError (with line number), Error{DuplicateClip}, Error{EmptyClip}.
std::vector<ClipManifestEntry> parse_manifest(std::istream& in);
std::vector<ClipManifestEntry> parse_manifest(std::string_view text);
std::vector<ClipManifestEntry> load_manifest_file(const std::filesystem::path& path);

// One entry built from the regular files in `dir` whose names match the
// fnmatch(3) `pattern`, in byte-lexicographic order. Frame numbers must be
// zero-padded for this to be temporal order: f1, f10, f2 sorts exactly so.
// clip_id is the directory basename. Throws Error{EmptyClip} if nothing matches.
ClipManifestEntry scan_frame_dir(const std::filesystem::path& dir, std::string_view pattern = "*");

} // namespace fluxflow
