#include "fluxflow/manifest.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "fluxflow/error.hpp"

namespace fluxflow {

namespace {

using nlohmann::json;

bool is_blank(std::string_view line)
{
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

ClipManifestEntry entry_from_json(const json& obj, std::size_t line_no)
{
    if (!obj.is_object())
        throw ParseError{line_no, "expected a JSON object"};

    ClipManifestEntry e;
    e.line_no = line_no;

    auto id = obj.find("clip_id");
    if (id == obj.end() || !id->is_string())
        throw ParseError{line_no, "missing or non-string \"clip_id\""};
    e.clip_id = id->get<std::string>();

    auto frames = obj.find("frames");
    if (frames == obj.end() || !frames->is_array())
        throw ParseError{line_no, "missing or non-array \"frames\""};
    e.frames.reserve(frames->size());
    for (const auto& f : *frames) {
        if (!f.is_string())
            throw ParseError{line_no, "\"frames\" must contain only strings"};
        e.frames.push_back(f.get<std::string>());
    }

    if (auto fps = obj.find("fps"); fps != obj.end() && !fps->is_null()) {
        if (!fps->is_number() || fps->get<double>() <= 0.0)
            throw ParseError{line_no, "\"fps\" must be a positive number"};
        e.fps = fps->get<double>();
    }

    if (auto tags = obj.find("tags"); tags != obj.end() && !tags->is_null()) {
        if (!tags->is_object())
            throw ParseError{line_no, "\"tags\" must be an object"};
        for (const auto& [k, v] : tags->items()) {
            if (!v.is_string())
                throw ParseError{line_no, "tag \"" + k + "\" must be a string"};
            e.tags.emplace(k, v.get<std::string>());
        }
    }

    if (e.frames.empty())
        throw Error{ErrorCode::EmptyClip, "clip \"" + e.clip_id + "\" (line " + std::to_string(line_no) +
                                              ") has no frames"};
    return e;
}

} // namespace

std::vector<ClipManifestEntry> parse_manifest(std::istream& in)
{
    std::vector<ClipManifestEntry> entries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line))
            continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& ex) {
            throw ParseError{line_no, ex.what()};
        }

        auto e = entry_from_json(obj, line_no);
        if (!seen.insert(e.clip_id).second)
            throw Error{ErrorCode::DuplicateClip, "clip \"" + e.clip_id + "\" repeated on line " +
                                                      std::to_string(line_no)};
        entries.push_back(std::move(e));
    }
    if (in.bad())
        throw Error{ErrorCode::IoError, "failed reading manifest stream"};
    return entries;
}

std::vector<ClipManifestEntry> parse_manifest(std::string_view text)
{
    std::istringstream in{std::string{text}};
    return parse_manifest(in);
}

std::vector<ClipManifestEntry> load_manifest_file(const std::filesystem::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error{ErrorCode::IoError, "cannot open manifest " + path.string()};
    return parse_manifest(in);
}

ClipManifestEntry scan_frame_dir(const std::filesystem::path& dir, std::string_view pattern)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error{ErrorCode::IoError, "not a directory: " + dir.string()};

    const std::string pat{pattern};
    ClipManifestEntry e;
    for (const auto& de : fs::directory_iterator{dir}) {
        if (!de.is_regular_file())
            continue;
        auto name = de.path().filename().string();
        if (::fnmatch(pat.c_str(), name.c_str(), FNM_PERIOD) == 0)
            e.frames.push_back(std::move(name));
    }
    std::sort(e.frames.begin(), e.frames.end());

    auto base = fs::absolute(dir).lexically_normal();
    if (!base.has_filename())
        base = base.parent_path();
    e.clip_id = base.filename().string();

    if (e.frames.empty())
        throw Error{ErrorCode::EmptyClip, "no files matching \"" + pat + "\" in " + dir.string()};
    return e;
}

} // namespace fluxflow
