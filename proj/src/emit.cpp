#include "fluxflow/emit.hpp"

#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace fluxflow {

namespace {

using ojson = nlohmann::ordered_json;

ojson spec_json(const PerturbationSpec& spec)
{
    ojson j;
    j["mode"] = std::string{to_string(spec.mode)};
    if (const auto* c = std::get_if<Count>(&spec.degree))
        j["degree"] = ojson{{"count", c->value}};
    else
        j["degree"] = ojson{{"ratio", std::get<Ratio>(spec.degree).value}};
    if (spec.block_size)
        j["block_size"] = *spec.block_size;
    else
        j["block_size"] = nullptr;
    if (const auto* g = std::get_if<MinGap>(&spec.interval))
        j["min_gap"] = g->value;
    else
        j["gap_ratio"] = std::get<GapRatio>(spec.interval).value;
    j["require_move"] = spec.require_move;
    return j;
}

std::uint64_t get_u64(const ojson& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned())
        throw std::invalid_argument{std::string{"missing or non-integer \""} + key + "\""};
    return it->get<std::uint64_t>();
}

std::vector<std::size_t> get_index_array(const ojson& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_array())
        throw std::invalid_argument{std::string{"missing or non-array \""} + key + "\""};
    std::vector<std::size_t> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number_unsigned())
            throw std::invalid_argument{std::string{"\""} + key + "\" must hold nonnegative integers"};
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

PerturbationSpec spec_from(const ojson& j)
{
    if (!j.is_object())
        throw std::invalid_argument{"spec must be an object"};

    PerturbationSpec spec;
    auto mode = j.at("mode").get<std::string>();
    if (mode == "frame")
        spec.mode = Mode::Frame;
    else if (mode == "block")
        spec.mode = Mode::Block;
    else
        throw std::invalid_argument{"unknown mode \"" + mode + "\""};

    const auto& degree = j.at("degree");
    if (degree.contains("count"))
        spec.degree = Count{get_u64(degree, "count")};
    else if (degree.contains("ratio") && degree.at("ratio").is_number())
        spec.degree = Ratio{degree.at("ratio").get<double>()};
    else
        throw std::invalid_argument{"degree needs \"count\" or \"ratio\""};

    if (auto bs = j.find("block_size"); bs != j.end() && !bs->is_null())
        spec.block_size = get_u64(j, "block_size");

    if (j.contains("gap_ratio") && j.at("gap_ratio").is_number())
        spec.interval = GapRatio{j.at("gap_ratio").get<double>()};
    else if (j.contains("min_gap"))
        spec.interval = MinGap{get_u64(j, "min_gap")};

    if (auto rm = j.find("require_move"); rm != j.end())
        spec.require_move = rm->get<bool>();
    return spec;
}

ojson entry_json(const ClipManifestEntry& e, std::span<const std::string> frames)
{
    ojson j;
    j["clip_id"] = e.clip_id;
    j["frames"] = ojson::array();
    for (const auto& f : frames)
        j["frames"].push_back(f);
    if (e.fps)
        j["fps"] = *e.fps;
    if (!e.tags.empty()) {
        ojson tags = ojson::object();
        for (const auto& [k, v] : e.tags)
            tags[k] = v;
        j["tags"] = std::move(tags);
    }
    return j;
}

template <typename Fn>
std::string to_string_via(Fn&& fn)
{
    std::ostringstream out;
    fn(out);
    return out.str();
}

} // namespace

PerturbationRecord make_record(std::string clip_id, std::size_t n_frames, const PerturbationSpec& spec,
                               std::uint64_t global_seed)
{
    const auto seed = derive_clip_seed(global_seed, clip_id);
    auto result = perturb(n_frames, spec, seed);
    return PerturbationRecord{std::move(clip_id), n_frames, spec, seed, std::move(result.selection),
                              std::move(result.permutation)};
}

void verify_record(const PerturbationRecord& record)
{
    PerturbationResult replay;
    try {
        replay = perturb(record.n_frames, record.spec, record.clip_seed);
    } catch (const Error& ex) {
        throw Error{ErrorCode::ReplayMismatch, "clip \"" + record.clip_id + "\": replay failed: " + ex.what()};
    }
    if (replay.permutation != record.permutation)
        throw Error{ErrorCode::ReplayMismatch, "clip \"" + record.clip_id + "\": stored permutation differs"};
    if (replay.selection != record.selection)
        throw Error{ErrorCode::ReplayMismatch, "clip \"" + record.clip_id + "\": stored selection differs"};
}

void write_manifest(std::ostream& out, std::span<const ClipManifestEntry> entries)
{
    for (const auto& e : entries)
        out << entry_json(e, e.frames).dump() << '\n';
}

std::string write_manifest(std::span<const ClipManifestEntry> entries)
{
    return to_string_via([&](std::ostream& o) { write_manifest(o, entries); });
}

void write_augmented_manifest(std::ostream& out, std::span<const ClipManifestEntry> entries,
                              std::span<const PerturbationRecord> records)
{
    std::unordered_map<std::string_view, const PerturbationRecord*> by_clip;
    for (const auto& r : records)
        by_clip.emplace(r.clip_id, &r);

    // Validate everything before writing a byte.
    std::vector<const PerturbationRecord*> matched;
    matched.reserve(entries.size());
    for (const auto& e : entries) {
        auto it = by_clip.find(e.clip_id);
        if (it == by_clip.end())
            throw Error{ErrorCode::MissingRecord, "no perturbation record for clip \"" + e.clip_id + "\""};
        const auto& r = *it->second;
        if (r.n_frames != e.frames.size() || r.permutation.size() != e.frames.size())
            throw Error{ErrorCode::LengthMismatch, "clip \"" + e.clip_id + "\" has " +
                                                       std::to_string(e.frames.size()) + " frames, record has " +
                                                       std::to_string(r.permutation.size())};
        matched.push_back(&r);
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto frames = apply_permutation(std::span<const std::string>{entries[i].frames}, matched[i]->permutation);
        out << entry_json(entries[i], frames).dump() << '\n';
    }
}

std::string write_augmented_manifest(std::span<const ClipManifestEntry> entries,
                                     std::span<const PerturbationRecord> records)
{
    return to_string_via([&](std::ostream& o) { write_augmented_manifest(o, entries, records); });
}

std::string spec_to_json(const PerturbationSpec& spec)
{
    return spec_json(spec).dump();
}

PerturbationSpec spec_from_json(std::string_view text)
{
    try {
        return spec_from(ojson::parse(text));
    } catch (const std::exception& ex) {
        throw ParseError{0, std::string{"spec: "} + ex.what()};
    }
}

void write_perturbation_log(std::ostream& out, std::span<const PerturbationRecord> records)
{
    for (const auto& r : records) {
        ojson j;
        j["clip_id"] = r.clip_id;
        j["n_frames"] = r.n_frames;
        j["spec"] = spec_json(r.spec);
        j["clip_seed"] = r.clip_seed;
        j["selection"] = r.selection.indices;
        j["permutation"] = std::vector<std::size_t>(r.permutation.map().begin(), r.permutation.map().end());
        out << j.dump() << '\n';
    }
}

std::string write_perturbation_log(std::span<const PerturbationRecord> records)
{
    return to_string_via([&](std::ostream& o) { write_perturbation_log(o, records); });
}

std::vector<PerturbationRecord> read_perturbation_log(std::istream& in)
{
    std::vector<PerturbationRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto j = ojson::parse(line);
            if (!j.is_object())
                throw std::invalid_argument{"expected a JSON object"};
            PerturbationRecord r;
            r.clip_id = j.at("clip_id").get<std::string>();
            r.n_frames = get_u64(j, "n_frames");
            r.spec = spec_from(j.at("spec"));
            r.clip_seed = get_u64(j, "clip_seed");
            r.selection.indices = get_index_array(j, "selection");
            r.permutation = Permutation::from_map(get_index_array(j, "permutation"));
            records.push_back(std::move(r));
        } catch (const std::exception& ex) {
            throw ParseError{line_no, ex.what()};
        }
    }
    return records;
}

std::vector<PerturbationRecord> read_perturbation_log(std::string_view text)
{
    std::istringstream in{std::string{text}};
    return read_perturbation_log(in);
}

} // namespace fluxflow
