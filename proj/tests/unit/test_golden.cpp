#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluxflow/emit.hpp"
#include "fluxflow/fluxflow.hpp"
#include "test_support.hpp"

using namespace fluxflow;

namespace {

// Fixed tuples covering both modes, both degree and interval forms, and
// require_move. Set FLUXFLOW_REGEN_GOLDEN=1 to rewrite the file.
std::vector<std::tuple<std::string, std::size_t, PerturbationSpec, std::uint64_t>> golden_cases()
{
    std::vector<std::tuple<std::string, std::size_t, PerturbationSpec, std::uint64_t>> cases;
    std::mt19937_64 gen{20240601};
    while (cases.size() < 100) {
        const std::size_t n = 1 + gen() % 64;
        const bool block = gen() % 3 == 0;
        const std::size_t k = 1 + gen() % 8;
        PerturbationSpec spec;
        spec.mode = block ? Mode::Block : Mode::Frame;
        if (block)
            spec.block_size = k;
        const std::size_t units = block ? n / k : n;
        if (units == 0)
            continue;
        if (gen() % 2)
            spec.degree = Ratio{static_cast<double>(gen() % 5) / 4.0};
        else
            spec.degree = Count{gen() % (units + 1)};
        if (gen() % 3 == 0)
            spec.interval = GapRatio{static_cast<double>(gen() % 4) / 8.0};
        else
            spec.interval = MinGap{gen() % 3};
        spec.require_move = gen() % 2;
        try {
            perturb(n, spec, 0);
        } catch (const InfeasibleSelectionError&) {
            continue;
        }
        cases.emplace_back("golden-" + std::to_string(cases.size()), n, spec, gen() % 1000);
    }
    return cases;
}

std::string golden_line(const std::string& id, std::size_t n, const PerturbationSpec& spec, std::uint64_t seed)
{
    nlohmann::ordered_json j;
    j["clip_id"] = id;
    j["n_frames"] = n;
    j["spec"] = nlohmann::ordered_json::parse(spec_to_json(spec));
    j["global_seed"] = seed;
    j["permutation"] = permute_indices(id, n, spec, seed);
    return j.dump();
}

} // namespace

TEST_CASE("golden permutation corpus")
{
    const std::filesystem::path path = std::filesystem::path{FLUXFLOW_GOLDEN_DIR} / "permutations.jsonl";
    const auto cases = golden_cases();

    if (std::getenv("FLUXFLOW_REGEN_GOLDEN")) {
        std::ofstream out{path, std::ios::binary | std::ios::trunc};
        for (const auto& [id, n, spec, seed] : cases)
            out << golden_line(id, n, spec, seed) << '\n';
        MESSAGE("rewrote " << path.string());
    }

    std::istringstream in{testing::read_text(path)};
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        REQUIRE(count < cases.size());
        const auto& [id, n, spec, seed] = cases[count];
        CAPTURE(id);
        auto j = nlohmann::json::parse(line);
        CHECK(j["clip_id"] == id);
        CHECK(spec_from_json(j["spec"].dump()) == spec);
        const auto stored = j["permutation"].get<std::vector<std::size_t>>();
        CHECK(stored == permute_indices(id, n, spec, j["global_seed"].get<std::uint64_t>()));
        CHECK(Permutation::from_map(stored).size() == n);
        ++count;
    }
    CHECK(count == 100);
}
