#include "trueknn/report.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "trueknn/error.hpp"

namespace trueknn::report {

namespace {

using json = nlohmann::json;

double to_ms(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

class Fnv1a64 {
public:
    void add(std::uint64_t value) {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (value >> (8 * i)) & 0xffu;
            hash_ *= 0x100000001b3ull;
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace

std::string result_digest(const KnnResult& result) {
    Fnv1a64 h;
    h.add(result.indices.size());
    for (std::size_t q = 0; q < result.indices.size(); ++q) {
        h.add(result.indices[q].size());
        for (std::size_t j = 0; j < result.indices[q].size(); ++j) {
            h.add(result.indices[q][j]);
            h.add(std::bit_cast<std::uint64_t>(result.distances[q][j]));
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h.value()));
    return buf;
}

json dataset_json(const PointSet& points, const std::string& spec) {
    return {{"source", points.source_name()},
            {"spec", spec},
            {"n", points.size()},
            {"dimensionality", to_string(points.dimensionality())}};
}

json config_json(const SearchConfig& c) {
    json j = {{"k", c.k},
              {"growth_factor", c.growth_factor},
              {"sample_size", c.sample_size},
              {"sample_k", c.sample_k},
              {"seed", c.rng_seed},
              {"leaf_capacity", c.leaf_capacity},
              {"refit_mode", c.refit_mode == RefitMode::kRefit ? "refit" : "rebuild"},
              {"threads", c.threads}};
    j["start_radius"] = c.start_radius ? json(*c.start_radius) : json(nullptr);
    j["max_rounds"] = c.max_rounds ? json(*c.max_rounds) : json(nullptr);
    j["radius_cap"] = c.radius_cap ? json(*c.radius_cap) : json(nullptr);
    return j;
}

json round_json(const SearchRound& r) {
    return {{"round", r.round_index},
            {"radius", r.radius},
            {"active_queries", r.active_queries},
            {"resolved_this_round", r.resolved_this_round},
            {"aabb_tests", r.counters.aabb_tests},
            {"sphere_tests", r.counters.sphere_tests},
            {"elapsed_ms", to_ms(r.elapsed)},
            {"bvh_update_ms", to_ms(r.bvh_update)}};
}

json search_json(const KnnResult& result) {
    json rounds = json::array();
    std::chrono::nanoseconds round_time{0};
    std::chrono::nanoseconds update_time{0};
    for (const SearchRound& r : result.rounds) {
        rounds.push_back(round_json(r));
        round_time += r.elapsed;
        update_time += r.bvh_update;
    }
    const std::size_t resolved = result.resolved_count();
    return {{"start_radius", result.start_radius},
            {"final_radius", result.final_radius},
            {"rounds", std::move(rounds)},
            {"totals",
             {{"rounds", result.rounds.size()},
              {"aabb_tests", result.totals.aabb_tests},
              {"sphere_tests", result.totals.sphere_tests},
              {"round_time_ms", to_ms(round_time)},
              {"bvh_update_ms", to_ms(update_time)},
              {"build_time_ms", to_ms(result.build_time)},
              {"wall_time_ms", to_ms(result.total_time)},
              {"resolved", resolved},
              {"unresolved", result.query_count() - resolved}}},
            {"digest", result_digest(result)}};
}

json oracle_json(const PointSet& points, const std::string& spec, const oracle::ExactKnn& knn) {
    return {{"schema", kOracleSchema},
            {"dataset", dataset_json(points, spec)},
            {"k", knn.k},
            {"max_dist", oracle::max_knn_distance(knn)},
            {"p99_dist", oracle::percentile_knn_distance(knn, 99.0)},
            {"indices", knn.indices},
            {"distances", knn.distances}};
}

oracle::ExactKnn exact_knn_from_json(const json& fixture) {
    try {
        if (fixture.at("schema") != kOracleSchema) throw DataError("not an oracle fixture (schema mismatch)");
        oracle::ExactKnn knn;
        knn.k = fixture.at("k").get<std::size_t>();
        knn.indices = fixture.at("indices").get<std::vector<std::vector<std::uint32_t>>>();
        knn.distances = fixture.at("distances").get<std::vector<std::vector<double>>>();
        if (knn.indices.size() != knn.distances.size()) throw DataError("oracle fixture: ragged neighbor block");
        return knn;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed oracle fixture: ") + e.what());
    }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw DataError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DataError("cannot move report into '" + path.string() + "': " + ec.message());
    }
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace trueknn::report
