#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "trueknn/dataset.hpp"
#include "trueknn/oracle.hpp"
#include "trueknn/search.hpp"

namespace trueknn::report {

inline constexpr const char* kRunSchema = "trueknn-run-report/1";
inline constexpr const char* kOracleSchema = "trueknn-oracle/1";

/// FNV-1a 64 over every query's neighbor count, indices and distance bits,
/// rendered as "fnv1a64:<16 hex digits>". Independent of timing.
std::string result_digest(const KnnResult& result);

nlohmann::json dataset_json(const PointSet& points, const std::string& spec);
nlohmann::json config_json(const SearchConfig& config);
nlohmann::json round_json(const SearchRound& round);

/// rounds, totals (counter and time sums over rounds, plus end-to-end wall
/// time) and digest for one search.
nlohmann::json search_json(const KnnResult& result);

/// Oracle fixture: exact neighbors plus maxDist and the 99th-percentile radius.
nlohmann::json oracle_json(const PointSet& points, const std::string& spec, const oracle::ExactKnn& knn);

/// Inverse of oracle_json's neighbor block. Throws DataError on malformed input.
oracle::ExactKnn exact_knn_from_json(const nlohmann::json& fixture);

/// Writes through a sibling temp file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace trueknn::report
