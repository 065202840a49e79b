#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trueknn/dataset.hpp"

namespace trueknn::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kVerifyFailed = 3,
};

/// Parsed `--csv` / `--gen` / `--limit` / `--seed` flags.
struct DatasetSpec {
    std::optional<std::string> csv;  ///< path[:xcol,ycol[,zcol]]
    std::optional<std::string> gen;  ///< uniform:<n> | clustered:<n>[,clusters,spread,outlier_frac]
    std::optional<std::size_t> limit;
    std::uint64_t seed = 0;

    std::string describe() const;
};

/// Throws InvalidArgument for malformed specifiers, DataError for load failures.
PointSet load_dataset(const DatasetSpec& spec);

/// "sqrt" -> floor(sqrt(n)); otherwise a positive integer.
std::size_t resolve_k(const std::string& k_flag, std::size_t n);

/// Entry point shared by the `trueknn` executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trueknn::cli
