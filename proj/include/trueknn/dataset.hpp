#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trueknn/geometry.hpp"

namespace trueknn {

enum class Dimensionality { k2D, k3D };

std::string to_string(Dimensionality dim);

/// The dataset D: an ordered, non-empty collection of finite 3D points.
/// 2D inputs are lifted with z = 0.
class PointSet {
public:
    PointSet(std::vector<Point3> points, Dimensionality dim, std::string source_name);

    std::span<const Point3> points() const { return points_; }
    const Point3& operator[](std::size_t i) const { return points_[i]; }
    std::size_t size() const { return points_.size(); }
    Dimensionality dimensionality() const { return dim_; }
    const std::string& source_name() const { return source_name_; }

    /// First `count` points, same tag. count is clamped to size().
    PointSet prefix(std::size_t count) const;

private:
    std::vector<Point3> points_;
    Dimensionality dim_;
    std::string source_name_;
};

/// Column selector: zero-based index or header name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvColumns {
    ColumnRef x = std::size_t{0};
    ColumnRef y = std::size_t{1};
    std::optional<ColumnRef> z;
};

/// Loads comma-delimited points. A first line whose selected fields are not
/// all numeric is treated as a header. Without explicit columns, the first two
/// fields are x and y and a third field, when present on the first data row,
/// is z. Any row with a missing, non-numeric or non-finite selected field
/// raises DataError naming the 1-based line and column.
PointSet load_csv(const std::filesystem::path& path, const std::optional<CsvColumns>& columns = std::nullopt,
                  std::optional<std::size_t> limit = std::nullopt);

/// n points with coordinates i.i.d. uniform on [0,1].
PointSet gen_uniform(std::size_t n, std::uint64_t seed);

struct ClusterParams {
    std::size_t cluster_count = 5;
    double cluster_spread = 0.01;
    double outlier_fraction = 0.001;
};

/// Gaussian blobs around uniformly placed centers in [0,1]^3 plus
/// round(outlier_fraction * n) outliers drawn uniformly from the clustered
/// points' bounding box scaled 10x about its center. The two populations are
/// shuffled together.
PointSet gen_clustered(std::size_t n, const ClusterParams& params, std::uint64_t seed);

}  // namespace trueknn
