#include "trueknn/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

#include "trueknn/error.hpp"

namespace trueknn {

std::string to_string(Dimensionality dim) { return dim == Dimensionality::k2D ? "2D" : "3D"; }

PointSet::PointSet(std::vector<Point3> points, Dimensionality dim, std::string source_name)
    : points_(std::move(points)), dim_(dim), source_name_(std::move(source_name)) {
    if (points_.empty()) throw InvalidInput("point set '" + source_name_ + "' is empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!points_[i].finite()) throw InvalidInput("point " + std::to_string(i) + " has a non-finite coordinate");
        if (dim_ == Dimensionality::k2D && points_[i].z != 0.0)
            throw InvalidInput("2D point set has nonzero z at point " + std::to_string(i));
    }
}

PointSet PointSet::prefix(std::size_t count) const {
    count = std::min(count, points_.size());
    return PointSet({points_.begin(), points_.begin() + static_cast<std::ptrdiff_t>(count)}, dim_, source_name_);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

std::string column_label(const ColumnRef& ref) {
    if (const auto* idx = std::get_if<std::size_t>(&ref)) return std::to_string(*idx + 1);
    return "'" + std::get<std::string>(ref) + "'";
}

}  // namespace

PointSet load_csv(const std::filesystem::path& path, const std::optional<CsvColumns>& columns,
                  std::optional<std::size_t> limit) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::optional<CsvColumns> selected = columns;
    std::array<std::size_t, 3> col{};
    bool has_z = false;
    bool resolved = false;

    auto resolve = [&](const std::vector<std::string_view>& header_or_row, bool is_header) {
        if (!selected) {
            selected = CsvColumns{};
            if (header_or_row.size() >= 3) selected->z = std::size_t{2};
        }
        auto index_of = [&](const ColumnRef& ref) -> std::size_t {
            if (const auto* idx = std::get_if<std::size_t>(&ref)) return *idx;
            const auto& name = std::get<std::string>(ref);
            if (!is_header) throw DataError("column " + column_label(ref) + " selected by name but file has no header");
            for (std::size_t i = 0; i < header_or_row.size(); ++i)
                if (header_or_row[i] == name) return i;
            throw DataError("header of '" + path.string() + "' has no column " + column_label(ref));
        };
        col[0] = index_of(selected->x);
        col[1] = index_of(selected->y);
        has_z = selected->z.has_value();
        if (has_z) col[2] = index_of(*selected->z);
        resolved = true;
    };

    std::vector<Point3> points;
    std::string line;
    std::size_t line_no = 0;
    bool first_content_line = true;
    while ((!limit || points.size() < *limit) && std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);

        if (first_content_line) {
            first_content_line = false;
            // A header is a first line with no numeric field, or any column chosen by name.
            bool numeric = std::any_of(fields.begin(), fields.end(),
                                       [](std::string_view f) { return parse_number(f).has_value(); });
            if (columns) {
                for (const ColumnRef* ref : {&columns->x, &columns->y, columns->z ? &*columns->z : nullptr})
                    if (ref && std::holds_alternative<std::string>(*ref)) numeric = false;
            }
            if (!numeric) {
                resolve(fields, true);
                continue;
            }
        }
        if (!resolved) resolve(fields, false);

        Point3 p;
        double* coords[3] = {&p.x, &p.y, &p.z};
        for (int d = 0; d < (has_z ? 3 : 2); ++d) {
            const std::size_t c = col[static_cast<std::size_t>(d)];
            const std::string where = "row " + std::to_string(line_no) + ", column " + std::to_string(c + 1);
            if (c >= fields.size() || fields[c].empty())
                throw DataError(path.string() + ": missing value at " + where);
            const auto value = parse_number(fields[c]);
            if (!value) throw DataError(path.string() + ": non-numeric value '" + std::string(fields[c]) + "' at " + where);
            if (!std::isfinite(*value)) throw DataError(path.string() + ": non-finite value at " + where);
            *coords[d] = *value;
        }
        points.push_back(p);
    }
    if (points.empty()) throw DataError("'" + path.string() + "' contains no data rows");
    return PointSet(std::move(points), has_z ? Dimensionality::k3D : Dimensionality::k2D, path.filename().string());
}

PointSet gen_uniform(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("gen_uniform needs n >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point3> points(n);
    for (auto& p : points) {
        p.x = unit(rng);
        p.y = unit(rng);
        p.z = unit(rng);
    }
    return PointSet(std::move(points), Dimensionality::k3D, "uniform:" + std::to_string(n));
}

PointSet gen_clustered(std::size_t n, const ClusterParams& params, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("gen_clustered needs n >= 1");
    if (params.cluster_count < 1) throw InvalidArgument("cluster_count must be >= 1");
    if (!(params.outlier_fraction >= 0.0 && params.outlier_fraction < 1.0))
        throw InvalidArgument("outlier_fraction must be in [0, 1)");
    if (!(params.cluster_spread >= 0.0) || !std::isfinite(params.cluster_spread))
        throw InvalidArgument("cluster_spread must be finite and non-negative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Point3> centers(params.cluster_count);
    for (auto& c : centers) c = {unit(rng), unit(rng), unit(rng)};

    const auto outliers = static_cast<std::size_t>(std::llround(params.outlier_fraction * static_cast<double>(n)));
    const std::size_t clustered = n - std::min(outliers, n);

    std::vector<Point3> points;
    points.reserve(n);
    std::normal_distribution<double> noise(0.0, params.cluster_spread > 0.0 ? params.cluster_spread : 1.0);
    std::uniform_int_distribution<std::size_t> which(0, params.cluster_count - 1);
    Aabb region;
    for (std::size_t i = 0; i < clustered; ++i) {
        const Point3& c = centers[which(rng)];
        Point3 p = c;
        if (params.cluster_spread > 0.0) p = {c.x + noise(rng), c.y + noise(rng), c.z + noise(rng)};
        region.merge(p);
        points.push_back(p);
    }
    if (clustered == 0) region = Aabb{{0, 0, 0}, {1, 1, 1}};

    const Point3 mid{(region.min.x + region.max.x) / 2, (region.min.y + region.max.y) / 2,
                     (region.min.z + region.max.z) / 2};
    std::array<std::uniform_real_distribution<double>, 3> outer;
    for (int d = 0; d < 3; ++d) {
        const double half = 5.0 * std::max(region.max[d] - region.min[d], 1e-12);
        outer[static_cast<std::size_t>(d)] = std::uniform_real_distribution<double>(mid[d] - half, mid[d] + half);
    }
    for (std::size_t i = clustered; i < n; ++i) points.push_back({outer[0](rng), outer[1](rng), outer[2](rng)});

    std::shuffle(points.begin(), points.end(), rng);
    return PointSet(std::move(points), Dimensionality::k3D, "clustered:" + std::to_string(n));
}

}  // namespace trueknn
