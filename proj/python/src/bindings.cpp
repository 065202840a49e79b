#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <limits>
#include <string>

#include "trueknn/bvh.hpp"
#include "trueknn/dataset.hpp"
#include "trueknn/error.hpp"
#include "trueknn/oracle.hpp"
#include "trueknn/report.hpp"
#include "trueknn/search.hpp"

namespace py = pybind11;
using namespace trueknn;

namespace {

using Coords = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointSet point_set_from_array(const Coords& coords, const std::string& source_name) {
    if (coords.ndim() != 2 || (coords.shape(1) != 2 && coords.shape(1) != 3))
        throw InvalidInput("expected an (n, 2) or (n, 3) array of coordinates");
    const auto view = coords.unchecked<2>();
    const bool flat = coords.shape(1) == 2;
    std::vector<Point3> pts(static_cast<std::size_t>(coords.shape(0)));
    for (py::ssize_t i = 0; i < coords.shape(0); ++i)
        pts[i] = {view(i, 0), view(i, 1), flat ? 0.0 : view(i, 2)};
    return PointSet(std::move(pts), flat ? Dimensionality::k2D : Dimensionality::k3D, source_name);
}

py::array_t<double> points_to_array(const PointSet& points) {
    py::array_t<double> out({static_cast<py::ssize_t>(points.size()), py::ssize_t{3}});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (int d = 0; d < 3; ++d) view(i, d) = points[i][d];
    return out;
}

// Ragged neighbor lists become dense (n, k) arrays padded with `fill`.
template <typename Out, typename In>
py::array_t<Out> padded(const std::vector<std::vector<In>>& rows, std::size_t k, Out fill) {
    const auto n = static_cast<py::ssize_t>(rows.size());
    py::array_t<Out> out({n, static_cast<py::ssize_t>(k)});
    auto view = out.template mutable_unchecked<2>();
    for (py::ssize_t q = 0; q < n; ++q)
        for (std::size_t j = 0; j < k; ++j) view(q, j) = j < rows[q].size() ? static_cast<Out>(rows[q][j]) : fill;
    return out;
}

py::tuple neighbor_arrays(const std::vector<std::vector<std::uint32_t>>& indices,
                          const std::vector<std::vector<double>>& distances, std::size_t k) {
    return py::make_tuple(padded<std::int64_t>(indices, k, -1),
                          padded<double>(distances, k, std::numeric_limits<double>::quiet_NaN()));
}

std::size_t result_k(const KnnResult& r) {
    std::size_t k = 0;
    for (const auto& row : r.indices) k = std::max(k, row.size());
    return k;
}

py::object json_to_python(const nlohmann::json& doc) {
    return py::module_::import("json").attr("loads")(doc.dump());
}

SearchConfig make_config(std::size_t k, std::optional<double> start_radius, double growth_factor,
                         std::optional<std::size_t> max_rounds, std::optional<double> radius_cap,
                         std::size_t sample_size, std::size_t sample_k, std::uint64_t seed,
                         std::size_t leaf_capacity, const std::string& refit_mode, std::size_t threads) {
    SearchConfig c;
    c.k = k;
    c.start_radius = start_radius;
    c.growth_factor = growth_factor;
    c.max_rounds = max_rounds;
    c.radius_cap = radius_cap;
    c.sample_size = sample_size;
    c.sample_k = sample_k;
    c.rng_seed = seed;
    c.leaf_capacity = leaf_capacity;
    if (refit_mode == "refit")
        c.refit_mode = RefitMode::kRefit;
    else if (refit_mode == "rebuild")
        c.refit_mode = RefitMode::kRebuild;
    else
        throw InvalidArgument("refit_mode must be 'refit' or 'rebuild', got '" + refit_mode + "'");
    c.threads = threads;
    return c;
}

KnnResult run_search(bool bounded, const PointSet& points, const SearchConfig& config) {
    py::gil_scoped_release release;
    return bounded ? true_knn_bounded(points, config) : true_knn(points, config);
}

template <bool Bounded>
KnnResult search_entry(const PointSet& points, std::size_t k, std::optional<double> radius_cap,
                       std::optional<double> start_radius, double growth_factor,
                       std::optional<std::size_t> max_rounds, std::size_t sample_size, std::size_t sample_k,
                       std::uint64_t seed, std::size_t leaf_capacity, const std::string& refit_mode,
                       std::size_t threads) {
    return run_search(Bounded, points,
                      make_config(k, start_radius, growth_factor, max_rounds, radius_cap, sample_size, sample_k, seed,
                                  leaf_capacity, refit_mode, threads));
}

}  // namespace

PYBIND11_MODULE(_trueknn, m) {
    m.doc() = "Exact multi-round k-nearest-neighbor search over a sphere BVH.";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "InvalidInput", error.ptr());
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
    py::register_exception<DegenerateDataset>(m, "DegenerateDataset", data_error.ptr());
    py::register_exception<MaxRoundsExceeded>(m, "MaxRoundsExceeded", error.ptr());

    py::class_<PointSet>(m, "PointSet")
        .def(py::init(&point_set_from_array), py::arg("coords"), py::arg("source_name") = "array",
             "Build from an (n, 2) or (n, 3) float array; 2D input is lifted with z = 0.")
        .def("__len__", &PointSet::size)
        .def_property_readonly("dimensionality", [](const PointSet& p) { return to_string(p.dimensionality()); })
        .def_property_readonly("source_name", &PointSet::source_name)
        .def("to_numpy", &points_to_array, "Coordinates as an (n, 3) float array.")
        .def("prefix", &PointSet::prefix, py::arg("count"))
        .def("__repr__", [](const PointSet& p) {
            return "<PointSet n=" + std::to_string(p.size()) + " " + to_string(p.dimensionality()) + " '" +
                   p.source_name() + "'>";
        });

    m.def("gen_uniform", &gen_uniform, py::arg("n"), py::arg("seed") = 0);
    m.def(
        "gen_clustered",
        [](std::size_t n, std::size_t clusters, double spread, double outlier_fraction, std::uint64_t seed) {
            return gen_clustered(n, ClusterParams{clusters, spread, outlier_fraction}, seed);
        },
        py::arg("n"), py::arg("clusters") = 5, py::arg("spread") = 0.01, py::arg("outlier_fraction") = 0.001,
        py::arg("seed") = 0);
    m.def(
        "load_csv",
        [](const std::filesystem::path& path, std::optional<std::vector<ColumnRef>> columns,
           std::optional<std::size_t> limit) {
            std::optional<CsvColumns> cols;
            if (columns) {
                if (columns->size() < 2 || columns->size() > 3)
                    throw InvalidArgument("columns must list 2 or 3 selectors");
                cols = CsvColumns{(*columns)[0], (*columns)[1], {}};
                if (columns->size() == 3) cols->z = (*columns)[2];
            }
            return load_csv(path, cols, limit);
        },
        py::arg("path"), py::arg("columns") = py::none(), py::arg("limit") = py::none(),
        "Columns are zero-based indices or header names, in x, y[, z] order.");

    py::class_<TraversalCounters>(m, "TraversalCounters")
        .def_readonly("aabb_tests", &TraversalCounters::aabb_tests)
        .def_readonly("sphere_tests", &TraversalCounters::sphere_tests)
        .def("__repr__", [](const TraversalCounters& c) {
            return "<TraversalCounters aabb_tests=" + std::to_string(c.aabb_tests) +
                   " sphere_tests=" + std::to_string(c.sphere_tests) + ">";
        });

    py::class_<Bvh>(m, "Bvh")
        .def(py::init([](const PointSet& points, double radius, std::size_t leaf_capacity) {
                 return Bvh::build(points.points(), radius, leaf_capacity);
             }),
             py::arg("points"), py::arg("radius"), py::arg("leaf_capacity") = Bvh::kDefaultLeafCapacity,
             py::keep_alive<1, 2>())
        .def("refit", &Bvh::refit, py::arg("radius"))
        .def_property_readonly("radius", &Bvh::radius)
        .def_property_readonly("node_count", [](const Bvh& b) { return b.nodes().size(); })
        .def(
            "query_point",
            [](const Bvh& bvh, std::array<double, 3> q) {
                TraversalCounters counters;
                std::vector<std::uint32_t> hits;
                bvh.query_point({q[0], q[1], q[2]}, counters, [&](std::uint32_t i, double) { hits.push_back(i); });
                std::sort(hits.begin(), hits.end());
                return py::make_tuple(hits, counters);
            },
            py::arg("point"), "Sorted indices of spheres containing the point, plus traversal counters.");

    py::class_<KnnResult>(m, "KnnResult")
        .def_property_readonly("indices",
                               [](const KnnResult& r) { return padded<std::int64_t>(r.indices, result_k(r), -1); })
        .def_property_readonly("distances",
                               [](const KnnResult& r) {
                                   return padded<double>(r.distances, result_k(r),
                                                         std::numeric_limits<double>::quiet_NaN());
                               })
        .def_property_readonly("resolved",
                               [](const KnnResult& r) {
                                   py::array_t<bool> out(static_cast<py::ssize_t>(r.resolved.size()));
                                   auto v = out.mutable_unchecked<1>();
                                   for (std::size_t i = 0; i < r.resolved.size(); ++i) v(i) = r.resolved[i];
                                   return out;
                               })
        .def_property_readonly("resolved_count", &KnnResult::resolved_count)
        .def_property_readonly("round_count", [](const KnnResult& r) { return r.rounds.size(); })
        .def_readonly("totals", &KnnResult::totals)
        .def_readonly("start_radius", &KnnResult::start_radius)
        .def_readonly("final_radius", &KnnResult::final_radius)
        .def_property_readonly("digest", &report::result_digest)
        .def(
            "report", [](const KnnResult& r) { return json_to_python(report::search_json(r)); },
            "Rounds, totals and digest as plain Python data.")
        .def("__len__", &KnnResult::query_count);

    m.def("true_knn", &search_entry<false>, py::arg("points"), py::arg("k"), py::kw_only(),
          py::arg("radius_cap") = py::none(), py::arg("start_radius") = py::none(), py::arg("growth_factor") = 2.0,
          py::arg("max_rounds") = py::none(), py::arg("sample_size") = 100, py::arg("sample_k") = 4,
          py::arg("seed") = 0, py::arg("leaf_capacity") = Bvh::kDefaultLeafCapacity,
          py::arg("refit_mode") = "refit", py::arg("threads") = 1,
          "Exact kNN by growing the search radius until every query has k neighbors.");
    m.def("true_knn_bounded", &search_entry<true>, py::arg("points"), py::arg("k"), py::kw_only(),
          py::arg("radius_cap"), py::arg("start_radius") = py::none(), py::arg("growth_factor") = 2.0,
          py::arg("max_rounds") = py::none(), py::arg("sample_size") = 100, py::arg("sample_k") = 4,
          py::arg("seed") = 0, py::arg("leaf_capacity") = Bvh::kDefaultLeafCapacity,
          py::arg("refit_mode") = "refit", py::arg("threads") = 1,
          "As true_knn, stopping after the round that reaches radius_cap.");
    m.def(
        "baseline_fixed_radius",
        [](const PointSet& points, std::size_t k, double radius, std::size_t leaf_capacity, std::size_t threads) {
            py::gil_scoped_release release;
            return baseline_fixed_radius(points, k, radius, leaf_capacity, threads);
        },
        py::arg("points"), py::arg("k"), py::arg("radius"), py::arg("leaf_capacity") = Bvh::kDefaultLeafCapacity,
        py::arg("threads") = 1);
    m.def("sample_start_radius", &sample_start_radius, py::arg("points"), py::arg("sample_size") = 100,
          py::arg("sample_k") = 4, py::arg("seed") = 0);

    m.def(
        "exact_knn",
        [](const PointSet& points, std::size_t k) {
            oracle::ExactKnn knn;
            {
                py::gil_scoped_release release;
                knn = oracle::exact_knn(points, k);
            }
            return neighbor_arrays(knn.indices, knn.distances, k);
        },
        py::arg("points"), py::arg("k"), "Brute-force reference: (indices, distances) arrays of shape (n, k).");
    m.def("max_knn_distance", py::overload_cast<const PointSet&, std::size_t>(&oracle::max_knn_distance),
          py::arg("points"), py::arg("k"));
    m.def("percentile_knn_distance",
          py::overload_cast<const PointSet&, std::size_t, double>(&oracle::percentile_knn_distance),
          py::arg("points"), py::arg("k"), py::arg("pct"));
    m.def(
        "matches_oracle",
        [](const KnnResult& result, const PointSet& points, double rel_tol, bool resolved_only) {
            const std::size_t k = result_k(result);
            if (k == 0) throw InvalidArgument("result holds no neighbors");
            const auto expected = oracle::exact_knn(points, k);
            const auto cmp = oracle::compare(result.indices, result.distances, expected, rel_tol,
                                             resolved_only ? &result.resolved : nullptr);
            return py::make_tuple(cmp.ok(), cmp.compared, cmp.first_mismatch);
        },
        py::arg("result"), py::arg("points"), py::arg("rel_tol") = 1e-9, py::arg("resolved_only") = false,
        "(ok, compared_queries, first_mismatch) against the brute-force reference.");
}
