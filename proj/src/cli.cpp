#include "trueknn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trueknn/error.hpp"
#include "trueknn/oracle.hpp"
#include "trueknn/report.hpp"
#include "trueknn/search.hpp"

namespace trueknn::cli {

namespace {

using json = nlohmann::json;

constexpr double kVerifyRelTol = 1e-9;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size() || s.front() == '-') throw InvalidArgument(what + ": '" + s + "' is not a count");
    return static_cast<std::size_t>(v);
}

double parse_real(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size()) throw InvalidArgument(what + ": '" + s + "' is not a number");
    return v;
}

ColumnRef parse_column(const std::string& s) {
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return static_cast<std::size_t>(std::stoull(s));
    return s;
}

void add_dataset_flags(CLI::App& cmd, DatasetSpec& ds) {
    cmd.add_option("--csv", ds.csv, "CSV dataset: path[:xcol,ycol[,zcol]] (0-based indices or header names)");
    cmd.add_option("--gen", ds.gen, "Synthetic dataset: uniform:<n> | clustered:<n>[,clusters,spread,outlier_frac]");
    cmd.add_option("--limit", ds.limit, "Use only the first <d> points");
    cmd.add_option("--seed", ds.seed, "Seed for generators and start-radius sampling");
}

void emit(const json& doc, const std::optional<std::string>& path, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (path)
        report::write_atomic(*path, text);
    else
        out << text;
}

void check_oracle_cap(std::size_t n, std::size_t cap) {
    if (n > cap)
        throw InvalidInput("brute-force oracle refused: n = " + std::to_string(n) + " exceeds --oracle-cap " +
                           std::to_string(cap));
}

void require_k(std::size_t k, std::size_t n) {
    if (k >= n)
        throw InvalidInput("k = " + std::to_string(k) + " is too large: the dataset has n = " + std::to_string(n) +
                           " points and every query needs k other points");
}

json verification_json(const oracle::Comparison& cmp, const std::string& source) {
    return {{"source", source},
            {"passed", cmp.ok()},
            {"compared_queries", cmp.compared},
            {"mismatched_queries", cmp.mismatched},
            {"first_mismatch", cmp.first_mismatch},
            {"rel_tol", kVerifyRelTol}};
}

double ratio(double num, double den) { return den > 0 ? num / den : std::numeric_limits<double>::infinity(); }

struct CompareOutcome {
    json report;
    bool exact = true;
};

CompareOutcome run_compare(const PointSet& points, const std::string& spec, SearchConfig config,
                           std::optional<double> percentile) {
    const oracle::ExactKnn expected = oracle::exact_knn(points, config.k);
    const double radius = percentile ? oracle::percentile_knn_distance(expected, *percentile)
                                     : oracle::max_knn_distance(expected);

    const KnnResult baseline =
        baseline_fixed_radius(points, config.k, radius, config.leaf_capacity, config.threads);
    KnnResult trueknn;
    if (percentile) {
        config.radius_cap = radius;
        trueknn = true_knn_bounded(points, config);
    } else {
        trueknn = true_knn(points, config);
    }

    const auto base_cmp = oracle::compare(baseline.indices, baseline.distances, expected, kVerifyRelTol,
                                          percentile ? &baseline.resolved : nullptr);
    const auto true_cmp = oracle::compare(trueknn.indices, trueknn.distances, expected, kVerifyRelTol,
                                          percentile ? &trueknn.resolved : nullptr);

    const auto& bt = baseline.totals;
    const auto& tt = trueknn.totals;
    CompareOutcome outcome;
    outcome.exact = base_cmp.ok() && true_cmp.ok();
    outcome.report = {
        {"schema", report::kRunSchema},
        {"command", "compare"},
        {"config", report::config_json(config)},
        {"dataset", report::dataset_json(points, spec)},
        {"trueknn", report::search_json(trueknn)},
        {"baseline", report::search_json(baseline)},
        {"comparison",
         {{"radius_source", percentile ? "percentile" : "max_dist"},
          {"percentile", percentile ? json(*percentile) : json(nullptr)},
          {"baseline_radius", radius},
          {"sphere_test_ratio", ratio(static_cast<double>(bt.sphere_tests), static_cast<double>(tt.sphere_tests))},
          {"aabb_test_ratio", ratio(static_cast<double>(bt.aabb_tests), static_cast<double>(tt.aabb_tests))},
          {"wall_time_ratio", ratio(static_cast<double>(baseline.total_time.count()),
                                    static_cast<double>(trueknn.total_time.count()))},
          {"baseline_resolved", baseline.resolved_count()},
          {"trueknn_resolved", trueknn.resolved_count()},
          {"baseline_matches_oracle", base_cmp.ok()},
          {"trueknn_matches_oracle", true_cmp.ok()}}}};
    return outcome;
}

SearchConfig make_config(std::size_t k, std::optional<double> start_radius, double growth, std::uint64_t seed,
                         std::size_t leaf_capacity, const std::string& refit_mode, std::size_t threads,
                         std::optional<std::size_t> max_rounds, std::size_t sample_size, std::size_t sample_k) {
    SearchConfig c;
    c.k = k;
    c.start_radius = start_radius;
    c.growth_factor = growth;
    c.rng_seed = seed;
    c.leaf_capacity = leaf_capacity;
    c.refit_mode = refit_mode == "rebuild" ? RefitMode::kRebuild : RefitMode::kRefit;
    c.threads = threads;
    c.max_rounds = max_rounds;
    c.sample_size = sample_size;
    c.sample_k = sample_k;
    c.validate();
    return c;
}

struct SearchFlags {
    std::string k = "5";
    std::optional<double> start_radius;
    double growth = 2.0;
    std::size_t leaf_capacity = Bvh::kDefaultLeafCapacity;
    std::string refit_mode = "refit";
    std::size_t threads = 1;
    std::optional<std::size_t> max_rounds;
    std::size_t sample_size = 100;
    std::size_t sample_k = 4;

    void attach(CLI::App& cmd) {
        cmd.add_option("--k", k, "Neighbor count, or 'sqrt' for floor(sqrt(n))");
        cmd.add_option("--start-radius", start_radius, "Skip sampling and start at this radius");
        cmd.add_option("--growth", growth, "Radius multiplier between rounds")->check(CLI::PositiveNumber);
        cmd.add_option("--leaf-capacity", leaf_capacity, "BVH leaf size");
        cmd.add_option("--refit-mode", refit_mode, "How the BVH follows the radius")
            ->check(CLI::IsMember({"refit", "rebuild"}));
        cmd.add_option("--threads", threads, "Worker threads per round (0 = all cores)");
        cmd.add_option("--max-rounds", max_rounds, "Abort after this many rounds");
        cmd.add_option("--sample-size", sample_size, "Points sampled for the start radius");
        cmd.add_option("--sample-k", sample_k, "Neighbors per sampled point");
    }

    SearchConfig config(std::size_t n, std::uint64_t seed) const {
        const std::size_t kk = resolve_k(k, n);
        require_k(kk, n);
        return make_config(kk, start_radius, growth, seed, leaf_capacity, refit_mode, threads, max_rounds,
                           sample_size, sample_k);
    }
};

int cmd_knn(const DatasetSpec& ds, const SearchFlags& flags, bool verify, const std::optional<std::string>& fixture,
            std::size_t oracle_cap, const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err) {
    const PointSet points = load_dataset(ds);
    const SearchConfig config = flags.config(points.size(), ds.seed);

    json doc = {{"schema", report::kRunSchema},
                {"command", "knn"},
                {"config", report::config_json(config)},
                {"dataset", report::dataset_json(points, ds.describe())}};
    KnnResult result;
    try {
        result = true_knn(points, config);
    } catch (const MaxRoundsExceeded& e) {
        json rounds = json::array();
        for (const auto& r : e.rounds()) rounds.push_back(report::round_json(r));
        doc["error"] = e.what();
        doc["rounds"] = std::move(rounds);
        emit(doc, out_path, out);
        err << "trueknn: " << e.what() << "\n";
        return kDataError;
    }
    doc.update(report::search_json(result));

    int code = kOk;
    if (verify || fixture) {
        oracle::ExactKnn expected;
        std::string source = "live";
        if (fixture) {
            expected = report::exact_knn_from_json(report::read_json(*fixture));
            source = "fixture:" + *fixture;
            if (expected.k != config.k || expected.indices.size() != points.size())
                throw DataError("fixture '" + *fixture + "' was built for n = " +
                                std::to_string(expected.indices.size()) + ", k = " + std::to_string(expected.k));
        } else {
            check_oracle_cap(points.size(), oracle_cap);
            expected = oracle::exact_knn(points, config.k);
        }
        const auto cmp = oracle::compare(result.indices, result.distances, expected, kVerifyRelTol);
        doc["verification"] = verification_json(cmp, source);
        if (!cmp.ok()) {
            err << "trueknn: verification failed: " << cmp.mismatched << " queries differ; " << cmp.first_mismatch
                << "\n";
            code = kVerifyFailed;
        }
    }
    emit(doc, out_path, out);
    return code;
}

int cmd_compare(const DatasetSpec& ds, const SearchFlags& flags, std::optional<double> percentile,
                std::size_t oracle_cap, const std::optional<std::string>& out_path, std::ostream& out,
                std::ostream& err) {
    if (percentile && !(*percentile > 0.0 && *percentile <= 100.0))
        throw InvalidArgument("--percentile must be in (0, 100]");
    const PointSet points = load_dataset(ds);
    const SearchConfig config = flags.config(points.size(), ds.seed);
    check_oracle_cap(points.size(), oracle_cap);
    CompareOutcome outcome = run_compare(points, ds.describe(), config, percentile);
    emit(outcome.report, out_path, out);
    if (!outcome.exact) {
        err << "trueknn: a search disagreed with the oracle\n";
        return kVerifyFailed;
    }
    return kOk;
}

int cmd_sweep(const std::vector<std::string>& sizes_flag, const std::vector<std::string>& datasets,
              const SearchFlags& flags, std::optional<double> percentile, std::uint64_t seed, std::size_t oracle_cap,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
    std::vector<std::size_t> sizes;
    for (const auto& entry : sizes_flag)
        for (const auto& s : split(entry, ','))
            if (!s.empty()) sizes.push_back(parse_count(s, "--sizes"));
    if (sizes.empty()) throw CLI::ValidationError("--sizes", "at least one size is required");
    if (datasets.empty()) throw CLI::ValidationError("--datasets", "at least one dataset is required");

    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    csv << "dataset,size,k,rounds,trueknn_sphere_tests,trueknn_aabb_tests,baseline_sphere_tests,"
           "baseline_aabb_tests,sphere_test_ratio,trueknn_wall_ms,baseline_wall_ms,status\n";
    json summary = {{"schema", "trueknn-sweep/1"}, {"cells", json::array()}, {"trends", json::object()}};
    bool any_failed = false;

    for (const std::string& name : datasets) {
        std::vector<double> ratios;
        for (std::size_t size : sizes) {
            DatasetSpec ds;
            ds.seed = seed;
            if (name.rfind("csv:", 0) == 0) {
                ds.csv = name.substr(4);
                ds.limit = size;
            } else {
                ds.gen = name + ":" + std::to_string(size);
            }
            const std::string cell = std::filesystem::path(name).filename().string() + "-" + std::to_string(size);
            std::string status = "ok";
            json row = {{"dataset", name}, {"size", size}};
            try {
                const PointSet points = load_dataset(ds);
                check_oracle_cap(points.size(), oracle_cap);
                const SearchConfig config = flags.config(points.size(), seed);
                CompareOutcome outcome = run_compare(points, ds.describe(), config, percentile);
                outcome.report["command"] = "sweep";
                report::write_atomic(std::filesystem::path(out_dir) / (cell + ".json"), outcome.report.dump(2) + "\n");
                if (!outcome.exact) status = "oracle-mismatch";

                const json& t = outcome.report["trueknn"]["totals"];
                const json& b = outcome.report["baseline"]["totals"];
                const double r = outcome.report["comparison"]["sphere_test_ratio"];
                ratios.push_back(r);
                row["k"] = config.k;
                row["sphere_test_ratio"] = r;
                csv << name << ',' << size << ',' << config.k << ',' << t["rounds"].get<std::size_t>() << ','
                    << t["sphere_tests"].get<std::uint64_t>() << ',' << t["aabb_tests"].get<std::uint64_t>() << ','
                    << b["sphere_tests"].get<std::uint64_t>() << ',' << b["aabb_tests"].get<std::uint64_t>() << ','
                    << r << ',' << t["wall_time_ms"].get<double>() << ',' << b["wall_time_ms"].get<double>() << ','
                    << status << '\n';
            } catch (const std::exception& e) {
                status = std::string("error: ") + e.what();
                csv << name << ',' << size << ",,,,,,,,,," << '"' << status << '"' << '\n';
            }
            if (status != "ok") {
                any_failed = true;
                err << "trueknn: sweep cell " << cell << ": " << status << "\n";
            }
            row["status"] = status;
            summary["cells"].push_back(row);
        }
        const bool non_decreasing = std::is_sorted(ratios.begin(), ratios.end());
        summary["trends"][name] = {{"sphere_test_ratios", ratios}, {"ratio_non_decreasing", non_decreasing}};
    }

    report::write_atomic(std::filesystem::path(out_dir) / "sweep.csv", csv.str());
    report::write_atomic(std::filesystem::path(out_dir) / "sweep.json", summary.dump(2) + "\n");
    out << csv.str();
    return any_failed ? kDataError : kOk;
}

int cmd_oracle(const DatasetSpec& ds, const std::string& k_flag, std::size_t oracle_cap,
               const std::optional<std::string>& out_path, std::ostream& out) {
    const PointSet points = load_dataset(ds);
    check_oracle_cap(points.size(), oracle_cap);
    const std::size_t k = resolve_k(k_flag, points.size());
    require_k(k, points.size());
    emit(report::oracle_json(points, ds.describe(), oracle::exact_knn(points, k)), out_path, out);
    return kOk;
}

}  // namespace

std::string DatasetSpec::describe() const {
    std::string s = csv ? "--csv " + *csv : (gen ? "--gen " + *gen : "");
    if (limit) s += " --limit " + std::to_string(*limit);
    s += " --seed " + std::to_string(seed);
    return s;
}

PointSet load_dataset(const DatasetSpec& spec) {
    if (spec.csv.has_value() == spec.gen.has_value())
        throw InvalidArgument("exactly one of --csv or --gen is required");
    if (spec.limit && *spec.limit == 0) throw InvalidArgument("--limit must be >= 1");

    if (spec.csv) {
        std::string path = *spec.csv;
        std::optional<CsvColumns> columns;
        const auto colon = path.rfind(':');
        if (colon != std::string::npos && path.find('/', colon) == std::string::npos &&
            !std::filesystem::exists(path)) {
            const auto cols = split(path.substr(colon + 1), ',');
            if (cols.size() < 2 || cols.size() > 3)
                throw InvalidArgument("--csv columns must be xcol,ycol[,zcol], got '" + path.substr(colon + 1) + "'");
            columns = CsvColumns{parse_column(cols[0]), parse_column(cols[1]), std::nullopt};
            if (cols.size() == 3) columns->z = parse_column(cols[2]);
            path.resize(colon);
        }
        return load_csv(path, columns, spec.limit);
    }

    const std::string& g = *spec.gen;
    const auto colon = g.find(':');
    if (colon == std::string::npos) throw InvalidArgument("--gen expects <kind>:<n>, got '" + g + "'");
    const std::string kind = g.substr(0, colon);
    const auto params = split(g.substr(colon + 1), ',');
    if (params.empty()) throw InvalidArgument("--gen is missing the point count");
    std::size_t n = parse_count(params[0], "--gen size");
    if (spec.limit) n = std::min(n, *spec.limit);

    if (kind == "uniform") {
        if (params.size() != 1) throw InvalidArgument("--gen uniform takes only a size");
        return gen_uniform(n, spec.seed);
    }
    if (kind == "clustered") {
        if (params.size() != 1 && params.size() != 4)
            throw InvalidArgument("--gen clustered:<n>[,clusters,spread,outlier_frac]");
        ClusterParams cp;
        if (params.size() == 4) {
            cp.cluster_count = parse_count(params[1], "cluster count");
            cp.cluster_spread = parse_real(params[2], "cluster spread");
            cp.outlier_fraction = parse_real(params[3], "outlier fraction");
        }
        return gen_clustered(n, cp, spec.seed);
    }
    throw InvalidArgument("unknown generator '" + kind + "' (expected uniform or clustered)");
}

std::size_t resolve_k(const std::string& k_flag, std::size_t n) {
    if (k_flag == "sqrt") {
        auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
        while (k * k > n) --k;
        while ((k + 1) * (k + 1) <= n) ++k;
        if (k == 0) throw InvalidArgument("--k sqrt needs at least one point");
        return k;
    }
    const std::size_t k = parse_count(k_flag, "--k");
    if (k == 0) throw InvalidArgument("--k must be >= 1");
    return k;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Unbounded k-nearest-neighbor search by iterative radius expansion over a BVH", "trueknn"};
    app.require_subcommand(1);

    DatasetSpec ds;
    SearchFlags flags;
    std::optional<std::string> out_path;
    std::size_t oracle_cap = 20000;
    bool verify = false;
    std::optional<std::string> fixture;
    std::optional<double> percentile;
    std::vector<std::string> sizes;
    std::vector<std::string> datasets{"uniform", "clustered"};
    std::string sweep_dir;

    auto* knn = app.add_subcommand("knn", "Run the multi-round search and write a run report");
    add_dataset_flags(*knn, ds);
    flags.attach(*knn);
    knn->add_flag("--verify", verify, "Fail (exit 3) unless the result matches the brute-force oracle");
    knn->add_option("--verify-against", fixture, "Verify against an oracle fixture written by `trueknn oracle`");
    knn->add_option("--oracle-cap", oracle_cap, "Largest n the brute-force oracle accepts");
    knn->add_option("--out", out_path, "Report path (stdout when omitted)");

    auto* compare = app.add_subcommand("compare", "Compare against a single fixed-radius pass at maxDist");
    add_dataset_flags(*compare, ds);
    flags.attach(*compare);
    compare->add_option("--percentile", percentile, "Use the pct-percentile kth distance as radius and cap");
    compare->add_option("--oracle-cap", oracle_cap, "Largest n the brute-force oracle accepts");
    compare->add_option("--out", out_path, "Report path (stdout when omitted)");

    auto* sweep = app.add_subcommand("sweep", "Run compare over a dataset x size grid");
    sweep->add_option("--sizes", sizes, "Comma-separated dataset sizes")->required()->delimiter(',');
    sweep->add_option("--datasets", datasets, "uniform, clustered, or csv:<path>")->delimiter(',');
    sweep->add_option("--k-mode", flags.k, "Neighbor count, or 'sqrt'");
    sweep->add_option("--percentile", percentile, "Percentile-bounded comparison");
    sweep->add_option("--seed", ds.seed, "Generator and sampling seed");
    sweep->add_option("--oracle-cap", oracle_cap, "Largest n the brute-force oracle accepts");
    sweep->add_option("--out", sweep_dir, "Output directory")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "Write brute-force neighbors, maxDist and p99 radius");
    add_dataset_flags(*oracle_cmd, ds);
    oracle_cmd->add_option("--k", flags.k, "Neighbor count, or 'sqrt'");
    oracle_cmd->add_option("--oracle-cap", oracle_cap, "Largest n the oracle accepts");
    oracle_cmd->add_option("--out", out_path, "Fixture path (stdout when omitted)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "trueknn: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (knn->parsed()) return cmd_knn(ds, flags, verify, fixture, oracle_cap, out_path, out, err);
        if (compare->parsed()) return cmd_compare(ds, flags, percentile, oracle_cap, out_path, out, err);
        if (sweep->parsed()) return cmd_sweep(sizes, datasets, flags, percentile, ds.seed, oracle_cap, sweep_dir, out, err);
        return cmd_oracle(ds, flags.k, oracle_cap, out_path, out);
    } catch (const CLI::ParseError& e) {
        err << "trueknn: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "trueknn: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "trueknn: " << e.what() << "\n";
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "trueknn: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace trueknn::cli
