#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compass/compass.hpp"

namespace fs = std::filesystem;
using namespace compass;

namespace {

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text;
}

struct RunFlags {
    std::string config;
    std::uint64_t seed = 42;
    std::size_t rows = 11, buckets = 1024, max_plans = 10, threshold = 100'000, frontier_cap = 3, workers = 1;
    double alpha = 0.5, beta = 0.5;
    std::string mode;
    std::vector<CLI::Option*> opts;

    void add(CLI::App* app) {
        app->add_option("--config", config, "RunConfig JSON; flags override its fields");
        opts = {app->add_option("--seed", seed, "master seed for sketch hash families"),
                app->add_option("--rows", rows, "sketch rows r (odd)"),
                app->add_option("--buckets", buckets, "buckets per row b (power of two)"),
                app->add_option("--alpha", alpha, "weight of cardinality in the source order"),
                app->add_option("--beta", beta, "weight of degree in the source order"),
                app->add_option("--max-plans", max_plans, "complete plans per source in limit mode"),
                app->add_option("--mode", mode, "greedy | full-greedy | limit-N | exhaustive"),
                app->add_option("--threshold", threshold, "materialization threshold in rows"),
                app->add_option("--frontier-cap", frontier_cap, "maximum open edges during contraction"),
                app->add_option("--workers", workers, "scan worker threads")};
    }

    bool given(std::size_t i) const { return opts[i]->count() > 0; }

    RunConfig build() const {
        RunConfig c = config.empty() ? RunConfig{} : RunConfig::from_json(read_json(config));
        if (given(0)) c.master_seed = seed;
        if (given(1)) c.sketch.rows = rows;
        if (given(2)) c.sketch.buckets = buckets;
        if (given(3)) c.enumeration.alpha = alpha;
        if (given(4)) c.enumeration.beta = beta;
        if (given(6)) c.enumeration.set_mode(mode);
        if (given(5)) {
            if (!given(6)) c.enumeration.mode = EnumerationMode::Limit;
            c.enumeration.max_plans = max_plans;
        }
        if (given(7)) c.materialize_threshold = threshold;
        if (given(8)) c.frontier_cap = frontier_cap;
        if (given(9)) c.workers = workers;
        c.validate();
        return c;
    }
};

int cmd_ingest(const std::string& catalog_dir, const std::vector<std::string>& files, const std::string& schema_path,
               const std::string& name, const std::string& delimiter, bool no_header, const std::string& null_token) {
    if (!schema_path.empty() && files.size() != 1) throw InvalidInput("--schema applies to exactly one CSV file");
    if (!name.empty() && files.size() != 1) throw InvalidInput("--name applies to exactly one CSV file");
    if (delimiter.size() != 1) throw InvalidInput("delimiter must be a single character");
    CsvOptions opts;
    opts.delimiter = delimiter[0];
    opts.header = !no_header;
    opts.null_token = null_token;
    Catalog catalog(catalog_dir);
    std::vector<Table> loaded;
    for (const auto& f : files) {
        const fs::path csv(f);
        const fs::path sp = schema_path.empty() ? csv.parent_path() / (csv.stem().string() + ".schema.json")
                                                : fs::path(schema_path);
        const auto sj = read_json(sp.string());
        std::string table = name;
        if (table.empty()) table = sj.value("name", csv.stem().string());
        loaded.push_back(load_csv(csv, table, Schema::from_json(sj), opts));
    }
    for (const auto& t : loaded) {
        catalog.store(t);
        std::cout << "ingested " << t.name() << ": " << t.row_count() << " rows\n";
    }
    return 0;
}

int cmd_status(const std::string& catalog_dir) {
    Catalog catalog(catalog_dir);
    const auto names = catalog.list();
    std::cout << names.size() << " table(s) in " << catalog_dir << "\n";
    for (const auto& n : names) {
        const auto t = catalog.load(n);
        std::cout << "  " << n << "  rows=" << t.row_count() << "  columns=";
        for (std::size_t i = 0; i < t.schema().columns.size(); ++i)
            std::cout << (i ? "," : "") << t.schema().columns[i].name << ':' << to_string(t.schema().columns[i].type);
        std::cout << "\n";
    }
    return 0;
}

int cmd_optimize(RunConfig cfg, const std::string& catalog_dir, const std::string& query, const std::string& out) {
    cfg.catalog_dir = catalog_dir;
    cfg.query_path = query;
    cfg.out_path = out;
    const auto spec = QuerySpec::from_json(read_json(query));
    const auto tables = load_query_tables(Catalog(catalog_dir), spec);
    const auto rep = run_optimize(spec, tables, cfg);
    write_text(out, rep.to_json().dump(2) + "\n");
    if (!out.empty() && out != "-") {
        std::cout << "plan:";
        for (const auto& a : rep.order) std::cout << ' ' << a;
        std::cout << "\ncost: " << rep.plan.cost << "\nscan_ms: " << rep.scan_ms
                  << "\nenumerate_ms: " << rep.enumerate_ms << "\n";
    }
    return 0;
}

int cmd_bench(RunConfig cfg, const std::string& catalog_dir, const std::vector<std::string>& queries,
              std::size_t max_size, const std::string& out, const std::string& csv) {
    cfg.catalog_dir = catalog_dir;
    cfg.bench_max_size = max_size;
    cfg.out_path = out;
    cfg.validate();
    Catalog catalog(catalog_dir);
    std::vector<BenchQuery> qs;
    for (const auto& q : queries) {
        BenchQuery b;
        b.name = fs::path(q).stem().string();
        b.spec = QuerySpec::from_json(read_json(q));
        b.tables = load_query_tables(catalog, b.spec);
        qs.push_back(std::move(b));
    }
    const auto res = run_bench(qs, cfg);
    for (const auto& [q, why] : res.skipped) std::cerr << "skipped " << q << ": " << why << "\n";
    write_text(out, res.to_json().dump(2) + "\n");
    if (!csv.empty()) {
        std::ofstream c(csv, std::ios::binary);
        if (!c) throw InvalidInput("cannot write " + csv);
        res.write_csv(c);
    }
    return 0;
}

int cmd_gen(const std::string& catalog_dir, const std::string& query_out, const std::string& kind,
            std::uint64_t seed, const SynthQueryOptions& opts, double scale) {
    SynthQuery q;
    if (kind == "movie") q = movie_query(seed, scale);
    else if (kind == "random") q = random_query(opts, seed);
    else throw InvalidInput("unknown generator '" + kind + "' (expected movie or random)");
    Catalog catalog(catalog_dir);
    for (const auto& [n, t] : q.tables) catalog.store(t);
    write_text(query_out, q.spec.to_json().dump(2) + "\n");
    std::cerr << "generated " << q.tables.size() << " table(s) in " << catalog_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compass: sketch-based join order optimizer"};
    app.require_subcommand(1);

    std::string catalog_dir, query, out, csv, schema, name, delimiter = ",", null_token, kind = "random";
    std::vector<std::string> files, queries;
    bool no_header = false;
    std::size_t max_size = 5;
    double scale = 1.0;
    std::uint64_t gen_seed = 42;
    SynthQueryOptions synth;

    auto* ingest = app.add_subcommand("ingest", "load CSV files into a catalog directory");
    ingest->add_option("--catalog", catalog_dir, "catalog directory")->required();
    ingest->add_option("files", files, "CSV files; each needs <stem>.schema.json beside it")->required();
    ingest->add_option("--schema", schema, "schema JSON for a single CSV file");
    ingest->add_option("--name", name, "table name for a single CSV file");
    ingest->add_option("--delimiter", delimiter, "field delimiter");
    ingest->add_flag("--no-header", no_header, "the CSV has no header line");
    ingest->add_option("--null-token", null_token, "text that denotes NULL (default: empty field)");

    auto* status = app.add_subcommand("status", "list the tables of a catalog");
    status->add_option("--catalog", catalog_dir, "catalog directory")->required();

    RunFlags opt_flags, bench_flags;
    auto* optimize = app.add_subcommand("optimize", "choose a join order for a query");
    optimize->add_option("--catalog", catalog_dir, "catalog directory")->required();
    optimize->add_option("--query", query, "query spec JSON")->required();
    optimize->add_option("--out", out, "plan report path (default: stdout)");
    opt_flags.add(optimize);

    auto* bench = app.add_subcommand("bench", "compare sketch estimates with exact counts");
    bench->add_option("--catalog", catalog_dir, "catalog directory")->required();
    bench->add_option("--query", queries, "query spec JSON (repeatable)")->required();
    bench->add_option("--max-size", max_size, "largest sub-plan size to evaluate");
    bench->add_option("--out", out, "JSON report path (default: stdout)");
    bench->add_option("--csv", csv, "per-sub-plan CSV path");
    bench_flags.add(bench);

    auto* gen = app.add_subcommand("gen", "write a synthetic dataset and query");
    gen->add_option("--catalog", catalog_dir, "catalog directory")->required();
    gen->add_option("--query-out", query, "query spec output path (default: stdout)");
    gen->add_option("--kind", kind, "movie | random");
    gen->add_option("--seed", gen_seed, "data seed");
    gen->add_option("--tables", synth.tables, "tables (random)");
    gen->add_option("--table-rows", synth.rows, "rows per table (random)");
    gen->add_option("--domain", synth.domain, "join key domain (random)");
    gen->add_option("--skew", synth.skew, "zipf exponent (random)");
    gen->add_option("--extra-edges", synth.extra_edges, "edges beyond a spanning tree (random)");
    gen->add_option("--max-degree", synth.max_degree, "largest vertex degree (random)");
    gen->add_flag("--predicates", synth.predicates, "add a selection to every table (random)");
    gen->add_option("--scale", scale, "size multiplier (movie)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*ingest) return cmd_ingest(catalog_dir, files, schema, name, delimiter, no_header, null_token);
        if (*status) return cmd_status(catalog_dir);
        if (*optimize) return cmd_optimize(opt_flags.build(), catalog_dir, query, out);
        if (*bench) return cmd_bench(bench_flags.build(), catalog_dir, queries, max_size, out, csv);
        if (*gen) return cmd_gen(catalog_dir, query, kind, gen_seed, synth, scale);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const EstimationFailure& e) {
        std::cerr << "estimation failed: " << e.what() << "\n";
        return 2;
    } catch (const GuardExceeded& e) {
        std::cerr << "guard exceeded: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
