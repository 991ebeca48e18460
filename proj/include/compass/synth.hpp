#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compass/catalog.hpp"
#include "compass/error.hpp"
#include "compass/query_spec.hpp"

namespace compass {

/// `n` draws from {0, ..., domain-1} with P(k) proportional to 1 / (k+1)^skew.
inline std::vector<std::int64_t> zipf_keys(std::size_t n, std::size_t domain, double skew, std::mt19937_64& rng) {
    if (domain == 0) throw InvalidInput("zipf domain must be non-empty");
    std::vector<double> w(domain);
    for (std::size_t k = 0; k < domain; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), skew);
    std::discrete_distribution<std::int64_t> dist(w.begin(), w.end());
    std::vector<std::int64_t> out(n);
    for (auto& x : out) x = dist(rng);
    return out;
}

inline Column int_column(const std::vector<std::int64_t>& values) {
    Column c{ColumnType::Int64, {}, {}, {}};
    c.reserve(values.size());
    for (auto v : values) c.push(v);
    return c;
}

inline Column text_column(const std::vector<std::string>& values) {
    Column c{ColumnType::Text, {}, {}, {}};
    c.reserve(values.size());
    for (const auto& v : values) c.push(v);
    return c;
}

/// Table of int64 columns given as (name, values) pairs.
inline Table make_int_table(std::string name, const std::vector<std::pair<std::string, std::vector<std::int64_t>>>& cols) {
    Schema s;
    std::vector<Column> data;
    for (const auto& [n, v] : cols) {
        s.columns.push_back({n, ColumnType::Int64, false});
        data.push_back(int_column(v));
    }
    return Table::from_columns(std::move(name), std::move(s), std::move(data));
}

/// A query together with the base tables it reads, keyed by table name.
struct SynthQuery {
    std::map<std::string, Table> tables;
    QuerySpec spec;
};

struct SynthQueryOptions {
    std::size_t tables = 5;
    std::size_t rows = 1000;
    std::size_t domain = 100;
    double skew = 1.1;
    std::size_t extra_edges = 0;  ///< edges added on top of a random spanning tree
    std::size_t max_degree = 3;
    bool predicates = false;      ///< add a "val < x" selection to every table
};

/// Random connected query. Table i is named and aliased "t<i>"; it has an
/// "id" column, a uniform "val" column in [0, 100) and one zipf-distributed
/// join column "j<e>" per incident edge e.
inline SynthQuery random_query(const SynthQueryOptions& opt, std::uint64_t seed) {
    if (opt.tables == 0 || opt.tables > 64) throw InvalidInput("synthetic queries need 1 to 64 tables");
    if (opt.max_degree == 0 && opt.tables > 1) throw InvalidInput("max_degree must be positive");
    std::mt19937_64 rng(seed);
    const std::size_t n = opt.tables;
    std::vector<std::size_t> degree(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    auto adjacent = [&](std::size_t a, std::size_t b) {
        for (const auto& [x, y] : edges)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    for (std::size_t i = 1; i < n; ++i) {
        std::vector<std::size_t> open;
        for (std::size_t j = 0; j < i; ++j)
            if (degree[j] < opt.max_degree) open.push_back(j);
        if (open.empty())
            for (std::size_t j = 0; j < i; ++j) open.push_back(j);
        const auto p = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
        edges.emplace_back(p, i);
        ++degree[p];
        ++degree[i];
    }
    for (std::size_t added = 0, tries = 0; added < opt.extra_edges && tries < 100 * (opt.extra_edges + 1); ++tries) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        const auto a = pick(rng), b = pick(rng);
        if (a == b || adjacent(a, b) || degree[a] >= opt.max_degree || degree[b] >= opt.max_degree) continue;
        edges.emplace_back(std::min(a, b), std::max(a, b));
        ++degree[a];
        ++degree[b];
        ++added;
    }

    SynthQuery q;
    std::vector<std::vector<std::pair<std::string, std::vector<std::int64_t>>>> cols(n);
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::int64_t> id(opt.rows), val(opt.rows);
        std::uniform_int_distribution<std::int64_t> u(0, 99);
        for (std::size_t r = 0; r < opt.rows; ++r) {
            id[r] = static_cast<std::int64_t>(r);
            val[r] = u(rng);
        }
        cols[v].emplace_back("id", std::move(id));
        cols[v].emplace_back("val", std::move(val));
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        const std::string col = "j" + std::to_string(e);
        cols[a].emplace_back(col, zipf_keys(opt.rows, opt.domain, opt.skew, rng));
        cols[b].emplace_back(col, zipf_keys(opt.rows, opt.domain, opt.skew, rng));
        q.spec.joins.push_back({"e" + std::to_string(e), {"t" + std::to_string(a), col}, {"t" + std::to_string(b), col}});
    }
    for (std::size_t v = 0; v < n; ++v) {
        const std::string name = "t" + std::to_string(v);
        q.tables.emplace(name, make_int_table(name, cols[v]));
        PredicatePtr pred;
        if (opt.predicates) {
            const auto x = std::uniform_int_distribution<std::int64_t>(30, 100)(rng);
            pred = Predicate::from_json({{"lt", {{"column", "val"}, {"value", x}}}});
        }
        q.spec.tables.push_back({name, name, pred});
    }
    q.spec.validate();
    return q;
}

/// Five tables shaped like an actor/keyword movie query: title t,
/// movie_keyword mk, keyword k, cast_info ci and name n, with the triangle
/// t-mk-ci on movie ids. `scale` multiplies every table size.
inline SynthQuery movie_query(std::uint64_t seed, double scale = 1.0) {
    if (!(scale > 0)) throw InvalidInput("scale must be positive");
    std::mt19937_64 rng(seed);
    auto sz = [&](double base) { return std::max<std::size_t>(1, static_cast<std::size_t>(base * scale)); };
    const std::size_t n_title = sz(2000), n_kw = sz(500), n_name = sz(3000), n_mk = sz(8000), n_ci = sz(10000);

    SynthQuery q;
    {
        std::vector<std::int64_t> id(n_title), year(n_title);
        std::uniform_int_distribution<std::int64_t> y(1950, 2020);
        for (std::size_t i = 0; i < n_title; ++i) {
            id[i] = static_cast<std::int64_t>(i);
            year[i] = y(rng);
        }
        q.tables.emplace("title", make_int_table("title", {{"id", id}, {"production_year", year}}));
    }
    {
        Schema s{{{"id", ColumnType::Int64, false}, {"keyword", ColumnType::Text, false}}};
        std::vector<std::int64_t> id(n_kw);
        std::vector<std::string> kw(n_kw);
        for (std::size_t i = 0; i < n_kw; ++i) {
            id[i] = static_cast<std::int64_t>(i);
            kw[i] = (i % 50 == 7 ? "marvel-" : "keyword-") + std::to_string(i);
        }
        q.tables.emplace("keyword", Table::from_columns("keyword", s, {int_column(id), text_column(kw)}));
    }
    {
        Schema s{{{"id", ColumnType::Int64, false}, {"name", ColumnType::Text, false}}};
        std::vector<std::int64_t> id(n_name);
        std::vector<std::string> nm(n_name);
        for (std::size_t i = 0; i < n_name; ++i) {
            id[i] = static_cast<std::int64_t>(i);
            nm[i] = i % 100 == 3 ? "Downey Robert " + std::to_string(i) : "Person " + std::to_string(i);
        }
        q.tables.emplace("name", Table::from_columns("name", s, {int_column(id), text_column(nm)}));
    }
    q.tables.emplace("movie_keyword", make_int_table("movie_keyword", {{"movie_id", zipf_keys(n_mk, n_title, 1.1, rng)},
                                                                       {"keyword_id", zipf_keys(n_mk, n_kw, 1.1, rng)}}));
    q.tables.emplace("cast_info", make_int_table("cast_info", {{"movie_id", zipf_keys(n_ci, n_title, 1.1, rng)},
                                                               {"person_id", zipf_keys(n_ci, n_name, 1.1, rng)}}));

    q.spec = QuerySpec::from_json(nlohmann::json::parse(R"({
      "tables": [
        {"name": "keyword", "alias": "k", "predicate": {"like": {"column": "keyword", "pattern": "%marvel%"}}},
        {"name": "name", "alias": "n", "predicate": {"like": {"column": "name", "pattern": "%Downey%Robert%"}}},
        {"name": "title", "alias": "t", "predicate": {"gt": {"column": "production_year", "value": 2010}}},
        {"name": "movie_keyword", "alias": "mk"},
        {"name": "cast_info", "alias": "ci"}
      ],
      "joins": [
        {"id": "e1", "left": "t.id", "right": "mk.movie_id"},
        {"id": "e2", "left": "mk.keyword_id", "right": "k.id"},
        {"id": "e3", "left": "t.id", "right": "ci.movie_id"},
        {"id": "e4", "left": "ci.movie_id", "right": "mk.movie_id"},
        {"id": "e5", "left": "ci.person_id", "right": "n.id"}
      ]})"));
    return q;
}

} // namespace compass
