#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "compass/error.hpp"
#include "compass/fast_agms.hpp"

namespace compass {

/// Binary layout, all integers little-endian:
///   "CFAS" u32 version=1 u64 rows u64 buckets u64 tuple_count
///   u64 edge_id_length, edge_id bytes
///   rows x (2 hash coefficients, 4 xi coefficients) as u64
///   rows x buckets counters as i64, row-major
inline constexpr std::uint32_t kSketchFormatVersion = 1;

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw InvalidInput("truncated sketch payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void write_sketch(std::ostream& out, const FastAgmsSketch& sk) {
    out.write("CFAS", 4);
    const std::uint32_t ver = kSketchFormatVersion;
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((ver >> (8 * i)) & 0xff));
    detail::put_u64(out, sk.rows());
    detail::put_u64(out, sk.buckets());
    detail::put_u64(out, sk.tuple_count());
    detail::put_u64(out, sk.edge_id().size());
    out.write(sk.edge_id().data(), static_cast<std::streamsize>(sk.edge_id().size()));
    for (const auto& s : sk.seeds()) {
        for (auto c : s.hash.coefficients) detail::put_u64(out, c);
        for (auto c : s.xi.coefficients) detail::put_u64(out, c);
    }
    for (auto c : sk.counters()) detail::put_u64(out, static_cast<std::uint64_t>(c));
}

inline FastAgmsSketch read_sketch(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "CFAS") throw InvalidInput("not a sketch payload");
    unsigned char vb[4];
    if (!in.read(reinterpret_cast<char*>(vb), 4)) throw InvalidInput("truncated sketch payload");
    const std::uint32_t ver = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (static_cast<std::uint32_t>(vb[3]) << 24);
    if (ver != kSketchFormatVersion) throw InvalidInput("unsupported sketch format version " + std::to_string(ver));
    SketchConfig cfg;
    cfg.rows = detail::get_u64(in);
    cfg.buckets = detail::get_u64(in);
    cfg.validate();
    const std::uint64_t tuples = detail::get_u64(in);
    const std::uint64_t len = detail::get_u64(in);
    if (len > (1u << 20)) throw InvalidInput("edge id too long");
    std::string edge(len, '\0');
    if (!in.read(edge.data(), static_cast<std::streamsize>(len))) throw InvalidInput("truncated sketch payload");
    std::vector<RowSeeds> seeds(cfg.rows);
    for (auto& s : seeds) {
        for (auto& c : s.hash.coefficients) c = detail::get_u64(in);
        for (auto& c : s.xi.coefficients) c = detail::get_u64(in);
    }
    std::vector<std::int64_t> counters(cfg.counters());
    for (auto& c : counters) c = static_cast<std::int64_t>(detail::get_u64(in));
    return FastAgmsSketch::from_parts(cfg, std::move(edge), std::move(seeds), std::move(counters), tuples);
}

/// Human-readable dump; seeds are written as decimal strings.
inline nlohmann::json sketch_to_json(const FastAgmsSketch& sk) {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : sk.seeds()) {
        nlohmann::json h = nlohmann::json::array(), x = nlohmann::json::array();
        for (auto c : s.hash.coefficients) h.push_back(std::to_string(c));
        for (auto c : s.xi.coefficients) x.push_back(std::to_string(c));
        seeds.push_back({{"hash", h}, {"xi", x}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < sk.rows(); ++r) {
        auto row = sk.row(r);
        rows.push_back(std::vector<std::int64_t>(row.begin(), row.end()));
    }
    return {{"format", "compass-fast-agms"},
            {"version", kSketchFormatVersion},
            {"edge_id", sk.edge_id()},
            {"rows", sk.rows()},
            {"buckets", sk.buckets()},
            {"tuple_count", sk.tuple_count()},
            {"seeds", seeds},
            {"counters", rows}};
}

inline FastAgmsSketch sketch_from_json(const nlohmann::json& j) {
    try {
        SketchConfig cfg;
        cfg.rows = j.at("rows").get<std::size_t>();
        cfg.buckets = j.at("buckets").get<std::size_t>();
        cfg.validate();
        std::vector<RowSeeds> seeds;
        for (const auto& s : j.at("seeds")) {
            RowSeeds rs;
            for (std::size_t i = 0; i < rs.hash.coefficients.size(); ++i)
                rs.hash.coefficients[i] = std::stoull(s.at("hash").at(i).get<std::string>());
            for (std::size_t i = 0; i < rs.xi.coefficients.size(); ++i)
                rs.xi.coefficients[i] = std::stoull(s.at("xi").at(i).get<std::string>());
            seeds.push_back(rs);
        }
        std::vector<std::int64_t> counters;
        for (const auto& row : j.at("counters"))
            for (const auto& c : row) counters.push_back(c.get<std::int64_t>());
        return FastAgmsSketch::from_parts(cfg, j.at("edge_id").get<std::string>(), std::move(seeds),
                                          std::move(counters), j.at("tuple_count").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("bad sketch JSON: ") + e.what());
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const InvalidInput*>(&e)) throw;
        throw InvalidInput(std::string("bad sketch JSON: ") + e.what());
    }
}

} // namespace compass
