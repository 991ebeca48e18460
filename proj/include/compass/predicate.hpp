#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "compass/catalog.hpp"
#include "compass/error.hpp"

namespace compass {

/// SQL LIKE restricted to '%' (zero or more characters). Literal segments must
/// appear in order; the ends are anchored unless the pattern starts/ends with '%'.
inline bool like_match(std::string_view pattern, std::string_view text) {
    std::vector<std::string_view> segs;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= pattern.size(); ++i)
        if (i == pattern.size() || pattern[i] == '%') {
            segs.push_back(pattern.substr(start, i - start));
            start = i + 1;
        }
    if (segs.size() == 1) return pattern == text;

    const auto& first = segs.front();
    const auto& last = segs.back();
    if (text.size() < first.size() + last.size()) return false;
    if (text.substr(0, first.size()) != first) return false;
    if (text.substr(text.size() - last.size()) != last) return false;

    std::size_t pos = first.size();
    const std::size_t end = text.size() - last.size();
    for (std::size_t i = 1; i + 1 < segs.size(); ++i) {
        if (segs[i].empty()) continue;
        auto found = text.substr(0, end).find(segs[i], pos);
        if (found == std::string_view::npos) return false;
        pos = found + segs[i].size();
    }
    return true;
}

using Literal = std::variant<std::int64_t, std::string>;

struct Predicate;
using PredicatePtr = std::shared_ptr<const Predicate>;

/// Selection predicate tree: point, range, subset and LIKE leaves combined
/// with AND/OR/NOT. Evaluation follows SQL three-valued logic; only rows that
/// evaluate to TRUE qualify.
struct Predicate {
    struct Eq { std::string column; Literal value; };
    struct Range {
        std::string column;
        std::optional<Literal> low, high;
        bool low_inclusive = true, high_inclusive = true;
    };
    struct InSet { std::string column; std::vector<Literal> values; };
    struct Like { std::string column; std::string pattern; };
    struct And { std::vector<PredicatePtr> children; };
    struct Or { std::vector<PredicatePtr> children; };
    struct Not { PredicatePtr child; };

    std::variant<Eq, Range, InSet, Like, And, Or, Not> node;

    static PredicatePtr from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

namespace detail {

inline Literal literal_from(const nlohmann::json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_string()) return j.get<std::string>();
    throw InvalidInput("predicate literal must be an integer or a string: " + j.dump());
}

inline nlohmann::json literal_json(const Literal& l) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, l);
}

template <typename... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <typename... Ts> overloaded(Ts...) -> overloaded<Ts...>;

} // namespace detail

inline PredicatePtr Predicate::from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.size() != 1)
        throw InvalidInput("predicate must be an object with exactly one operator: " + j.dump());
    const auto& [op, arg] = *j.items().begin();
    auto p = std::make_shared<Predicate>();
    try {
        if (op == "eq") {
            p->node = Eq{arg.at("column").get<std::string>(), detail::literal_from(arg.at("value"))};
        } else if (op == "range") {
            Range r{arg.at("column").get<std::string>(), {}, {}, true, true};
            if (arg.contains("low")) r.low = detail::literal_from(arg["low"]);
            if (arg.contains("high")) r.high = detail::literal_from(arg["high"]);
            r.low_inclusive = arg.value("low_inclusive", true);
            r.high_inclusive = arg.value("high_inclusive", true);
            p->node = std::move(r);
        } else if (op == "gt" || op == "ge" || op == "lt" || op == "le") {
            Range r{arg.at("column").get<std::string>(), {}, {}, true, true};
            auto v = detail::literal_from(arg.at("value"));
            if (op[0] == 'g') { r.low = v; r.low_inclusive = op == "ge"; }
            else { r.high = v; r.high_inclusive = op == "le"; }
            p->node = std::move(r);
        } else if (op == "in") {
            InSet s{arg.at("column").get<std::string>(), {}};
            for (const auto& v : arg.at("values")) s.values.push_back(detail::literal_from(v));
            p->node = std::move(s);
        } else if (op == "like") {
            p->node = Like{arg.at("column").get<std::string>(), arg.at("pattern").get<std::string>()};
        } else if (op == "and" || op == "or") {
            std::vector<PredicatePtr> kids;
            for (const auto& c : arg) kids.push_back(from_json(c));
            if (kids.empty()) throw InvalidInput("'" + op + "' needs at least one operand");
            if (op == "and") p->node = And{std::move(kids)}; else p->node = Or{std::move(kids)};
        } else if (op == "not") {
            p->node = Not{from_json(arg)};
        } else {
            throw InvalidInput("unknown predicate operator '" + op + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed '" + op + "' predicate: " + e.what());
    }
    return p;
}

inline nlohmann::json Predicate::to_json() const {
    using nlohmann::json;
    return std::visit(
        detail::overloaded{
            [](const Eq& e) { return json{{"eq", {{"column", e.column}, {"value", detail::literal_json(e.value)}}}}; },
            [](const Range& r) {
                json a{{"column", r.column}, {"low_inclusive", r.low_inclusive}, {"high_inclusive", r.high_inclusive}};
                if (r.low) a["low"] = detail::literal_json(*r.low);
                if (r.high) a["high"] = detail::literal_json(*r.high);
                return json{{"range", a}};
            },
            [](const InSet& s) {
                json vals = json::array();
                for (const auto& v : s.values) vals.push_back(detail::literal_json(v));
                return json{{"in", {{"column", s.column}, {"values", vals}}}};
            },
            [](const Like& l) { return json{{"like", {{"column", l.column}, {"pattern", l.pattern}}}}; },
            [](const And& a) {
                json kids = json::array();
                for (const auto& c : a.children) kids.push_back(c->to_json());
                return json{{"and", kids}};
            },
            [](const Or& o) {
                json kids = json::array();
                for (const auto& c : o.children) kids.push_back(c->to_json());
                return json{{"or", kids}};
            },
            [](const Not& n) { return json{{"not", n.child->to_json()}}; },
        },
        node);
}

enum class Truth { False, True, Unknown };

/// A predicate resolved against one table's schema: column lookups and
/// literal type checks happen once, evaluation is per row.
class BoundPredicate {
public:
    BoundPredicate(const Predicate& p, const Table& table) : table_(&table) { root_ = bind(p); }

    Truth evaluate(std::size_t row) const { return eval(root_, row); }
    bool matches(std::size_t row) const { return evaluate(row) == Truth::True; }

private:
    enum class Op { Eq, Range, InSet, Like, And, Or, Not };
    struct Node {
        Op op = Op::Eq;
        std::size_t column = 0;
        ColumnType type = ColumnType::Int64;
        std::vector<Literal> values;  // Eq: [v]; InSet: set; Range: [low, high]
        bool has_low = false, has_high = false, low_inc = true, high_inc = true;
        std::string pattern;
        std::vector<std::size_t> kids;
    };

    std::size_t add(Node n) {
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    std::size_t column_of(const std::string& name) const {
        auto i = table_->schema().index_of(name);
        if (!i) throw InvalidInput("predicate references unknown column '" + name + "' of " + table_->name());
        return *i;
    }

    void check_type(std::size_t col, const Literal& v) const {
        const auto& spec = table_->schema().columns[col];
        const bool is_int = std::holds_alternative<std::int64_t>(v);
        if (is_int != (spec.type == ColumnType::Int64))
            throw InvalidInput("predicate literal type does not match column " + spec.name + " (" +
                               to_string(spec.type) + ")");
    }

    std::size_t bind(const Predicate& p) {
        return std::visit(
            detail::overloaded{
                [&](const Predicate::Eq& e) {
                    Node n;
                    n.op = Op::Eq;
                    n.column = column_of(e.column);
                    check_type(n.column, e.value);
                    n.values = {e.value};
                    return add(std::move(n));
                },
                [&](const Predicate::Range& r) {
                    Node n;
                    n.op = Op::Range;
                    n.column = column_of(r.column);
                    n.values.resize(2);
                    if (r.low) { check_type(n.column, *r.low); n.values[0] = *r.low; n.has_low = true; }
                    if (r.high) { check_type(n.column, *r.high); n.values[1] = *r.high; n.has_high = true; }
                    n.low_inc = r.low_inclusive;
                    n.high_inc = r.high_inclusive;
                    return add(std::move(n));
                },
                [&](const Predicate::InSet& s) {
                    Node n;
                    n.op = Op::InSet;
                    n.column = column_of(s.column);
                    for (const auto& v : s.values) check_type(n.column, v);
                    n.values = s.values;
                    return add(std::move(n));
                },
                [&](const Predicate::Like& l) {
                    Node n;
                    n.op = Op::Like;
                    n.column = column_of(l.column);
                    if (table_->schema().columns[n.column].type != ColumnType::Text)
                        throw InvalidInput("LIKE on non-text column " + l.column);
                    n.pattern = l.pattern;
                    return add(std::move(n));
                },
                [&](const Predicate::And& a) {
                    std::vector<std::size_t> kids;
                    for (const auto& c : a.children) kids.push_back(bind(*c));
                    Node n;
                    n.op = Op::And;
                    n.kids = std::move(kids);
                    return add(std::move(n));
                },
                [&](const Predicate::Or& o) {
                    std::vector<std::size_t> kids;
                    for (const auto& c : o.children) kids.push_back(bind(*c));
                    Node n;
                    n.op = Op::Or;
                    n.kids = std::move(kids);
                    return add(std::move(n));
                },
                [&](const Predicate::Not& x) {
                    std::size_t k = bind(*x.child);
                    Node n;
                    n.op = Op::Not;
                    n.kids = {k};
                    return add(std::move(n));
                },
            },
            p.node);
    }

    // -1, 0, +1 comparison of the cell against a literal of matching type.
    int compare(const Column& col, std::size_t row, const Literal& v) const {
        if (col.type == ColumnType::Int64) {
            const auto a = col.ints[row];
            const auto b = std::get<std::int64_t>(v);
            return (a > b) - (a < b);
        }
        const int c = col.texts[row].compare(std::get<std::string>(v));
        return (c > 0) - (c < 0);
    }

    Truth eval(std::size_t id, std::size_t row) const {
        const Node& n = nodes_[id];
        switch (n.op) {
        case Op::And: {
            Truth t = Truth::True;
            for (auto k : n.kids) {
                const Truth c = eval(k, row);
                if (c == Truth::False) return Truth::False;
                if (c == Truth::Unknown) t = Truth::Unknown;
            }
            return t;
        }
        case Op::Or: {
            Truth t = Truth::False;
            for (auto k : n.kids) {
                const Truth c = eval(k, row);
                if (c == Truth::True) return Truth::True;
                if (c == Truth::Unknown) t = Truth::Unknown;
            }
            return t;
        }
        case Op::Not: {
            const Truth c = eval(n.kids[0], row);
            return c == Truth::Unknown ? c : (c == Truth::True ? Truth::False : Truth::True);
        }
        default: break;
        }
        const Column& col = table_->column(n.column);
        if (col.is_null(row)) return Truth::Unknown;
        bool ok = false;
        switch (n.op) {
        case Op::Eq: ok = compare(col, row, n.values[0]) == 0; break;
        case Op::Range: {
            ok = true;
            if (n.has_low) {
                const int c = compare(col, row, n.values[0]);
                ok = n.low_inc ? c >= 0 : c > 0;
            }
            if (ok && n.has_high) {
                const int c = compare(col, row, n.values[1]);
                ok = n.high_inc ? c <= 0 : c < 0;
            }
            break;
        }
        case Op::InSet:
            for (const auto& v : n.values)
                if (compare(col, row, v) == 0) { ok = true; break; }
            break;
        case Op::Like: ok = like_match(n.pattern, col.texts[row]); break;
        default: break;
        }
        return ok ? Truth::True : Truth::False;
    }

    const Table* table_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

} // namespace compass
