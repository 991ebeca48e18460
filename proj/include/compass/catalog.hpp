#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compass/error.hpp"

namespace compass {

enum class ColumnType { Int64, Text };

inline std::string to_string(ColumnType t) { return t == ColumnType::Int64 ? "int64" : "text"; }

inline ColumnType column_type_from(std::string_view s) {
    if (s == "int64" || s == "int" || s == "integer") return ColumnType::Int64;
    if (s == "text" || s == "string") return ColumnType::Text;
    throw InvalidInput("unknown column type '" + std::string(s) + "'");
}

struct ColumnSpec {
    std::string name;
    ColumnType type = ColumnType::Int64;
    bool nullable = false;
};

struct Schema {
    std::vector<ColumnSpec> columns;

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }

    void validate() const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            for (std::size_t j = i + 1; j < columns.size(); ++j)
                if (columns[i].name == columns[j].name)
                    throw InvalidInput("duplicate column name '" + columns[i].name + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json cols = nlohmann::json::array();
        for (const auto& c : columns)
            cols.push_back({{"name", c.name}, {"type", to_string(c.type)}, {"nullable", c.nullable}});
        return {{"columns", cols}};
    }

    static Schema from_json(const nlohmann::json& j) {
        Schema s;
        try {
            for (const auto& c : j.at("columns"))
                s.columns.push_back({c.at("name").get<std::string>(),
                                     column_type_from(c.at("type").get<std::string>()),
                                     c.value("nullable", false)});
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(std::string("malformed schema: ") + e.what());
        }
        s.validate();
        return s;
    }
};

/// One typed column with a null mask; only the vector matching `type` is used.
struct Column {
    ColumnType type = ColumnType::Int64;
    std::vector<std::int64_t> ints;
    std::vector<std::string> texts;
    std::vector<std::uint8_t> nulls;

    std::size_t size() const { return nulls.size(); }
    bool is_null(std::size_t i) const { return nulls[i] != 0; }

    void push_null() {
        if (type == ColumnType::Int64) ints.push_back(0); else texts.emplace_back();
        nulls.push_back(1);
    }
    void push(std::int64_t v) { ints.push_back(v); nulls.push_back(0); }
    void push(std::string v) { texts.push_back(std::move(v)); nulls.push_back(0); }

    void reserve(std::size_t n) {
        if (type == ColumnType::Int64) ints.reserve(n); else texts.reserve(n);
        nulls.reserve(n);
    }
};

class Table {
public:
    Table() = default;

    Table(std::string name, Schema schema) : name_(std::move(name)), schema_(std::move(schema)) {
        schema_.validate();
        for (const auto& c : schema_.columns) columns_.push_back(Column{c.type, {}, {}, {}});
    }

    static Table from_columns(std::string name, Schema schema, std::vector<Column> columns) {
        Table t(std::move(name), std::move(schema));
        if (columns.size() != t.schema_.columns.size())
            throw InvalidInput("column count does not match schema of " + t.name_);
        t.columns_ = std::move(columns);
        t.seal();
        return t;
    }

    /// Checks that every column has the same length and fixes row_count.
    void seal() {
        row_count_ = columns_.empty() ? 0 : columns_.front().size();
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            const auto& c = columns_[i];
            if (c.type != schema_.columns[i].type)
                throw InvalidInput("column " + schema_.columns[i].name + " has the wrong type");
            const std::size_t payload = c.type == ColumnType::Int64 ? c.ints.size() : c.texts.size();
            if (c.size() != row_count_ || payload != row_count_)
                throw InvalidInput("ragged columns in table " + name_);
        }
    }

    const std::string& name() const { return name_; }
    const Schema& schema() const { return schema_; }
    std::size_t row_count() const { return row_count_; }
    const Column& column(std::size_t i) const { return columns_[i]; }
    Column& mutable_column(std::size_t i) { return columns_[i]; }
    const std::vector<Column>& columns() const { return columns_; }

    const Column& column(std::string_view name) const {
        auto i = schema_.index_of(name);
        if (!i) throw InvalidInput("table " + name_ + " has no column '" + std::string(name) + "'");
        return columns_[*i];
    }

    friend bool operator==(const Table& a, const Table& b) {
        if (a.name_ != b.name_ || a.row_count_ != b.row_count_ ||
            a.schema_.columns.size() != b.schema_.columns.size())
            return false;
        for (std::size_t i = 0; i < a.columns_.size(); ++i) {
            const auto& x = a.columns_[i];
            const auto& y = b.columns_[i];
            if (x.type != y.type || x.nulls != y.nulls) return false;
            for (std::size_t r = 0; r < x.size(); ++r) {
                if (x.is_null(r)) continue;
                if (x.type == ColumnType::Int64 ? x.ints[r] != y.ints[r] : x.texts[r] != y.texts[r])
                    return false;
            }
        }
        return true;
    }

private:
    std::string name_;
    Schema schema_;
    std::vector<Column> columns_;
    std::size_t row_count_ = 0;
};

inline std::size_t table_cardinality(const Table& t) { return t.row_count(); }

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
    std::string null_token;  ///< unquoted field equal to this is NULL in nullable columns
};

namespace detail {

struct CsvField {
    std::string text;
    bool quoted = false;
};

/// Splits CSV text into records; quoted fields may contain delimiters,
/// doubled quotes and newlines.
class CsvReader {
public:
    CsvReader(std::istream& in, char delim) : in_(in), delim_(delim) {}

    /// Returns false at end of input. `line` is the 1-based line of the record start.
    bool next(std::vector<CsvField>& record, std::size_t& line) {
        record.clear();
        int c = in_.peek();
        if (c == EOF) return false;
        line = line_;
        CsvField field;
        bool in_quotes = false;
        while (true) {
            c = in_.get();
            if (c == EOF) {
                if (in_quotes) throw InvalidInput("line " + std::to_string(line) + ": unterminated quote");
                record.push_back(std::move(field));
                return true;
            }
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        field.text.push_back('"');
                        in_.get();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.text.push_back(static_cast<char>(c));
                }
                continue;
            }
            if (c == '"' && field.text.empty() && !field.quoted) {
                in_quotes = true;
                field.quoted = true;
            } else if (c == delim_) {
                record.push_back(std::move(field));
                field = CsvField{};
            } else if (c == '\n' || c == '\r') {
                if (c == '\r' && in_.peek() == '\n') in_.get();
                ++line_;
                record.push_back(std::move(field));
                return true;
            } else {
                field.text.push_back(static_cast<char>(c));
            }
        }
    }

private:
    std::istream& in_;
    char delim_;
    std::size_t line_ = 1;
};

inline std::optional<std::int64_t> parse_int64(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::string quote_csv(const std::string& s, char delim) {
    bool needs = s.empty() || s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

/// Parses CSV into a typed table. All row errors are collected and reported
/// together, each with its line number.
inline Table read_csv(std::istream& in, std::string name, const Schema& schema,
                      const CsvOptions& options = {}) {
    Table table(std::move(name), schema);
    detail::CsvReader reader(in, options.delimiter);
    std::vector<detail::CsvField> rec;
    std::size_t line = 0;
    const std::size_t ncols = schema.columns.size();
    std::vector<std::size_t> mapping(ncols);
    for (std::size_t i = 0; i < ncols; ++i) mapping[i] = i;

    if (options.header) {
        if (!reader.next(rec, line)) {
            table.seal();
            return table;
        }
        if (rec.size() != ncols)
            throw InvalidInput("header has " + std::to_string(rec.size()) + " fields, schema has " +
                               std::to_string(ncols));
        for (std::size_t f = 0; f < ncols; ++f) {
            auto idx = schema.index_of(rec[f].text);
            if (!idx) throw InvalidInput("header column '" + rec[f].text + "' is not in the schema");
            mapping[*idx] = f;
        }
    }

    std::vector<std::string> errors;
    auto report = [&](std::size_t at, const std::string& msg) {
        if (errors.size() < 20) errors.push_back("line " + std::to_string(at) + ": " + msg);
        else if (errors.size() == 20) errors.emplace_back("...");
    };
    while (reader.next(rec, line)) {
        if (rec.size() == 1 && rec[0].text.empty() && !rec[0].quoted) continue;  // blank line
        if (rec.size() != ncols) {
            report(line, "expected " + std::to_string(ncols) + " fields, found " + std::to_string(rec.size()));
            continue;
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto& spec = schema.columns[c];
            const auto& field = rec[mapping[c]];
            auto& col = table.mutable_column(c);
            const bool is_null_token = !field.quoted && field.text == options.null_token;
            if (is_null_token && spec.nullable) {
                col.push_null();
            } else if (spec.type == ColumnType::Text) {
                col.push(field.text);
            } else if (auto v = detail::parse_int64(field.text)) {
                col.push(*v);
            } else {
                report(line, "column " + spec.name + ": '" + field.text + "' is not an int64");
                col.push_null();
            }
        }
    }
    if (!errors.empty()) {
        std::string msg = "CSV parse failed for table " + table.name() + ":";
        for (const auto& e : errors) msg += "\n  " + e;
        throw InvalidInput(msg);
    }
    table.seal();
    return table;
}

inline Table load_csv(const std::filesystem::path& path, std::string name, const Schema& schema,
                      const CsvOptions& options = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_csv(in, std::move(name), schema, options);
}

inline void write_csv(std::ostream& out, const Table& table, const CsvOptions& options = {}) {
    const auto& cols = table.schema().columns;
    if (options.header) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << options.delimiter;
            out << detail::quote_csv(cols[c].name, options.delimiter);
        }
        out << '\n';
    }
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << options.delimiter;
            const auto& col = table.column(c);
            if (col.is_null(r)) out << options.null_token;
            else if (col.type == ColumnType::Int64) out << col.ints[r];
            else out << detail::quote_csv(col.texts[r], options.delimiter);
        }
        out << '\n';
    }
}

/// Directory of validated tables: <name>.csv plus <name>.schema.json.
class Catalog {
public:
    explicit Catalog(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const { return dir_; }

    void store(const Table& table) const {
        std::filesystem::create_directories(dir_);
        {
            std::ofstream s(schema_path(table.name()));
            nlohmann::json j = table.schema().to_json();
            j["name"] = table.name();
            s << j.dump(2) << '\n';
        }
        std::ofstream out(csv_path(table.name()), std::ios::binary);
        if (!out) throw InvalidInput("cannot write " + csv_path(table.name()).string());
        write_csv(out, table);
    }

    Table load(const std::string& name) const {
        std::ifstream s(schema_path(name));
        if (!s) throw InvalidInput("table '" + name + "' is not in catalog " + dir_.string());
        nlohmann::json j;
        try {
            s >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("corrupt schema for " + name + ": " + e.what());
        }
        return load_csv(csv_path(name), name, Schema::from_json(j));
    }

    std::vector<std::string> list() const {
        std::vector<std::string> names;
        if (!std::filesystem::exists(dir_)) return names;
        const std::string suffix = ".schema.json";
        for (const auto& e : std::filesystem::directory_iterator(dir_)) {
            auto f = e.path().filename().string();
            if (f.size() > suffix.size() && f.ends_with(suffix))
                names.push_back(f.substr(0, f.size() - suffix.size()));
        }
        std::sort(names.begin(), names.end());
        return names;
    }

private:
    std::filesystem::path schema_path(const std::string& n) const { return dir_ / (n + ".schema.json"); }
    std::filesystem::path csv_path(const std::string& n) const { return dir_ / (n + ".csv"); }

    std::filesystem::path dir_;
};

} // namespace compass
