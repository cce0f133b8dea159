#include "airquant/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "airquant/error.hpp"

namespace airquant {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_field(const std::string& s, const char* what) {
    if (s.empty())
        throw SchemaError(std::string("csv: empty ") + what);
    if (s.find(',') != std::string::npos ||
        s.find('\n') != std::string::npos || s.find('\r') != std::string::npos)
        throw SchemaError(std::string("csv: ") + what +
                          " '" + s + "' contains a delimiter");
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw SchemaError("csv: malformed number '" + s + "' in " + where);
    return v;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_feature_csv(const std::string& path, const FeatureTable& table) {
    table.validate();
    check_field("case_id", "header");
    for (const auto& n : table.feature_names) check_field(n, "feature name");
    for (const auto& id : table.case_ids) check_field(id, "case id");
    if (table.labels)
        for (const auto& n : table.feature_names)
            if (n == "label")
                throw SchemaError(
                    "csv: feature name 'label' collides with the label "
                    "column");

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "case_id";
    for (const auto& n : table.feature_names) f << ',' << n;
    if (table.labels) f << ",label";
    f << '\n';
    for (std::size_t r = 0; r < table.n_cases(); ++r) {
        f << table.case_ids[r];
        for (double v : table.values[r]) f << ',' << format_double(v);
        if (table.labels) f << ',' << (*table.labels)[r];
        f << '\n';
    }
    if (!f) throw IoError("failed writing '" + path + "'");
}

FeatureTable read_feature_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line))
        throw SchemaError("csv: '" + path + "' has no header");
    std::vector<std::string> header = split_line(line);
    if (header.empty() || header[0] != "case_id")
        throw SchemaError("csv: '" + path + "' must start with a case_id column");
    const bool has_label = header.size() > 1 && header.back() == "label";
    FeatureTable table;
    table.feature_names.assign(header.begin() + 1,
                               header.end() - (has_label ? 1 : 0));
    if (has_label) table.labels.emplace();
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw SchemaError("csv: '" + path + "' line " +
                              std::to_string(lineno) +
                              " has the wrong column count");
        table.case_ids.push_back(cells[0]);
        std::vector<double> row;
        row.reserve(table.feature_names.size());
        for (std::size_t c = 1; c <= table.feature_names.size(); ++c)
            row.push_back(parse_double(
                cells[c], path + " line " + std::to_string(lineno)));
        table.values.push_back(std::move(row));
        if (has_label) {
            const std::string& cell = cells.back();
            if (cell != "0" && cell != "1")
                throw SchemaError("csv: '" + path + "' line " +
                                  std::to_string(lineno) +
                                  " has a non-binary label");
            table.labels->push_back(cell == "1" ? 1 : 0);
        }
    }
    table.validate();
    return table;
}

void write_labels_csv(const std::string& path,
                      const std::vector<std::string>& case_ids,
                      const std::vector<int>& labels) {
    if (case_ids.size() != labels.size())
        throw SchemaError("labels csv: id/label count mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "case_id,label\n";
    for (std::size_t i = 0; i < case_ids.size(); ++i) {
        check_field(case_ids[i], "case id");
        if (labels[i] != 0 && labels[i] != 1)
            throw SchemaError("labels csv: labels must be 0 or 1");
        f << case_ids[i] << ',' << labels[i] << '\n';
    }
    if (!f) throw IoError("failed writing '" + path + "'");
}

std::vector<std::pair<std::string, int>> read_labels_csv(
    const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(f, line) ||
        split_line(line) != std::vector<std::string>{"case_id", "label"})
        throw SchemaError("labels csv: '" + path +
                          "' must have the header 'case_id,label'");
    std::vector<std::pair<std::string, int>> out;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != 2 || (cells[1] != "0" && cells[1] != "1"))
            throw SchemaError("labels csv: '" + path + "' line " +
                              std::to_string(lineno) + " is malformed");
        out.emplace_back(cells[0], cells[1] == "1" ? 1 : 0);
    }
    return out;
}

void join_labels(FeatureTable& table,
                 const std::vector<std::pair<std::string, int>>& labels) {
    std::map<std::string, int> by_id(labels.begin(), labels.end());
    if (by_id.size() != labels.size())
        throw SchemaError("labels: duplicate case ids");
    std::vector<int> joined;
    joined.reserve(table.n_cases());
    for (const auto& id : table.case_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw AlignmentError("labels: no label for case '" + id + "'");
        joined.push_back(it->second);
    }
    table.labels = std::move(joined);
    table.validate();
}

}  // namespace airquant
