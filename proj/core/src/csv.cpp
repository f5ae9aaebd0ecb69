#include "replaygan/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace replaygan {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n") != std::string::npos;
}

std::string quote_field(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_number(const std::string& s, const std::string& rec, const std::string& var) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("record " + rec + ": malformed numeric value '" + s + "' for " + var);
    return v;
}

}  // namespace

void write_cohort_csv(std::ostream& os, const Cohort& cohort, const VariableSchema& schema) {
    os << "patient_id,timepoint";
    for (const auto& v : schema.variables) os << "," << quote_field(v.name);
    os << "\n";
    for (const auto& rec : cohort.records) {
        for (std::int64_t t = 0; t < rec.length(); ++t) {
            os << quote_field(rec.patient_id) << "," << t;
            const auto& row = rec.rows[static_cast<std::size_t>(t)];
            for (std::int64_t v = 0; v < schema.var_count(); ++v) {
                const auto& spec = schema.variables[static_cast<std::size_t>(v)];
                os << ",";
                if (spec.is_numeric()) {
                    os << format_double(row[static_cast<std::size_t>(v)]);
                } else {
                    const auto idx = static_cast<std::size_t>(row[static_cast<std::size_t>(v)]);
                    os << quote_field(spec.levels.at(idx));
                }
            }
            os << "\n";
        }
    }
}

void write_cohort_csv_file(const std::string& path, const Cohort& cohort, const VariableSchema& schema) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_cohort_csv(f, cohort, schema);
}

Cohort read_cohort_csv(std::istream& is, const VariableSchema& schema) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() != static_cast<std::size_t>(schema.var_count()) + 2 || header[0] != "patient_id" ||
        header[1] != "timepoint")
        throw std::invalid_argument("CSV header does not match schema layout");
    for (std::int64_t v = 0; v < schema.var_count(); ++v) {
        if (header[static_cast<std::size_t>(v) + 2] != schema.variables[static_cast<std::size_t>(v)].name)
            throw std::invalid_argument("CSV header column '" + header[static_cast<std::size_t>(v) + 2] +
                                        "' does not match schema variable '" +
                                        schema.variables[static_cast<std::size_t>(v)].name + "'");
    }

    Cohort cohort;
    PatientRecord* cur = nullptr;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(header.size()));
        const std::string& pid = fields[0];
        if (!cur || cur->patient_id != pid) {
            cohort.records.push_back(PatientRecord{pid, {}});
            cur = &cohort.records.back();
        }
        std::vector<double> row(static_cast<std::size_t>(schema.var_count()));
        for (std::int64_t v = 0; v < schema.var_count(); ++v) {
            const auto& spec = schema.variables[static_cast<std::size_t>(v)];
            const std::string& cell = fields[static_cast<std::size_t>(v) + 2];
            if (spec.is_numeric()) {
                row[static_cast<std::size_t>(v)] = parse_number(cell, pid, spec.name);
            } else {
                auto idx = spec.level_index(cell);
                if (!idx)
                    throw std::invalid_argument("record " + pid + ": unknown level '" + cell + "' for variable " +
                                                spec.name);
                row[static_cast<std::size_t>(v)] = static_cast<double>(*idx);
            }
        }
        cur->rows.push_back(std::move(row));
    }
    return cohort;
}

Cohort read_cohort_csv_file(const std::string& path, const VariableSchema& schema) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return read_cohort_csv(f, schema);
}

}  // namespace replaygan
