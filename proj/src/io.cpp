#include "minpen/io.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace minpen {

std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<Cell>>& rows) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw input_error("csv row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            if (const auto* d = std::get_if<double>(&row[i])) out << format_full(*d);
            else if (const auto* l = std::get_if<long>(&row[i])) out << *l;
            else out << quote_if_needed(std::get<std::string>(row[i]));
        }
        out << "\n";
    }
    if (!out) throw input_error("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? ""
                                                    : field.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

DataCsv read_data_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw input_error(path.string() + ": empty file");
    ++line_no;
    const auto header = split_line(line);
    if (header.size() < 2)
        throw input_error(path.string() + " line 1: need at least one feature column and a response column");
    double probe;
    bool all_numeric = true;
    for (const auto& h : header)
        if (!parse_double(h, probe)) all_numeric = false;
    if (all_numeric)
        throw input_error(path.string() + " line 1: missing header row (found numeric data)");

    const std::size_t width = header.size();
    std::vector<std::vector<double>> data;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_line(line);
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << path.string() << " line " << line_no << ": expected " << width
                << " columns, found " << fields.size();
            throw input_error(msg.str());
        }
        std::vector<double> row(width);
        for (std::size_t i = 0; i < width; ++i) {
            if (!parse_double(fields[i], row[i])) {
                std::ostringstream msg;
                msg << path.string() << " line " << line_no << ": '" << fields[i]
                    << "' is not a number";
                throw input_error(msg.str());
            }
        }
        data.push_back(std::move(row));
    }
    if (data.empty()) throw input_error(path.string() + ": no data rows");

    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(width - 1);
    Matrix pts(n, d);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) pts(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        y(i) = data[static_cast<std::size_t>(i)][width - 1];
    }
    return DataCsv{PointSet(std::move(pts)), std::move(y)};
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    std::string line;
    long line_no = 0;
    std::vector<std::vector<double>> data;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_line(line);
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!parse_double(fields[i], row[i])) {
                std::ostringstream msg;
                msg << path.string() << " line " << line_no << ": '" << fields[i]
                    << "' is not a number";
                throw input_error(msg.str());
            }
        }
        if (!data.empty() && row.size() != data.front().size()) {
            std::ostringstream msg;
            msg << path.string() << " line " << line_no << ": ragged row";
            throw input_error(msg.str());
        }
        data.push_back(std::move(row));
    }
    if (data.empty()) throw input_error(path.string() + ": no data rows");
    Matrix out(data.size(), data.front().size());
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.front().size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    return out;
}

nlohmann::json calibration_to_json(const CalibrationResult& result) {
    nlohmann::json j;
    j["sigma2_hat"] = result.sigma2_hat;
    j["rule_used"] = variance_rule_name(result.rule_used);
    j["jump_size"] = result.jump_size;
    j["selected_lambda_index"] = result.selected_lambda;
    j["df_selected"] = result.df_selected;
    j["degenerate_data"] = result.degenerate_data;
    nlohmann::json jumps = nlohmann::json::array();
    for (const auto& cand : result.local_jumps)
        jumps.push_back({{"C", cand.c}, {"df_drop", cand.drop}});
    j["local_jumps"] = jumps;
    j["path_points"] = result.path.size();
    return j;
}

void write_path_csv(const std::filesystem::path& path, const MinPenPath& pen_path,
                    std::optional<double> sigma2_known) {
    std::vector<std::string> header{"C"};
    if (sigma2_known) header.push_back("log10_C_over_sigma2");
    header.push_back("lambda_index");
    header.push_back("df");
    std::vector<std::vector<Cell>> rows;
    rows.reserve(pen_path.size());
    for (const auto& pt : pen_path) {
        std::vector<Cell> row;
        row.emplace_back(pt.c);
        if (sigma2_known) row.emplace_back(std::log10(pt.c / *sigma2_known));
        row.emplace_back(static_cast<long>(pt.lambda_id));
        row.emplace_back(pt.df);
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

}  // namespace minpen
