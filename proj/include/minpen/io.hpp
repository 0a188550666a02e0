#pragma once

#include "minpen/calibration.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <variant>

namespace minpen {

/// Shortest representation that round-trips a double (17 significant digits).
std::string format_full(double v);

using Cell = std::variant<double, long, std::string>;

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<Cell>>& rows);

struct DataCsv {
    PointSet pts;  // feature columns
    Vector y;      // last column
};

/// One header row, then d feature columns plus one response column per line.
/// Errors cite 1-based line numbers.
DataCsv read_data_csv(const std::filesystem::path& path);

/// Plain numeric grid (used for precomputed kernel matrices); no header.
Matrix read_matrix_csv(const std::filesystem::path& path);

nlohmann::json calibration_to_json(const CalibrationResult& result);

/// path.csv rows: C, [log10(C/sigma2) when known,] lambda_index, df.
void write_path_csv(const std::filesystem::path& path, const MinPenPath& pen_path,
                    std::optional<double> sigma2_known);

}  // namespace minpen
