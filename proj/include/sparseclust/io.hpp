#pragma once

// File formats.
//
// Data: comma-separated text. The header names the columns x0, ..., x{d-1}
// and, when labels are present, a final `label` column holding 1 or 2.
// One sample per row. Numbers are written in shortest round-trip form.
//
// Parameters, estimates, discriminant solutions, feature sets and reports
// are JSON objects with a fixed key order; see README.md for the schemas.

#include "json.hpp"

#include "sparseclust/discriminant.hpp"
#include "sparseclust/highdim_fit.hpp"
#include "sparseclust/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sparseclust::io {

using Json = nlohmann::ordered_json;

struct CsvData {
    Dataset data;
    std::optional<std::vector<int>> labels;
};

void write_csv(std::ostream& out, const Matrix& points, const std::vector<int>* labels = nullptr);
CsvData read_csv(std::istream& in);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

Json vector_json(const Vector& v);
Json matrix_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

Json to_json(const GmmParams& params);
GmmParams params_from_json(const Json& j);

Json to_json(const GmmEstimate& estimate);
GmmEstimate estimate_from_json(const Json& j);

Json to_json(const DantzigSolution& solution);
DantzigSolution dantzig_from_json(const Json& j);

Json to_json(const FeatureSet& features);
FeatureSet features_from_json(const Json& j, std::size_t dim);

Json to_json(const BoundReport& report);
Json to_json(const ParameterError& error);

/// "-" means standard input / output. Failures raise PreconditionError.
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);
CsvData read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const Matrix& points, const std::vector<int>* labels = nullptr);

}  // namespace sparseclust::io
