#include "sparseclust/io.hpp"

#include "sparseclust/errors.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sparseclust::io {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view s, std::size_t line_no) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw PreconditionError("data file line " + std::to_string(line_no) + ": cannot parse number '" +
                                std::string(s) + "'");
    return v;
}

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw PreconditionError(std::string("JSON: missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("JSON: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Matrix& points, const std::vector<int>* labels) {
    if (labels && labels->size() != static_cast<std::size_t>(points.rows()))
        throw PreconditionError("write_csv: label count differs from row count");
    std::string line;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        if (j) line += ',';
        line += 'x' + std::to_string(j);
    }
    if (labels) line += ",label";
    out << line << '\n';
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (j) line += ',';
            line += format_double(points(i, j));
        }
        if (labels) line += ',' + std::to_string((*labels)[static_cast<std::size_t>(i)]);
        out << line << '\n';
    }
}

CsvData read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw PreconditionError("data file: empty input");
    const auto header = split(trim(line));
    std::size_t d = header.size();
    bool has_labels = false;
    if (d > 0 && trim(header.back()) == "label") {
        has_labels = true;
        --d;
    }
    if (d == 0) throw PreconditionError("data file: header names no data columns");
    for (std::size_t j = 0; j < d; ++j)
        if (trim(header[j]) != "x" + std::to_string(j))
            throw PreconditionError("data file: header column " + std::to_string(j) + " must be 'x" +
                                    std::to_string(j) + "'");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t rows = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto fields = split(t);
        if (fields.size() != header.size())
            throw PreconditionError("data file line " + std::to_string(line_no) + ": expected " +
                                    std::to_string(header.size()) + " fields");
        for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(fields[j], line_no));
        if (has_labels) {
            const double lab = parse_double(fields[d], line_no);
            if (lab != 1.0 && lab != 2.0)
                throw PreconditionError("data file line " + std::to_string(line_no) + ": label must be 1 or 2");
            labels.push_back(static_cast<int>(lab));
        }
        ++rows;
    }
    if (rows == 0) throw PreconditionError("data file: no samples");
    CsvData out;
    out.data.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    if (has_labels) out.labels = std::move(labels);
    out.data.validate();
    return out;
}

Json vector_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

Json matrix_json(const Matrix& m) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(vector_json(m.row(i).transpose()));
    return j;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw PreconditionError("JSON: expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw PreconditionError("JSON: expected an array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw PreconditionError("JSON: expected a non-empty array of rows");
    const Vector first = vector_from_json(j[0]);
    Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = vector_from_json(j[i]);
        if (row.size() != first.size()) throw PreconditionError("JSON: ragged matrix");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

Json to_json(const GmmParams& params) {
    Json j;
    j["mu1"] = vector_json(params.mu1());
    j["mu2"] = vector_json(params.mu2());
    j["sigma"] = matrix_json(params.sigma());
    return j;
}

GmmParams params_from_json(const Json& j) {
    if (!j.is_object()) throw PreconditionError("parameters: expected a JSON object");
    const Vector mu1 = vector_from_json(required<Json>(j, "mu1"));
    const Vector mu2 = vector_from_json(required<Json>(j, "mu2"));
    const Matrix sigma = matrix_from_json(required<Json>(j, "sigma"));
    return GmmParams(mu1, mu2, sigma);
}

Json to_json(const GmmEstimate& e) {
    Json j;
    j["n"] = e.n;
    j["d"] = e.mu1_hat.size();
    j["seed"] = e.seed;
    j["eps"] = e.eps;
    j["delta"] = e.delta;
    j["eps_star"] = e.eps_star;
    j["delta_star"] = e.delta_star;
    j["vhat"] = e.vhat;
    j["gap_threshold"] = e.gap_threshold;
    j["alignment_tolerance"] = e.alignment_tolerance;
    j["anchor"] = e.anchor ? Json(*e.anchor) : Json(nullptr);
    j["mu1_hat"] = vector_json(e.mu1_hat);
    j["mu2_hat"] = vector_json(e.mu2_hat);
    j["sigma_hat"] = matrix_json(e.sigma_hat);
    j["xi1"] = vector_json(e.xi1);
    j["xi2"] = vector_json(e.xi2);
    Json align = Json::array();
    for (const auto& r : e.alignment) {
        Json a;
        a["other"] = r.other;
        a["nu_anchor"] = r.nu_anchor;
        a["nu_other"] = r.nu_other;
        a["distances"] = r.distances;
        a["chosen"] = r.chosen;
        align.push_back(std::move(a));
    }
    j["alignment"] = std::move(align);
    j["counters"] = {{"univariate", e.counters.univariate},
                     {"bivariate_alignment", e.counters.bivariate_alignment},
                     {"bivariate_covariance", e.counters.bivariate_covariance}};
    return j;
}

GmmEstimate estimate_from_json(const Json& j) {
    GmmEstimate e;
    e.mu1_hat = vector_from_json(required<Json>(j, "mu1_hat"));
    e.mu2_hat = vector_from_json(required<Json>(j, "mu2_hat"));
    e.sigma_hat = matrix_from_json(required<Json>(j, "sigma_hat"));
    const auto d = e.mu1_hat.size();
    if (e.mu2_hat.size() != d || e.sigma_hat.rows() != d || e.sigma_hat.cols() != d)
        throw PreconditionError("estimate: inconsistent dimensions");
    e.n = required<std::size_t>(j, "n");
    e.seed = j.value("seed", std::uint64_t{0});
    e.eps = required<double>(j, "eps");
    e.delta = required<double>(j, "delta");
    e.eps_star = j.value("eps_star", e.eps / 20.0);
    e.delta_star = j.value("delta_star", 0.0);
    e.vhat = j.value("vhat", 0.0);
    e.gap_threshold = j.value("gap_threshold", 0.0);
    e.alignment_tolerance = j.value("alignment_tolerance", 0.0);
    if (j.contains("anchor") && !j["anchor"].is_null()) e.anchor = j["anchor"].get<std::size_t>();
    if (j.contains("xi1")) e.xi1 = vector_from_json(j["xi1"]);
    if (j.contains("xi2")) e.xi2 = vector_from_json(j["xi2"]);
    if (j.contains("alignment"))
        for (const auto& a : j["alignment"]) {
            AlignmentRecord r;
            r.other = a.at("other").get<std::size_t>();
            r.nu_anchor = a.at("nu_anchor").get<std::array<double, 2>>();
            r.nu_other = a.at("nu_other").get<std::array<double, 2>>();
            r.distances = a.at("distances").get<std::array<double, 2>>();
            r.chosen = a.at("chosen").get<int>();
            e.alignment.push_back(r);
        }
    if (j.contains("counters")) {
        const auto& c = j["counters"];
        e.counters.univariate = c.value("univariate", 0);
        e.counters.bivariate_alignment = c.value("bivariate_alignment", 0);
        e.counters.bivariate_covariance = c.value("bivariate_covariance", 0);
    }
    return e;
}

Json to_json(const DantzigSolution& s) {
    Json j;
    j["status"] = to_string(s.status);
    j["lambda"] = s.lambda;
    j["l1_norm"] = s.l1_norm;
    j["max_residual"] = s.max_residual;
    j["iterations"] = s.iterations;
    j["certificate_residual"] = s.certificate_residual;
    j["beta_hat"] = vector_json(s.beta_hat);
    return j;
}

DantzigSolution dantzig_from_json(const Json& j) {
    DantzigSolution s;
    const auto status = required<std::string>(j, "status");
    if (status == "optimal")
        s.status = DantzigStatus::optimal;
    else if (status == "infeasible")
        s.status = DantzigStatus::infeasible;
    else
        throw PreconditionError("discriminant: unknown status '" + status + "'");
    s.lambda = required<double>(j, "lambda");
    s.beta_hat = vector_from_json(required<Json>(j, "beta_hat"));
    s.l1_norm = j.value("l1_norm", s.beta_hat.lpNorm<1>());
    s.max_residual = j.value("max_residual", 0.0);
    s.iterations = j.value("iterations", 0);
    s.certificate_residual = j.value("certificate_residual", 0.0);
    return s;
}

Json to_json(const FeatureSet& f) { return Json(f.indices()); }

FeatureSet features_from_json(const Json& j, std::size_t dim) {
    if (!j.is_array()) throw PreconditionError("features: expected an array of indices");
    try {
        return FeatureSet(j.get<std::vector<std::size_t>>(), dim);
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("features: ") + e.what());
    }
}

Json to_json(const BoundReport& r) {
    Json j;
    j["rho"] = r.rho;
    j["beta_l1"] = r.beta_l1;
    j["eps1"] = r.eps1;
    j["eps2"] = r.eps2;
    j["bound"] = r.bound;
    j["conditions_met"] = r.conditions_met;
    j["equal_means"] = r.equal_means;
    return j;
}

Json to_json(const ParameterError& e) {
    Json j;
    j["mean_sq_linf"] = e.mean_sq_linf;
    j["cov_linf"] = e.cov_linf;
    j["combined"] = e.combined();
    j["swapped"] = e.swapped;
    return j;
}

std::string read_text(const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open '" + path + "' for reading");
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PreconditionError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw PreconditionError("write to '" + path + "' failed");
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw PreconditionError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

CsvData read_csv_file(const std::string& path) {
    std::istringstream in(read_text(path));
    return read_csv(in);
}

void write_csv_file(const std::string& path, const Matrix& points, const std::vector<int>* labels) {
    std::ostringstream out;
    write_csv(out, points, labels);
    write_text(path, out.str());
}

}  // namespace sparseclust::io
