#include "fgvi/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fgvi::io {

using nlohmann::json;

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << contents;
}

namespace {

std::string json_number(double x) { return std::isfinite(x) ? format_double(x) : "null"; }

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

std::string json_array(const VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += json_number(v(i));
  }
  return s + ']';
}

std::string json_matrix(const MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ',';
    s += json_array(m.row(i).transpose());
  }
  return s + ']';
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double number_of(const json& j, const char* what) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw Error(ErrorCode::Parse, std::string(what) + " must be a number");
  return j.get<double>();
}

VectorXd vector_of(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, std::string(what) + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_of(j[i], what);
  return v;
}

MatrixXd matrix_of(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::Parse, std::string(what) + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const VectorXd r = vector_of(j[static_cast<std::size_t>(i)], what);
    if (r.size() != cols) throw Error(ErrorCode::Parse, std::string(what) + " rows differ in length");
    m.row(i) = r.transpose();
  }
  return m;
}

}  // namespace

std::string to_json(const GaussianTargetd& p) {
  return "{\"mean\":" + json_array(p.mean()) + ",\"cov\":" + json_matrix(p.cov().entries()) + "}";
}

GaussianTargetd gaussian_target_from_json(std::string_view text) {
  const json j = parse_json(text);
  MatrixXd cov = matrix_of(field(j, "cov"), "cov");
  if (cov.rows() != cov.cols()) throw Error(ErrorCode::NotSquare, "cov is not square");
  VectorXd mean = j.contains("mean") ? vector_of(j.at("mean"), "mean") : VectorXd::Zero(cov.rows());
  return GaussianTargetd(mean, SpdMatrixd(cov));
}

std::string to_json(const FactorizedGaussiand& q) {
  return "{\"mean\":" + json_array(q.mean()) + ",\"var\":" + json_array(q.var()) + "}";
}

FactorizedGaussiand factorized_gaussian_from_json(std::string_view text) {
  const json j = parse_json(text);
  return FactorizedGaussiand(vector_of(field(j, "mean"), "mean"), vector_of(field(j, "var"), "var"));
}

std::string to_json(const SolveReport<double>& r, std::string_view config_json) {
  std::string s = "{\"spec\":{\"name\":" + json_string(r.spec.name());
  if (r.spec.alpha) s += ",\"alpha\":" + format_double(*r.spec.alpha);
  s += "},\"mean\":" + json_array(r.mean);
  s += ",\"psi\":" + json_array(r.psi);
  s += ",\"collapsed\":[";
  for (std::size_t k = 0; k < r.collapsed_coords.size(); ++k) {
    const auto& c = r.collapsed_coords[k];
    if (k) s += ',';
    s += fmt::format("{{\"i\":{},\"mode\":\"{}\"}}", c.index,
                     c.mode == CollapseMode::ZeroVariance ? "zero" : "inf");
  }
  s += "],\"residual\":" + json_number(r.stationarity_residual);
  s += fmt::format(",\"iterations\":{}", r.iterations);
  if (!config_json.empty()) s += ",\"config\":" + std::string(config_json);
  return s + "}";
}

SolveReport<double> solve_report_from_json(std::string_view text) {
  const json j = parse_json(text);
  const json& spec = field(j, "spec");
  std::optional<double> alpha;
  if (spec.contains("alpha")) alpha = number_of(spec.at("alpha"), "alpha");
  const json& name = field(spec, "name");
  if (!name.is_string()) throw Error(ErrorCode::Parse, "spec.name must be a string");

  SolveReport<double> r;
  r.spec = DivergenceSpec::parse(name.get<std::string>(), alpha);
  r.psi = vector_of(field(j, "psi"), "psi");
  r.mean = j.contains("mean") ? vector_of(j.at("mean"), "mean") : VectorXd::Zero(r.psi.size());
  r.stationarity_residual = number_of(field(j, "residual"), "residual");
  r.iterations = field(j, "iterations").get<std::size_t>();
  for (const auto& c : field(j, "collapsed")) {
    const auto mode = field(c, "mode").get<std::string>();
    if (mode != "zero" && mode != "inf") throw Error(ErrorCode::Parse, "collapse mode must be zero or inf");
    r.collapsed_coords.push_back({field(c, "i").get<Eigen::Index>(),
                                  mode == "zero" ? CollapseMode::ZeroVariance : CollapseMode::InfiniteVariance});
  }
  return r;
}

std::string to_json(const TradeoffReport<double>& r) {
  return fmt::format(
      "{{\"case\":\"{}\",\"gen_var_gap\":{},\"precision_gaps\":{},\"variance_gaps\":{},"
      "\"passed\":{},\"violated_clause\":{}}}",
      to_string(r.tradeoff_case), json_number(r.gen_var_gap), json_array(r.precision_gaps),
      json_array(r.variance_gaps), r.passed ? "true" : "false", json_string(r.violated_clause));
}

std::string target_metadata_json(const BlackBoxTarget& t) {
  const std::string provenance = t.reference_moments ? t.reference_moments->provenance : "";
  return fmt::format("{{\"name\":{},\"dim\":{},\"moment_provenance\":{}}}", json_string(t.name), t.dim,
                     json_string(provenance));
}

// CSV

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] == name) return k;
  }
  throw Error(ErrorCode::Parse, "no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const std::string& s = text(row, name);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(ErrorCode::Parse, "not a number: '" + s + "'");
  return x;
}

const std::string& CsvTable::text(std::size_t row, std::string_view name) const {
  return rows.at(row).at(column(name));
}

CsvWriter::CsvWriter(std::ostream& out, std::string_view config_json,
                     const std::vector<std::string>& columns)
    : out_(out), n_columns_(columns.size()) {
  out_ << "# config: " << config_json << '\n';
  for (std::size_t k = 0; k < columns.size(); ++k) out_ << (k ? "," : "") << columns[k];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(double x) {
  // fmt prints non-finite values as inf / -inf / nan, which parse_csv reads back.
  return cell(std::string_view(format_double(x)));
}

CsvWriter& CsvWriter::cell(long long x) { return cell(std::string_view(std::to_string(x))); }

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (s.find_first_of(",\n\"") != std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "CSV cells may not contain commas, quotes or newlines");
  }
  out_ << (in_row_ ? "," : "") << s;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != n_columns_) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("row has {} cells, header has {}", in_row_, n_columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c.front() == ' ') c.erase(0, 1);
      t.comments.push_back(std::move(c));
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      t.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw Error(ErrorCode::Parse, fmt::format("row {} has {} cells, header has {}", t.rows.size() + 1,
                                                cells.size(), t.columns.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw Error(ErrorCode::Parse, "CSV has no header row");
  return t;
}

CsvTable parse_csv(std::string_view text) {
  std::istringstream ss{std::string(text)};
  return parse_csv(ss);
}

void write_bam_trace(std::ostream& out, const BamResult& result, std::string_view config_json) {
  CsvWriter w(out, config_json, {"iter", "coord", "nu", "psi", "divergence_proxy"});
  for (const auto& row : result.trace) {
    for (Eigen::Index i = 0; i < row.nu.size(); ++i) {
      w.cell(static_cast<long long>(row.iter)).cell(static_cast<long long>(i));
      w.cell(row.nu(i)).cell(row.psi(i)).cell(row.divergence_proxy);
      w.end_row();
    }
  }
}

void write_ordering_csv(std::ostream& out, const OrderingReport<double>& r, std::string_view target_id,
                        std::string_view config_json) {
  CsvWriter w(out, config_json, {"target", "divergence", "alpha", "coord", "psi"});
  for (const auto& rep : r.reports) {
    for (Eigen::Index i = 0; i < rep.psi.size(); ++i) {
      w.cell(target_id).cell(rep.spec.name());
      w.cell(rep.spec.alpha.value_or(std::numeric_limits<double>::quiet_NaN()));
      w.cell(static_cast<long long>(i)).cell(rep.psi(i));
      w.end_row();
    }
  }
}

}  // namespace fgvi::io
