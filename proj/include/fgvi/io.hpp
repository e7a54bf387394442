#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fgvi/bam.hpp"
#include "fgvi/solvers.hpp"
#include "fgvi/targets.hpp"
#include "fgvi/verify.hpp"

namespace fgvi::io {

/// 17 significant digits, enough for an exact double round trip.
std::string format_double(double x);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// JSON. Writers produce compact one-line documents; parsers throw
// Error(Parse) on malformed input and propagate model validation errors.

std::string to_json(const GaussianTargetd& p);
GaussianTargetd gaussian_target_from_json(std::string_view text);

std::string to_json(const FactorizedGaussiand& q);
FactorizedGaussiand factorized_gaussian_from_json(std::string_view text);

/// {"spec":{"name":..,"alpha":..},"mean":[..],"psi":[..],"collapsed":[{"i":k,"mode":"zero"|"inf"}],
///  "residual":..,"iterations":..}. Infinite psi entries are written as null.
/// A non-empty `config_json` is embedded verbatim under "config".
std::string to_json(const SolveReport<double>& r, std::string_view config_json = {});
SolveReport<double> solve_report_from_json(std::string_view text);

std::string to_json(const TradeoffReport<double>& r);

/// {"name":..,"dim":..,"moment_provenance":..}
std::string target_metadata_json(const BlackBoxTarget& t);

// CSV. Files start with one "# config: <json>" line, then the column header.

struct CsvTable {
  std::vector<std::string> comments;  // comment lines with the leading "#" and one space stripped
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;
};

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::string_view config_json, const std::vector<std::string>& columns);

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(std::string_view s);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t n_columns_;
  std::size_t in_row_ = 0;
};

CsvTable parse_csv(std::istream& in);
CsvTable parse_csv(std::string_view text);

/// One row per (iteration, coordinate): iter, coord, nu, psi, divergence_proxy.
void write_bam_trace(std::ostream& out, const BamResult& result, std::string_view config_json);

/// Flat ordering export: one row per divergence x coordinate.
void write_ordering_csv(std::ostream& out, const OrderingReport<double>& r, std::string_view target_id,
                        std::string_view config_json);

}  // namespace fgvi::io
