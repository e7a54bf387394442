// fgvi: command-line runner for factorized-Gaussian VI solvers and sweeps.
//
// Exit codes: 0 ok, 1 error, 2 ok but the solution collapsed.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "fgvi/bam.hpp"
#include "fgvi/experiments.hpp"
#include "fgvi/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kCollapse = 2;

std::vector<double> linear_grid(double first, double last, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) g[static_cast<std::size_t>(k)] = first + (last - first) * k / (count - 1);
  return g;
}

// Values from the --config file fill in options not given on the command line.
class ConfigFile {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    try {
      cfg_ = json::parse(fgvi::io::read_file(path));
    } catch (const json::exception& e) {
      throw fgvi::Error(fgvi::ErrorCode::Parse, "config " + path + ": " + e.what());
    }
    if (!cfg_.is_object()) throw fgvi::Error(fgvi::ErrorCode::Parse, "config must be a JSON object");
  }

  template <typename T>
  void fill(const CLI::App* sub, const std::string& key, T& value) const {
    if (sub->count("--" + key) == 0 && cfg_.contains(key)) {
      try {
        if constexpr (requires { typename T::value_type; value.has_value(); }) {
          value = cfg_.at(key).get<typename T::value_type>();
        } else {
          value = cfg_.at(key).get<T>();
        }
      } catch (const json::exception& e) {
        throw fgvi::Error(fgvi::ErrorCode::Parse, "config key '" + key + "': " + e.what());
      }
    }
  }

 private:
  json cfg_ = json::object();
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    fgvi::io::write_file(out, text);
  }
}

fgvi::SolverOptions solver_options(double tol) {
  fgvi::SolverOptions opts;
  opts.fixed_point.tol = tol;
  opts.nqp.tol = tol;
  return opts;
}

struct Common {
  std::string config;
  std::string out;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_seed, bool with_tol) {
  sub->add_option("--config", c.config, "JSON file with option values (flags take precedence)");
  sub->add_option("--out", c.out, "output path (stdout when omitted)");
  if (with_seed) sub->add_option("--seed", c.seed, "random seed");
  if (with_tol) sub->add_option("--tol", c.tol, "solver tolerance");
}

void fill_common(const ConfigFile& cfg, const CLI::App* sub, Common& c) {
  cfg.fill(sub, "out", c.out);
  if (sub->get_option_no_throw("--seed")) cfg.fill(sub, "seed", c.seed);
  if (sub->get_option_no_throw("--tol")) cfg.fill(sub, "tol", c.tol);
}

// solve

struct SolveArgs {
  Common common;
  std::string target;
  std::string divergence;
  std::optional<double> alpha;
};

int run_solve(const CLI::App* sub, SolveArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "target", a.target);
  cfg.fill(sub, "divergence", a.divergence);
  cfg.fill(sub, "alpha", a.alpha);
  if (a.target.empty()) throw fgvi::Error(fgvi::ErrorCode::InvalidArgument, "--target is required");
  if (a.divergence.empty()) throw fgvi::Error(fgvi::ErrorCode::InvalidArgument, "--divergence is required");

  const auto p = fgvi::io::gaussian_target_from_json(fgvi::io::read_file(a.target));
  const auto spec = fgvi::DivergenceSpec::parse(a.divergence, a.alpha);
  const auto report = fgvi::solve(spec, p, solver_options(a.common.tol));

  json echo = {{"command", "solve"}, {"target", a.target}, {"divergence", a.divergence}, {"tol", a.common.tol}};
  if (a.alpha) echo["alpha"] = *a.alpha;
  emit(a.common.out, fgvi::io::to_json(report, echo.dump()));
  return report.collapsed() ? kCollapse : kOk;
}

// ordering-sweep

struct OrderingArgs {
  Common common;
  std::vector<double> detc = linear_grid(0.05, 0.95, 19);
  std::vector<double> alphas{0.5};
};

int run_ordering(const CLI::App* sub, OrderingArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "detc", a.detc);
  cfg.fill(sub, "alphas", a.alphas);

  const auto rows = fgvi::ordering_sweep(a.detc, a.alphas, solver_options(a.common.tol));
  const json echo = {{"command", "ordering-sweep"}, {"detc", a.detc}, {"alphas", a.alphas}, {"tol", a.common.tol}};
  std::ostringstream ss;
  fgvi::io::CsvWriter w(ss, echo.dump(),
                        {"det_c", "rho", "divergence", "alpha", "normalized_variance",
                         "normalized_precision", "entropy_gap"});
  for (const auto& r : rows) {
    w.cell(r.det_c).cell(r.rho).cell(r.spec.name());
    w.cell(r.spec.alpha.value_or(std::numeric_limits<double>::quiet_NaN()));
    w.cell(r.normalized_variance).cell(r.normalized_precision).cell(r.entropy_gap);
    w.end_row();
  }
  emit(a.common.out, ss.str());
  return kOk;
}

// collapse-scan

struct CollapseArgs {
  Common common;
  std::vector<double> slices{0.0, 0.5, 0.9};
  int resolution = 100;
};

int run_collapse(const CLI::App* sub, CollapseArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "slices", a.slices);
  cfg.fill(sub, "resolution", a.resolution);
  const fs::path dir = a.common.out.empty() ? fs::path(".") : fs::path(a.common.out);

  for (double c23 : a.slices) {
    const auto pts = fgvi::collapse_scan_slice(c23, a.resolution, solver_options(a.common.tol));
    const json echo = {{"command", "collapse-scan"}, {"c23", c23}, {"resolution", a.resolution},
                       {"tol", a.common.tol}};
    std::ostringstream ss;
    fgvi::io::CsvWriter w(ss, echo.dump(), {"c12", "c13", "c23", "in_domain", "sqp_collapse", "spq_collapse"});
    std::size_t inside = 0, sqp = 0, spq = 0, disagree = 0;
    for (const auto& pt : pts) {
      w.cell(pt.c12).cell(pt.c13).cell(pt.c23);
      w.cell(static_cast<long long>(pt.in_domain));
      w.cell(static_cast<long long>(pt.sqp_collapse)).cell(static_cast<long long>(pt.spq_collapse));
      w.end_row();
      inside += pt.in_domain;
      sqp += pt.sqp_collapse;
      spq += pt.spq_collapse;
      disagree += pt.sqp_collapse != pt.spq_collapse;
    }
    const fs::path file = dir / fmt::format("collapse_c23_{}.csv", c23);
    fgvi::io::write_file(file, ss.str());
    std::cout << fmt::format("{}: {} points in domain, sqp collapse {}, spq collapse {}, disagreements {}\n",
                             file.string(), inside, sqp, spq, disagree);
  }
  return kOk;
}

// entropy-alpha

struct EntropyArgs {
  Common common;
  std::vector<Eigen::Index> dims{2, 4, 8, 16};
  std::vector<double> eps = linear_grid(0.1, 0.9, 9);
};

int run_entropy(const CLI::App* sub, EntropyArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "dims", a.dims);
  cfg.fill(sub, "eps", a.eps);

  const auto rows = fgvi::entropy_alpha_sweep(a.dims, a.eps, a.common.tol);
  const json echo = {{"command", "entropy-alpha"}, {"dims", a.dims}, {"eps", a.eps}, {"tol", a.common.tol}};
  std::ostringstream ss;
  fgvi::io::CsvWriter w(ss, echo.dump(), {"n", "eps", "degenerate", "alpha", "gap", "gap_below", "gap_above"});
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.n)).cell(r.eps).cell(static_cast<long long>(r.degenerate));
    w.cell(r.alpha).cell(r.gap).cell(r.gap_below).cell(r.gap_above);
    w.end_row();
  }
  emit(a.common.out, ss.str());
  return kOk;
}

// verify

struct VerifyArgs {
  Common common;
  std::size_t seeds = 200;
  std::vector<Eigen::Index> dims{2, 3, 4, 5, 6};
  std::vector<double> alphas = linear_grid(0.1, 0.9, 9);
  bool inject_fault = false;
};

int run_verify(const CLI::App* sub, VerifyArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "seeds", a.seeds);
  cfg.fill(sub, "dims", a.dims);
  cfg.fill(sub, "alphas", a.alphas);

  const auto summary = fgvi::run_verification(a.seeds, a.dims, a.alphas, a.common.seed, a.inject_fault,
                                              solver_options(a.common.tol));
  json doc = json::parse(fgvi::to_json(summary));
  doc["config"] = {{"command", "verify"}, {"seeds", a.seeds}, {"first_seed", a.common.seed},
                   {"dims", a.dims}, {"alphas", a.alphas}, {"tol", a.common.tol},
                   {"inject_fault", a.inject_fault}};
  emit(a.common.out, doc.dump(2));
  if (!summary.passed()) {
    std::cerr << fmt::format("verify: {} clause checks failed\n", summary.total_failed());
    return kError;
  }
  return kOk;
}

// bam

struct BamArgs {
  Common common;
  std::string target = "gaussian2d_rho05";
  std::size_t batch = 10000;
  std::size_t iters = 1000;
  double lr = 1.0;
  double init_var = 1.0;
};

int run_bam(const CLI::App* sub, BamArgs& a) {
  ConfigFile cfg;
  cfg.load(a.common.config);
  fill_common(cfg, sub, a.common);
  cfg.fill(sub, "target", a.target);
  cfg.fill(sub, "batch", a.batch);
  cfg.fill(sub, "iters", a.iters);
  cfg.fill(sub, "lr", a.lr);
  cfg.fill(sub, "init-var", a.init_var);

  const auto target = fgvi::zoo_target(a.target);
  fgvi::BamConfig config;
  config.batch_size = a.batch;
  config.iterations = a.iters;
  config.schedule = fgvi::LearningRateSchedule::constant(a.lr);
  config.seed = a.common.seed;
  const fgvi::FactorizedGaussiand init(fgvi::VectorXd::Zero(target.dim),
                                       fgvi::VectorXd::Constant(target.dim, a.init_var));
  const auto result = fgvi::bam_run(target, init, config);

  const json echo = {{"command", "bam"}, {"target", a.target}, {"batch", a.batch}, {"iters", a.iters},
                     {"lr", a.lr}, {"init-var", a.init_var}, {"seed", a.common.seed},
                     {"target_metadata", json::parse(fgvi::io::target_metadata_json(target))}};
  std::ostringstream ss;
  fgvi::io::write_bam_trace(ss, result, echo.dump());
  if (!a.common.out.empty()) fgvi::io::write_file(a.common.out, ss.str());

  const auto& psi = result.final_q.var();
  std::string line = "final psi:";
  for (Eigen::Index i = 0; i < psi.size(); ++i) line += " " + fgvi::io::format_double(psi(i));
  std::cout << line << '\n';
  if (target.gaussian) {
    const auto ref = fgvi::solve_score_qp(*target.gaussian);
    double gap = 0;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      gap = std::max(gap, ref.psi(i) > 0 ? std::abs(psi(i) - ref.psi(i)) / ref.psi(i)
                                         : std::numeric_limits<double>::infinity());
    }
    std::cout << "max relative gap to solve_score_qp: " << fgvi::io::format_double(gap) << '\n';
  }
  if (!result.suspected_collapse.empty()) {
    std::cerr << "suspected collapse in " << result.suspected_collapse.size() << " coordinate(s)\n";
    return kCollapse;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factorized-Gaussian variational inference: solvers, sweeps and checks"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "solve one divergence for a Gaussian target (JSON)");
  add_common(solve, solve_args.common, false, true);
  solve->add_option("--target", solve_args.target, "target JSON {\"mean\":[..],\"cov\":[[..]]}");
  solve->add_option("--divergence", solve_args.divergence, "klqp, klpq, renyi, sqp or spq");
  solve->add_option("--alpha", solve_args.alpha, "Renyi order in (0, 1)");

  OrderingArgs ordering_args;
  auto* ordering = app.add_subcommand("ordering-sweep", "2-D ordering curves over |C|");
  add_common(ordering, ordering_args.common, false, true);
  ordering->add_option("--detc", ordering_args.detc, "values of |C| in (0, 1)");
  ordering->add_option("--alphas", ordering_args.alphas, "Renyi orders, increasing");

  CollapseArgs collapse_args;
  auto* collapse = app.add_subcommand("collapse-scan", "classify collapse over C23 slices; --out is a directory");
  add_common(collapse, collapse_args.common, false, true);
  collapse->add_option("--slices", collapse_args.slices, "values of C23");
  collapse->add_option("--resolution", collapse_args.resolution, "grid intervals per axis");

  EntropyArgs entropy_args;
  entropy_args.common.tol = 1e-8;
  auto* entropy = app.add_subcommand("entropy-alpha", "entropy-matching alpha for equicorrelated targets");
  add_common(entropy, entropy_args.common, false, true);
  entropy->add_option("--dims", entropy_args.dims, "dimensions");
  entropy->add_option("--eps", entropy_args.eps, "constant correlations");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "trade-off and ordering property sweeps");
  add_common(verify, verify_args.common, true, true);
  verify->add_option("--seeds", verify_args.seeds, "number of seeds, starting at --seed");
  verify->add_option("--dims", verify_args.dims, "dimensions");
  verify->add_option("--alphas", verify_args.alphas, "Renyi orders in the ordering chain");
  verify->add_flag("--inject-fault", verify_args.inject_fault, "corrupt one psi per target (negative control)");

  BamArgs bam_args;
  auto* bam = app.add_subcommand("bam", "diagonal batch-and-match on a named target");
  add_common(bam, bam_args.common, true, false);
  bam->add_option("--target", bam_args.target, "gaussian2d_rho05, standard_normal2d, collapse3d or rosenbrock");
  bam->add_option("--batch", bam_args.batch, "draws per iteration");
  bam->add_option("--iters", bam_args.iters, "iterations");
  bam->add_option("--lr", bam_args.lr, "constant learning rate");
  bam->add_option("--init-var", bam_args.init_var, "initial variance of every coordinate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*solve) return run_solve(solve, solve_args);
    if (*ordering) return run_ordering(ordering, ordering_args);
    if (*collapse) return run_collapse(collapse, collapse_args);
    if (*entropy) return run_entropy(entropy, entropy_args);
    if (*verify) return run_verify(verify, verify_args);
    if (*bam) return run_bam(bam, bam_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
