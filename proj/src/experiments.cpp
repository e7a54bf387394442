#include "fgvi/experiments.hpp"

#include <fmt/format.h>

#include <cmath>
#include <json.hpp>

#include "fgvi/targets.hpp"

namespace fgvi {

std::vector<OrderingSweepRow> ordering_sweep(const std::vector<double>& det_c_grid,
                                             const std::vector<double>& alphas,
                                             const SolverOptions& opts) {
  for (double d : det_c_grid) {
    if (!(d > 0.0 && d < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("|C| = {} outside (0, 1)", d));
    }
  }
  const auto chain = ordering_chain(alphas);
  std::vector<OrderingSweepRow> rows;
  rows.reserve(det_c_grid.size() * chain.size());
  for (double d : det_c_grid) {
    const double rho = std::sqrt(1.0 - d);
    const auto p = correlated_pair(rho);
    const double log_det = p.cov().log_det();
    for (const auto& spec : chain) {
      const auto r = solve(spec, p, opts);
      rows.push_back({d, rho, spec, r.psi(0) / p.cov()(0, 0), 1.0 / (r.psi(0) * p.prec()(0, 0)),
                      0.5 * (r.psi.array().log().sum() - log_det)});
    }
  }
  return rows;
}

std::vector<CollapsePoint> collapse_scan_slice(double c23, int resolution, const SolverOptions& opts) {
  if (!(c23 > -1.0 && c23 < 1.0)) throw Error(ErrorCode::InvalidArgument, "C23 must lie in (-1, 1)");
  if (resolution < 10) throw Error(ErrorCode::InvalidArgument, "resolution must be at least 10");

  std::vector<CollapsePoint> out;
  out.reserve(static_cast<std::size_t>(resolution + 1) * static_cast<std::size_t>(resolution + 1));
  MatrixXd c = MatrixXd::Identity(3, 3);
  c(1, 2) = c(2, 1) = c23;
  for (int a = 0; a <= resolution; ++a) {
    const double c12 = -1.0 + 2.0 * a / resolution;
    for (int b = 0; b <= resolution; ++b) {
      const double c13 = -1.0 + 2.0 * b / resolution;
      CollapsePoint pt{c12, c13, c23, false, false, false};
      c(0, 1) = c(1, 0) = c12;
      c(0, 2) = c(2, 0) = c13;
      try {
        const GaussianTargetd p{SpdMatrixd(c)};
        pt.in_domain = true;
        pt.sqp_collapse = solve_score_qp(p, opts).collapsed();
        pt.spq_collapse = solve_score_pq(p, opts).collapsed();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
      }
      out.push_back(pt);
    }
  }
  return out;
}

std::vector<EntropyAlphaRow> entropy_alpha_sweep(const std::vector<Eigen::Index>& dims,
                                                 const std::vector<double>& eps_grid, double tol,
                                                 double probe) {
  std::vector<EntropyAlphaRow> rows;
  for (auto n : dims) {
    for (double eps : eps_grid) {
      const auto p = equicorrelated_gaussian(n, eps);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      EntropyAlphaRow row{n, eps, true, nan, nan, nan, nan};
      try {
        const auto m = entropy_matching_alpha(p, tol);
        if (m.bisection_steps > 0) {
          const double log_det = p.cov().log_det();
          auto gap_at = [&](double a) {
            a = std::clamp(a, 1e-6, 1.0 - 1e-6);
            return solve_renyi(p, a).psi.array().log().sum() - log_det;
          };
          row = {n, eps, false, m.alpha, m.gap, gap_at(m.alpha - probe), gap_at(m.alpha + probe)};
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DiagonalTarget && e.code() != ErrorCode::NoConvergence) throw;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::size_t VerificationSummary::total_failed() const {
  std::size_t n = 0;
  for (const auto& [name, c] : clauses) n += c.failed;
  return n;
}

std::uint64_t sweep_target_seed(std::uint64_t seed, Eigen::Index n) {
  return seed * 1000003u + static_cast<std::uint64_t>(n);
}

namespace {

void record(VerificationSummary& s, const std::string& clause, bool ok, const std::string& detail) {
  auto& c = s.clauses[clause];
  if (ok) {
    ++c.passed;
    return;
  }
  ++c.failed;
  if (s.failures.size() < 20) s.failures.push_back(clause + ": " + detail);
}

}  // namespace

VerificationSummary run_verification(std::size_t seeds, const std::vector<Eigen::Index>& dims,
                                     const std::vector<double>& alphas, std::uint64_t first_seed,
                                     bool inject_fault, const SolverOptions& opts) {
  VerificationSummary s;
  for (std::uint64_t seed = first_seed; seed < first_seed + seeds; ++seed) {
    for (auto n : dims) {
      const auto p = random_correlation_target(n, sweep_target_seed(seed, n));
      const std::string id = fmt::format("seed={} n={}", seed, n);
      ++s.targets;

      for (auto which : {TradeoffCase::VarianceMatching, TradeoffCase::PrecisionMatching,
                         TradeoffCase::GenVarMatching}) {
        VectorXd psi = matching_psi(p, which);
        if (inject_fault && which == TradeoffCase::VarianceMatching) psi *= 0.5;
        const auto r = check_tradeoffs(p, psi, which);
        record(s, std::string("tradeoff.") + to_string(which), r.passed, id + " " + r.violated_clause);
      }

      const auto h = check_hadamard_bounds(p, VectorXd(VectorXd::Ones(n)));
      record(s, "hadamard", h.passed,
             fmt::format("{} slacks {:.3g} {:.3g}", id, h.variance_slack, h.precision_slack));

      try {
        const auto o = check_ordering(p, alphas, opts);
        std::string detail = id;
        for (const auto& v : o.violations) {
          detail += fmt::format(" {}<{}@{}", v.lower.name(), v.upper.name(), v.coordinate);
        }
        record(s, "ordering", o.passed() && !o.degenerate, detail);
      } catch (const Error& e) {
        record(s, "ordering", false, id + " " + e.what());
      }
    }
  }
  return s;
}

std::string to_json(const VerificationSummary& s) {
  nlohmann::json j;
  j["targets"] = s.targets;
  j["passed"] = s.passed();
  j["total_failed"] = s.total_failed();
  j["clauses"] = nlohmann::json::object();
  for (const auto& [name, c] : s.clauses) j["clauses"][name] = {{"passed", c.passed}, {"failed", c.failed}};
  j["failures"] = s.failures;
  return j.dump();
}

}  // namespace fgvi
