#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgvi/verify.hpp"

namespace fgvi {

// Ordering of the five divergences on 2-D targets parameterized by |C|.

struct OrderingSweepRow {
  double det_c;
  double rho;  // sqrt(1 - |C|)
  DivergenceSpec spec;
  double normalized_variance;   // psi_1 / Sigma_11
  double normalized_precision;  // (1 / psi_1) / Sigma^-1_11
  double entropy_gap;           // H(q) - H(p)
};

/// Rows in grid order; within a grid point, divergences follow the ordering chain.
std::vector<OrderingSweepRow> ordering_sweep(const std::vector<double>& det_c_grid,
                                             const std::vector<double>& alphas,
                                             const SolverOptions& opts = {});

// Variational collapse over slices of the 3-D correlation elliptope.

struct CollapsePoint {
  double c12;
  double c13;
  double c23;
  bool in_domain;  // positive definite
  bool sqp_collapse;
  bool spq_collapse;
};

/// Grid C12, C13 in {-1 + 2k/resolution : k = 0..resolution}, row-major in C12.
std::vector<CollapsePoint> collapse_scan_slice(double c23, int resolution, const SolverOptions& opts = {});

// Entropy-matching alpha for equicorrelated targets.

struct EntropyAlphaRow {
  Eigen::Index n;
  double eps;
  bool degenerate;  // no sign change resolvable (diagonal or numerically diagonal target)
  double alpha;
  double gap;        // log|Psi(alpha*)| - log|Sigma|
  double gap_below;  // gap at alpha* - probe
  double gap_above;  // gap at alpha* + probe
};

std::vector<EntropyAlphaRow> entropy_alpha_sweep(const std::vector<Eigen::Index>& dims,
                                                 const std::vector<double>& eps_grid,
                                                 double tol = 1e-8, double probe = 1e-3);

// Property sweeps over random correlation targets.

struct ClauseCount {
  std::size_t passed = 0;
  std::size_t failed = 0;
};

struct VerificationSummary {
  std::size_t targets = 0;
  std::map<std::string, ClauseCount> clauses;
  std::vector<std::string> failures;  // first few failure descriptions

  std::size_t total_failed() const;
  bool passed() const { return total_failed() == 0; }
};

/// Seed of the random correlation target used for (seed, n) in sweeps.
std::uint64_t sweep_target_seed(std::uint64_t seed, Eigen::Index n);

/// For each seed in [first_seed, first_seed + seeds) and each n in dims: the
/// three trade-off constructions, both Hadamard bounds, and the ordering chain
/// over `alphas`. With inject_fault the variance-matching psi is shrunk by
/// half, which must be reported as a failure.
VerificationSummary run_verification(std::size_t seeds, const std::vector<Eigen::Index>& dims,
                                     const std::vector<double>& alphas, std::uint64_t first_seed = 0,
                                     bool inject_fault = false, const SolverOptions& opts = {});

std::string to_json(const VerificationSummary& s);

}  // namespace fgvi
