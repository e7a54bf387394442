#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fgvi/targets.hpp"

namespace fgvi {

/// lambda_t as a function of the (0-based) iteration counter.
struct LearningRateSchedule {
  std::function<double(std::size_t)> rate;

  static LearningRateSchedule constant(double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
    return {[lambda](std::size_t) { return lambda; }};
  }
  double operator()(std::size_t t) const { return rate(t); }
};

struct BamState {
  FactorizedGaussiand iterate;
  std::size_t step = 0;
  double learning_rate = 1.0;
  std::uint64_t rng_seed = 0;
};

/// Sample statistics of one batch of draws from the current iterate.
struct BamBatch {
  MatrixXd draws;   // B x n
  MatrixXd scores;  // B x n, grad log p at each draw
  VectorXd z_bar;
  VectorXd g_bar;
  VectorXd c_diag;      // per-coordinate (biased) sample variance of draws
  VectorXd gamma_diag;  // per-coordinate (biased) sample variance of scores
};

/// Computes z_bar, g_bar, C_ii and Gamma_ii from given draws and scores.
BamBatch bam_statistics(MatrixXd draws, MatrixXd scores);

/// Draws B points from the diagonal Gaussian iterate and scores them. The
/// generator is seeded from (state.rng_seed, state.step), so a batch is a
/// pure function of the state.
BamBatch bam_batch(const BamState& state, const BlackBoxTarget& target, std::size_t batch_size);

/// Positive root of a x^2 + b x - c = 0 for a >= 0, b > 0, c > 0, in the
/// cancellation-free form 2c / (b + sqrt(b^2 + 4ac)).
double bam_positive_root(double a, double b, double c);

/// Closed-form minimizer of the regularized objective for diagonal
/// covariances: per-coordinate quadratic for the new variance, then the mean
/// update using that variance.
BamState bam_match(const BamState& state, const BamBatch& batch);

struct BamTraceRow {
  std::size_t iter;
  VectorXd nu;
  VectorXd psi;
  /// S(q_t || p) in closed form for Gaussian targets; otherwise the batch
  /// Monte Carlo estimate of the same quantity at q_t.
  double divergence_proxy;
};

struct BamConfig {
  std::size_t batch_size = 10000;
  std::size_t iterations = 1000;
  LearningRateSchedule schedule = LearningRateSchedule::constant(1.0);
  std::uint64_t seed = 0;
  /// psi_i below this fraction of its initial value is reported as suspected collapse.
  double collapse_fraction = 1e-8;
};

struct BamResult {
  FactorizedGaussiand final_q;
  std::vector<BamTraceRow> trace;  // rows 0..iterations, row 0 is the initial state
  std::vector<Eigen::Index> suspected_collapse;
};

/// Monte Carlo estimate of E_q ||grad log q - grad log p||^2_Psi over a batch.
double bam_score_divergence_estimate(const FactorizedGaussiand& q, const BamBatch& batch);

BamResult bam_run(const BlackBoxTarget& target, const FactorizedGaussiand& init,
                  const BamConfig& config);

}  // namespace fgvi
