#include "fgvi/bam.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fgvi/divergence.hpp"

namespace fgvi {

BamBatch bam_statistics(MatrixXd draws, MatrixXd scores) {
  if (draws.rows() != scores.rows() || draws.cols() != scores.cols()) {
    throw Error(ErrorCode::DimMismatch, "draws and scores have different shapes");
  }
  if (draws.rows() < 2) throw Error(ErrorCode::InvalidArgument, "batch needs at least 2 draws");
  const double inv_b = 1.0 / static_cast<double>(draws.rows());

  BamBatch batch;
  batch.z_bar = draws.colwise().sum().transpose() * inv_b;
  batch.g_bar = scores.colwise().sum().transpose() * inv_b;
  batch.c_diag = (draws.rowwise() - batch.z_bar.transpose()).colwise().squaredNorm().transpose() * inv_b;
  batch.gamma_diag =
      (scores.rowwise() - batch.g_bar.transpose()).colwise().squaredNorm().transpose() * inv_b;
  batch.draws = std::move(draws);
  batch.scores = std::move(scores);
  return batch;
}

BamBatch bam_batch(const BamState& state, const BlackBoxTarget& target, std::size_t batch_size) {
  if (batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 2");
  const auto n = state.iterate.dim();
  if (target.dim != n) throw Error(ErrorCode::DimMismatch, "iterate and target dimensions differ");

  std::seed_seq seq{static_cast<std::uint32_t>(state.rng_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(state.rng_seed >> 32),
                    static_cast<std::uint32_t>(state.step & 0xffffffffu),
                    static_cast<std::uint32_t>(state.step >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto b_count = static_cast<Eigen::Index>(batch_size);
  const VectorXd sd = state.iterate.var().array().sqrt();
  MatrixXd draws(b_count, n);
  MatrixXd scores(b_count, n);
  VectorXd z(n);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = state.iterate.mean()(i) + sd(i) * normal(rng);
    const VectorXd g = target.score(z);
    if (!g.allFinite()) {
      std::string where;
      for (Eigen::Index i = 0; i < n; ++i) where += (i ? ", " : "") + std::to_string(z(i));
      throw Error(ErrorCode::NonFiniteScore, "score is not finite at (" + where + ")");
    }
    draws.row(b) = z.transpose();
    scores.row(b) = g.transpose();
  }
  return bam_statistics(std::move(draws), std::move(scores));
}

double bam_positive_root(double a, double b, double c) {
  if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c)) || a < 0.0 || c <= 0.0 ||
      (b <= 0.0 && a <= std::numeric_limits<double>::min())) {
    throw Error(ErrorCode::DegenerateQuadratic,
                "no positive root for a=" + std::to_string(a) + ", b=" + std::to_string(b) +
                    ", c=" + std::to_string(c));
  }
  return 2.0 * c / (b + std::sqrt(b * b + 4.0 * a * c));
}

BamState bam_match(const BamState& state, const BamBatch& batch) {
  const auto n = state.iterate.dim();
  const double lambda = state.learning_rate;
  const VectorXd& nu = state.iterate.mean();
  const VectorXd& psi = state.iterate.var();

  VectorXd psi_next(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = batch.g_bar(i);
    const double dz = nu(i) - batch.z_bar(i);
    const double a = batch.gamma_diag(i) + g * g / (1.0 + lambda);
    const double b = 1.0 / lambda;
    const double c = batch.c_diag(i) + psi(i) / lambda + dz * dz / (1.0 + lambda);
    psi_next(i) = bam_positive_root(a, b, c);
  }
  const VectorXd nu_next =
      lambda / (1.0 + lambda) * (batch.z_bar + psi_next.cwiseProduct(batch.g_bar)) +
      nu / (1.0 + lambda);

  BamState next = state;
  next.iterate = FactorizedGaussiand(nu_next, psi_next);
  next.step = state.step + 1;
  return next;
}

double bam_score_divergence_estimate(const FactorizedGaussiand& q, const BamBatch& batch) {
  const auto b_count = batch.draws.rows();
  double total = 0;
  for (Eigen::Index b = 0; b < b_count; ++b) {
    // grad log q(z) = -(z - nu) / psi
    const VectorXd diff = -(batch.draws.row(b).transpose() - q.mean()).cwiseQuotient(q.var()) -
                          batch.scores.row(b).transpose();
    total += diff.cwiseProduct(q.var()).dot(diff);
  }
  return total / static_cast<double>(b_count);
}

BamResult bam_run(const BlackBoxTarget& target, const FactorizedGaussiand& init,
                  const BamConfig& config) {
  if (config.iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (config.batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 2");
  if (init.dim() != target.dim) throw Error(ErrorCode::DimMismatch, "init and target differ in dimension");

  BamState state{init, 0, config.schedule(0), config.seed};
  BamResult result{init, {}, {}};
  result.trace.reserve(config.iterations + 1);

  auto proxy = [&](const FactorizedGaussiand& q, const BamBatch* batch) {
    if (target.gaussian) return score_qp(q, *target.gaussian);
    return bam_score_divergence_estimate(q, *batch);
  };

  for (std::size_t t = 0; t < config.iterations; ++t) {
    state.learning_rate = config.schedule(t);
    const BamBatch batch = bam_batch(state, target, config.batch_size);
    result.trace.push_back({t, state.iterate.mean(), state.iterate.var(), proxy(state.iterate, &batch)});
    state = bam_match(state, batch);
  }
  {
    double last;
    if (target.gaussian) {
      last = proxy(state.iterate, nullptr);
    } else {
      const BamBatch batch = bam_batch(state, target, config.batch_size);
      last = proxy(state.iterate, &batch);
    }
    result.trace.push_back({config.iterations, state.iterate.mean(), state.iterate.var(), last});
  }

  result.final_q = state.iterate;
  for (Eigen::Index i = 0; i < init.dim(); ++i) {
    if (state.iterate.var()(i) < config.collapse_fraction * init.var()(i)) {
      result.suspected_collapse.push_back(i);
    }
  }
  return result;
}

}  // namespace fgvi
