#ifndef EGOSOCIAL_AUGMENT_HPP
#define EGOSOCIAL_AUGMENT_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "egosocial/error.hpp"
#include "egosocial/random.hpp"
#include "egosocial/signals.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

struct AugmentSpec {
  int multiplier = 1;  // output size = multiplier * N
  double noise_sigma = 0.01;
  std::vector<int> frozen_dims;
  std::uint64_t rng_seed = 0;
};

/// Eigenpairs of the covariance of all frame rows over the non-frozen columns.
struct Eigenbasis {
  std::vector<int> active_dims;
  Eigen::MatrixXd vectors;  // [K x K], column k is P_k
  Eigen::VectorXd values;   // descending lambda_k
  Eigen::Index series_dim = 0;
};

inline std::vector<int> active_columns(Eigen::Index dim, const std::vector<int>& frozen) {
  std::set<int> frozen_set(frozen.begin(), frozen.end());
  for (int f : frozen_set)
    require(f >= 0 && f < dim, ErrorCode::InvalidArgument, "frozen dimension " + std::to_string(f) + " out of range");
  std::vector<int> out;
  for (int c = 0; c < dim; ++c)
    if (!frozen_set.count(c)) out.push_back(c);
  return out;
}

inline Eigenbasis fit_eigenbasis(std::span<const TimeSeries> set, const std::vector<int>& frozen_dims) {
  require(!set.empty(), ErrorCode::EmptyInput, "empty series set");
  const Eigen::Index dim = set.front().dim();
  Eigenbasis basis;
  basis.series_dim = dim;
  basis.active_dims = active_columns(dim, frozen_dims);
  require(!basis.active_dims.empty(), ErrorCode::InvalidArgument, "every dimension is frozen");

  Eigen::Index rows = 0;
  for (const auto& s : set) {
    require(s.dim() == dim, ErrorCode::DimensionMismatch, s.id() + ": series dimensions differ");
    rows += s.steps();
  }
  require(rows >= 2, ErrorCode::InsufficientData, "need at least 2 frames");
  const auto k = static_cast<Eigen::Index>(basis.active_dims.size());
  Matrix frames(rows, k);
  Eigen::Index r = 0;
  for (const auto& s : set)
    for (Eigen::Index t = 0; t < s.steps(); ++t, ++r)
      for (Eigen::Index j = 0; j < k; ++j) frames(r, j) = s.values(t, basis.active_dims[static_cast<std::size_t>(j)]);

  const Vector mean = frames.colwise().mean().transpose();
  const Eigen::MatrixXd centered = frames.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(rows - 1);
  if (!(cov.trace() > 0.0)) throw Error(ErrorCode::FitDegenerate, "zero covariance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigendecomposition failed");
  basis.vectors = solver.eigenvectors().rowwise().reverse();
  basis.values = solver.eigenvalues().reverse().cwiseMax(0.0);
  detail::fix_signs(basis.vectors);
  return basis;
}

/// theta draws of one augmented copy: [steps x K].
using ThetaLog = std::vector<Eigen::MatrixXd>;

/// The `multiplier` copies of one source series. Copy 1 is the source
/// itself; later copies add sum_k theta_k(t) * lambda_k * P_k to the active
/// columns at every frame, theta ~ N(0, sigma) drawn per (k, t). Draws come
/// from a sub-seed of (spec seed, series_index) so the output does not depend
/// on how series are scheduled.
inline std::vector<TimeSeries> augment_series(const TimeSeries& source, std::size_t series_index,
                                              const Eigenbasis& basis, const AugmentSpec& spec,
                                              ThetaLog* log = nullptr) {
  require(source.dim() == basis.series_dim, ErrorCode::DimensionMismatch, source.id() + ": eigenbasis dimension");
  require(basis.active_dims == active_columns(basis.series_dim, spec.frozen_dims), ErrorCode::DimensionMismatch,
          "frozen dimensions differ from the eigenbasis");
  const auto k = static_cast<Eigen::Index>(basis.active_dims.size());
  const Eigen::MatrixXd scaled = basis.vectors * basis.values.asDiagonal();  // column k = lambda_k P_k

  Rng rng(derive_seed(spec.rng_seed, series_index));
  std::vector<TimeSeries> out;
  out.reserve(static_cast<std::size_t>(spec.multiplier));
  for (int copy = 1; copy <= spec.multiplier; ++copy) {
    TimeSeries s = source;
    s.provenance = SeriesProvenance{source.id(), copy, spec.rng_seed};
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(source.steps(), k);
    if (copy > 1 && spec.noise_sigma > 0.0) {
      for (Eigen::Index t = 0; t < source.steps(); ++t)
        for (Eigen::Index j = 0; j < k; ++j) theta(t, j) = spec.noise_sigma * rng.normal();
      const Eigen::MatrixXd delta = theta * scaled.transpose();  // [steps x K]
      for (Eigen::Index j = 0; j < k; ++j) s.values.col(basis.active_dims[static_cast<std::size_t>(j)]) += delta.col(j);
    }
    if (log) log->push_back(std::move(theta));
    out.push_back(std::move(s));
  }
  return out;
}

/// Output order: every copy of series 0, then of series 1, and so on.
inline std::vector<TimeSeries> augment(std::span<const TimeSeries> set, const Eigenbasis& basis,
                                       const AugmentSpec& spec) {
  require(spec.multiplier >= 1, ErrorCode::InvalidArgument, "multiplier must be >= 1");
  require(spec.noise_sigma >= 0.0, ErrorCode::InvalidArgument, "sigma must be >= 0");
  std::vector<TimeSeries> out;
  out.reserve(set.size() * static_cast<std::size_t>(spec.multiplier));
  for (std::size_t n = 0; n < set.size(); ++n) {
    auto copies = augment_series(set[n], n, basis, spec);
    std::move(copies.begin(), copies.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace egosocial

#endif
