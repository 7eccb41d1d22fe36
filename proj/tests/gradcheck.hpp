#ifndef EGOSOCIAL_TESTS_GRADCHECK_HPP
#define EGOSOCIAL_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "egosocial/lstm.hpp"

namespace gradcheck {

using namespace egosocial;

// Relative error floor: gradients smaller than this are compared absolutely.
inline constexpr double kFloor = 1e-5;
inline constexpr double kEpsilon = 1e-5;

struct Report {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t parameters = 0;
};

inline double loss_of(const Network& net, const TimeSeries& s, bool label) {
  return log_loss(forward(net, s, false), label);
}

// Every parameter of every block against central differences.
inline Report check(const Network& net, const TimeSeries& s, bool label) {
  const auto analytic = compute_gradients(net, s, label).gradient;
  const auto ablocks = analytic.blocks();
  Network probe = net;
  auto blocks = probe.params.blocks();
  Report r;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t k = 0; k < blocks[b].size(); ++k) {
      const double saved = blocks[b][k];
      blocks[b][k] = saved + kEpsilon;
      const double up = loss_of(probe, s, label);
      blocks[b][k] = saved - kEpsilon;
      const double down = loss_of(probe, s, label);
      blocks[b][k] = saved;
      const double numeric = (up - down) / (2.0 * kEpsilon);
      const double a = ablocks[b][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kFloor});
      if (rel > r.max_relative_error) {
        r.max_relative_error = rel;
        r.worst_block = std::string(LstmParameters::kBlockNames[b]);
      }
      ++r.parameters;
    }
  }
  return r;
}

// A random network with non-trivial peepholes and a random series.
inline std::pair<Network, TimeSeries> random_case(std::uint64_t seed, int input_dim = 3, int cells = 4, int steps = 10) {
  NetworkConfig c;
  c.input_dim = input_dim;
  c.cell_count = cells;
  c.rng_seed = seed;
  c.init_scale = 0.6;
  Network net = init_network(c);
  Rng rng(derive_seed(seed, 99));
  net.params.bias.segment(2 * cells, cells).setConstant(rng.uniform(-1.0, 1.5));
  TimeSeries s;
  s.setting = FeatureSetting::SID4;
  s.sequence_id = "g" + std::to_string(seed);
  s.values.resize(steps, input_dim);
  for (int t = 0; t < steps; ++t)
    for (int j = 0; j < input_dim; ++j) s.values(t, j) = rng.normal();
  return {net, s};
}

}  // namespace gradcheck

#endif
