#include "mirrorwm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mirrorwm/rng.hpp"

namespace mirrorwm {

double collision_probability(const TokenDistribution& p) {
  if (!is_distribution(p)) {
    throw std::invalid_argument("collision_probability: not a distribution");
  }
  return p.squaredNorm();
}

int gumbel_select(const TokenDistribution& p, const Eigen::VectorXd& u) {
  if (p.size() != u.size() || p.size() == 0) {
    throw std::invalid_argument("gumbel_select: size mismatch");
  }
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (u[i] < 0.0 || u[i] >= 1.0) {
      throw std::invalid_argument("gumbel_select: u outside [0,1)");
    }
    const double score = u[i] > 0.0 ? std::log(u[i]) / p[i]
                                    : -std::numeric_limits<double>::infinity();
    if (best < 0 || score > best_score) {
      best = static_cast<int>(i);
      best_score = score;
    }
  }
  if (best < 0) throw std::invalid_argument("gumbel_select: empty support");
  return best;
}

TokenDistribution tournament_layer_update(const TokenDistribution& q,
                                          const Eigen::VectorXd& u) {
  if (q.size() != u.size() || q.size() == 0) {
    throw std::invalid_argument("tournament_layer_update: size mismatch");
  }
  const int v = static_cast<int>(q.size());
  std::vector<int> idx(v);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return u[a] < u[b]; });

  TokenDistribution out = TokenDistribution::Zero(v);
  double below = 0.0;  // mass with strictly smaller u
  int i = 0;
  while (i < v) {
    int j = i;
    double eq = 0.0;  // mass sharing this exact u (includes each member)
    while (j < v && u[idx[j]] == u[idx[i]]) {
      eq += q[idx[j]];
      ++j;
    }
    for (int t = i; t < j; ++t) {
      const int token = idx[t];
      out[token] = q[token] * (2.0 * below + eq);
    }
    below += eq;
    i = j;
  }
  return out;
}

TokenDistribution tournament_winner_dist(const TokenDistribution& p,
                                         const Eigen::MatrixXd& u_layers,
                                         int layers) {
  if (layers < 1) throw std::invalid_argument("tournament: layers must be >= 1");
  if (u_layers.rows() < layers || u_layers.cols() != p.size()) {
    throw std::invalid_argument("tournament: u_layers shape mismatch");
  }
  TokenDistribution q = p;
  for (int l = 0; l < layers; ++l) {
    q = tournament_layer_update(q, u_layers.row(l).transpose());
  }
  return q;
}

int tournament_sample(const TokenDistribution& p, const Eigen::MatrixXd& u_layers,
                      int layers, std::uint64_t seed) {
  const TokenDistribution q = tournament_winner_dist(p, u_layers, layers);
  SplitMix rng(seed);
  return sample_categorical(q, rng.next_uniform());
}

int tournament_naive(const TokenDistribution& p, const Eigen::MatrixXd& u_layers,
                     int layers, std::uint64_t seed) {
  if (layers < 1 || layers > 10) {
    throw std::invalid_argument("tournament_naive: layers must be in [1,10]");
  }
  if (u_layers.rows() < layers || u_layers.cols() != p.size()) {
    throw std::invalid_argument("tournament_naive: u_layers shape mismatch");
  }
  SplitMix rng(seed);
  const int n = 1 << layers;
  std::vector<int> bracket(n);
  for (int i = 0; i < n; ++i) {
    bracket[i] = sample_categorical(p, rng.next_uniform());
  }
  for (int l = 0; l < layers; ++l) {
    std::vector<int> next;
    next.reserve(bracket.size() / 2);
    for (std::size_t i = 0; i + 1 < bracket.size(); i += 2) {
      const int a = bracket[i], b = bracket[i + 1];
      const double ua = u_layers(l, a), ub = u_layers(l, b);
      int win;
      if (ua > ub) {
        win = a;
      } else if (ub > ua) {
        win = b;
      } else {
        win = rng.next_uniform() < 0.5 ? a : b;  // equal u: fair split
      }
      next.push_back(win);
    }
    bracket = std::move(next);
  }
  return bracket[0];
}

}  // namespace mirrorwm
