#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mirrorwm/lm.hpp"

namespace mirrorwm {

// Sum of squared probabilities: the chance two independent draws collide.
double collision_probability(const TokenDistribution& p);

// Exponential-race selection: argmax over supported tokens of ln(u_i)/p_i
// (equivalently argmax u_i^(1/p_i)). Ties resolve to the lowest index.
// Selecting with fresh uniform u reproduces p exactly.
int gumbel_select(const TokenDistribution& p, const Eigen::VectorXd& u);

// One pairwise-match layer: the winner of two independent draws from q,
// larger u wins, equal u (same token) stays. Closed-form winner law:
//   p'(x) = q(x) * (2 * Pr[u(Y) < u(x)] + Pr[u(Y) = u(x)]),  Y ~ q.
TokenDistribution tournament_layer_update(const TokenDistribution& q,
                                          const Eigen::VectorXd& u);

// L stacked match layers (row l of u_layers holds layer l+1 u-values) then
// one seeded inverse-CDF draw from the final winner distribution.
int tournament_sample(const TokenDistribution& p, const Eigen::MatrixXd& u_layers,
                      int layers, std::uint64_t seed);

// Final winner distribution after all layers, without the draw.
TokenDistribution tournament_winner_dist(const TokenDistribution& p,
                                         const Eigen::MatrixXd& u_layers,
                                         int layers);

// Brute-force single-elimination bracket over 2^L sampled candidates; the
// Monte Carlo oracle for the layer recursion. Tied matches between distinct
// candidates with equal u split by a fair coin. Requires layers <= 10.
int tournament_naive(const TokenDistribution& p, const Eigen::MatrixXd& u_layers,
                     int layers, std::uint64_t seed);

}  // namespace mirrorwm
