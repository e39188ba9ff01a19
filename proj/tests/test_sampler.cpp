#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mirrorwm/lm.hpp"
#include "mirrorwm/mirror.hpp"
#include "mirrorwm/rng.hpp"
#include "mirrorwm/sampler.hpp"
#include "mirrorwm/stats.hpp"

using namespace mirrorwm;

namespace {

TokenDistribution make_dist(std::initializer_list<double> vals) {
  TokenDistribution p(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double v : vals) p[i++] = v;
  return p;
}

Eigen::VectorXd fresh_u(int n, SplitMix& rng) {
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.next_uniform();
  return u;
}

}  // namespace

TEST_CASE("collision probability") {
  CHECK(collision_probability(TokenDistribution::Constant(5, 0.2)) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(collision_probability(make_dist({0.0, 1.0})) == 1.0);
  CHECK(collision_probability(make_dist({0.5, 0.3, 0.2})) ==
        doctest::Approx(0.38).epsilon(1e-12));
}

TEST_CASE("gumbel selection basics") {
  Eigen::VectorXd u(2);
  u << 0.9, 0.1;
  CHECK(gumbel_select(make_dist({0.0, 1.0}), u) == 1);
  CHECK(gumbel_select(make_dist({0.5, 0.5}), u) == 0);

  // zero-probability tokens never win, whatever their u
  Eigen::VectorXd u3(3);
  u3 << 0.999, 0.5, 0.2;
  CHECK(gumbel_select(make_dist({0.0, 0.6, 0.4}), u3) != 0);

  CHECK_THROWS_AS(gumbel_select(make_dist({0.0, 0.0}), u), std::invalid_argument);

  // equal p and equal u ties to the lowest index
  Eigen::VectorXd tie(3);
  tie << 0.4, 0.4, 0.4;
  CHECK(gumbel_select(TokenDistribution::Constant(3, 1.0 / 3.0), tie) == 0);
}

TEST_CASE("gumbel selection reproduces the source distribution") {
  TokenDistribution p = make_dist({0.7, 0.3});
  SplitMix rng(1234);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    if (gumbel_select(p, fresh_u(2, rng)) == 0) ++hits;
  }
  const double sigma = std::sqrt(0.7 * 0.3 / n);
  CHECK(std::abs(double(hits) / n - 0.7) < 3.0 * sigma);
}

TEST_CASE("gumbel selection is distortion-free under mirrored randomness") {
  TokenDistribution p = make_dist({0.7, 0.3});
  SplitMix rng(4321);
  const int n = 200000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd u = fresh_u(2, rng);
    for (int k = 0; k < 2; ++k) u[k] = mirror_1bit(u[k], 0);
    if (gumbel_select(p, u) == 0) ++hits;
  }
  const double sigma = std::sqrt(0.7 * 0.3 / n);
  CHECK(std::abs(double(hits) / n - 0.7) < 3.0 * sigma);
}

TEST_CASE("one tournament layer in closed form") {
  // identical u: every match ties between equal values, law unchanged
  TokenDistribution q = make_dist({0.3, 0.5, 0.2});
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 0.6);
  CHECK((tournament_layer_update(q, flat) - q).cwiseAbs().maxCoeff() < 1e-12);

  // two equally likely tokens, token 0 holds the larger u
  Eigen::VectorXd u2(2);
  u2 << 1.0 - 1e-9, 0.0;
  TokenDistribution upd = tournament_layer_update(make_dist({0.5, 0.5}), u2);
  CHECK(upd[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(upd[1] == doctest::Approx(0.25).epsilon(1e-12));

  SplitMix rng(8);
  for (int i = 0; i < 100; ++i) {
    TokenDistribution r =
        synthetic_distribution(7, rng.next_uniform() * std::log(7.0), rng.next_u64());
    TokenDistribution out = tournament_layer_update(r, fresh_u(7, rng));
    CHECK(std::abs(out.sum() - 1.0) < 1e-9);
    CHECK(out.minCoeff() >= 0.0);
  }
}

TEST_CASE("tournament sampling contracts") {
  TokenDistribution onehot = make_dist({0.0, 1.0, 0.0});
  SplitMix rng(3);
  Eigen::MatrixXd u(4, 3);
  for (int l = 0; l < 4; ++l) u.row(l) = fresh_u(3, rng).transpose();
  CHECK(tournament_sample(onehot, u, 4, 99) == 1);
  CHECK_THROWS_AS(tournament_sample(onehot, u, 0, 99), std::invalid_argument);
  CHECK_THROWS_AS(tournament_naive(onehot, u, 11, 99), std::invalid_argument);
}

TEST_CASE("layer recursion matches the naive bracket oracle") {
  const int v = 5, layers = 3;
  TokenDistribution p = make_dist({0.35, 0.25, 0.2, 0.15, 0.05});
  SplitMix rng(2718);
  Eigen::MatrixXd u(layers, v);
  for (int l = 0; l < layers; ++l) u.row(l) = fresh_u(v, rng).transpose();

  TokenDistribution exact = tournament_winner_dist(p, u, layers);
  CHECK(std::abs(exact.sum() - 1.0) < 1e-9);

  const int brackets = 300000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(v);
  for (int i = 0; i < brackets; ++i) {
    freq[tournament_naive(p, u, layers, mix_seed(9, i))] += 1.0;
  }
  freq /= double(brackets);
  // ~9 sigma at this bracket count; the tight 5e-3 bound runs at 1e6
  CHECK((freq - exact).cwiseAbs().maxCoeff() < 8e-3);
}

TEST_CASE("winner u-value follows Cx + (1-C)x^2 after one match") {
  TokenDistribution p = make_dist({0.4, 0.3, 0.15, 0.1, 0.05});
  const double c = collision_probability(p);
  SplitMix rng(555);
  const int n = 100000;
  std::vector<double> transformed(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd u = fresh_u(5, rng);
    const int x = sample_categorical(p, rng.next_uniform());
    const int y = sample_categorical(p, rng.next_uniform());
    const double w = (x == y) ? u[x] : std::max(u[x], u[y]);
    transformed[i] = c * w + (1.0 - c) * w * w;
  }
  CHECK(ks_statistic_uniform(transformed) < 1.63 / std::sqrt(double(n)));
}
