#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mirrorwm/chunkbayes.hpp"
#include "mirrorwm/mirror.hpp"
#include "mirrorwm/numerics.hpp"
#include "mirrorwm/rng.hpp"
#include "mirrorwm/stats.hpp"
#include "mirrorwm/theory.hpp"

using namespace mirrorwm;

namespace {

ChunkModel base_model(int chunks, int bits, double alpha) {
  ChunkModel m;
  m.num_chunks = chunks;
  m.msg_bits = bits;
  m.alpha = alpha;
  return m;
}

}  // namespace

TEST_CASE("message shift lies on the pivot grid") {
  CHECK(message_shift(0, 2) == 0.0);
  CHECK(message_shift(1, 2) == 0.75);  // dyadic, exact in double
  CHECK(message_shift(3, 2) == 0.25);
  CHECK(message_shift(0, 0) == 0.0);
  CHECK_THROWS_AS(message_shift(4, 2), std::invalid_argument);
}

TEST_CASE("re-mirroring by a wrong symbol is a circular shift") {
  // decoding with M when M* was embedded sees the statistic shifted by
  // exactly the wrapped-Beta delta of (M* - M)
  SplitMix rng(31);
  for (int i = 0; i < 2000; ++i) {
    const int m = 1 + static_cast<int>(rng.next_below(4));
    const int truth = static_cast<int>(rng.next_below(1 << m));
    const int probe = static_cast<int>(rng.next_below(1 << m));
    const double z = rng.next_uniform();
    const double remirrored = mirror(mirror(z, m, truth), m, probe);
    const double delta = message_shift((truth - probe) & ((1 << m) - 1), m);
    double shifted = z + delta;
    if (shifted >= 1.0) shifted -= 1.0;
    CHECK(std::abs(remirrored - shifted) < 1e-12);
  }
}

TEST_CASE("wrapped Beta density") {
  // alpha = 1 collapses to the uniform density for every shift
  for (double x : {0.0, 0.3, 0.9}) {
    for (double d : {0.0, 0.25, 0.7}) {
      CHECK(wrapped_beta_pdf(x, 1.0, d) == 1.0);
    }
  }

  // no shift: plain Beta(alpha, 1)
  CHECK(wrapped_beta_pdf(0.5, 3.0, 0.0) == doctest::Approx(0.75).epsilon(1e-12));

  // below the shift the mass wraps around
  CHECK(wrapped_beta_pdf(0.1, 2.0, 0.3) == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(wrapped_beta_pdf(0.4, 2.0, 0.3) == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(wrapped_beta_pdf(1.0, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(wrapped_beta_pdf(0.5, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("wrapped densities average to uniform on the pivot grid at alpha 1") {
  const int m = 3;
  for (int g = 0; g < 100; ++g) {
    const double x = (g + 0.5) / 100.0;
    double avg = 0.0;
    for (int sym = 0; sym < (1 << m); ++sym) {
      avg += wrapped_beta_pdf(x, 1.0, message_shift(sym, m));
    }
    avg /= double(1 << m);
    CHECK(std::abs(avg - 1.0) < 1e-12);
  }
}

TEST_CASE("score density reduces to Exp(1) when alpha is 1") {
  CHECK(score_pdf(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(score_pdf(2.0, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(score_pdf(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("score densities integrate to one") {
  for (double alpha : {1.0, 2.0, 5.0}) {
    for (double delta : {0.0, 0.3}) {
      auto f = [&](double s) { return score_pdf(s, alpha, delta); };
      // the wrapped branch has a kink where 1 - e^{-s} crosses delta
      const double knee = delta > 0.0 ? -std::log1p(-delta) : 1.0;
      const double total = adaptive_simpson(f, 0.0, knee, 1e-10) +
                           adaptive_simpson(f, knee, 60.0, 1e-10);
      CHECK(std::abs(total - 1.0) < 1e-8);
    }
    auto g = [&](double s) { return score_pdf(s, alpha); };
    const double total = adaptive_simpson(g, 0.0, 60.0, 1e-10);
    CHECK(std::abs(total - 1.0) < 1e-8);
  }
}

TEST_CASE("correct-message score mean is the harmonic number") {
  auto integrand = [](double s) { return s * score_pdf(s, 2.0); };
  const double mean = adaptive_simpson(integrand, 0.0, 60.0, 1e-10);
  CHECK(mean == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(harmonic(2.0) == doctest::Approx(1.5).epsilon(1e-12));

  // Monte Carlo: Z = max of n uniforms, score mean = H_n
  const int n = 5, trials = 20000;
  SplitMix rng(201);
  std::vector<double> scores(trials);
  for (int i = 0; i < trials; ++i) {
    double z = 0.0;
    for (int k = 0; k < n; ++k) z = std::max(z, rng.next_uniform());
    scores[i] = -std::log1p(-z);
  }
  const double se = std::sqrt(variance_of(scores) / trials);
  CHECK(std::abs(mean_of(scores) - harmonic(double(n))) < 3.0 * se);
}

TEST_CASE("marginal detector identities") {
  // alpha = 1: the likelihood ratio is 1 on every chunk
  ChunkModel flat = base_model(5, 2, 1.0);
  std::vector<double> u{0.1, 0.5, 0.9, 0.3, 0.7};
  CHECK(marginal_detector(u, flat).statistic == doctest::Approx(0.0).epsilon(1e-12));

  // one chunk, no message bits: plain Beta log density
  ChunkModel point = base_model(1, 0, 5.0);
  std::vector<double> one{0.9};
  CHECK(marginal_detector(one, point).statistic ==
        doctest::Approx(std::log(5.0 * std::pow(0.9, 4.0))).epsilon(1e-12));

  // default threshold is the prior log odds
  ChunkModel skew = base_model(1, 0, 5.0);
  skew.prior_w = 0.2;
  CHECK(skew.prior_threshold() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  DetectorResult r = marginal_detector(one, skew);
  CHECK(r.decision == (r.statistic > std::log(4.0)));
}

TEST_CASE("glrt dominates the marginal statistic pointwise") {
  SplitMix rng(44);
  for (int bits = 0; bits <= 3; ++bits) {
    ChunkModel model = base_model(8, bits, 4.0);
    std::vector<double> u(8);
    for (auto& x : u) x = rng.next_uniform();
    const double ms = marginal_detector(u, model).statistic;
    const double gs = glrt_detector(u, model, 0.0).statistic;
    if (bits == 0) {
      CHECK(gs == doctest::Approx(ms).epsilon(1e-12));
    } else {
      CHECK(gs >= ms - 1e-12);
    }
  }
}

TEST_CASE("map decoding picks the maximum-density symbol") {
  ChunkModel model = base_model(1, 2, 5.0);
  CHECK(map_decode(0.99, model) == 0);  // highest residual under no shift
  CHECK(map_decode(0.70, model) == 1);  // closest pivot image from below

  ChunkModel scalar = base_model(1, 0, 5.0);
  CHECK(map_decode(0.42, scalar) == 0);

  // alpha = 1 ties every symbol; lowest wins
  ChunkModel tie = base_model(1, 2, 1.0);
  CHECK(map_decode(0.37, tie) == 0);

  // a zero-prior symbol can never be decoded
  ChunkModel pinned = base_model(1, 1, 5.0);
  pinned.msg_prior = {0.0, 1.0};
  CHECK(map_decode(0.99, pinned) == 1);
}

TEST_CASE("lambda statistic") {
  std::vector<double> z{1.0 - std::exp(-1.0), 1.0 - std::exp(-2.0)};
  CHECK(lambda_statistic(z) == doctest::Approx(3.0).epsilon(1e-12));
  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(lambda_statistic(bad), std::invalid_argument);
}

TEST_CASE("false-positive tail bound") {
  CHECK(fpr_bound(50.0, 50.0) == 1.0);
  CHECK(fpr_bound(40.0, 50.0) == 1.0);
  CHECK(fpr_bound(100.0, 50.0) ==
        doctest::Approx(std::exp(-50.0 * (1.0 - std::log(2.0)))).epsilon(1e-12));
  CHECK(fpr_bound(150.0, 50.0) < fpr_bound(100.0, 50.0));
  CHECK(fpr_bound(100.1, 50.0) < 1.0);
}

TEST_CASE("false-negative tail bound") {
  CHECK(fnr_bound(170.0, 100.0, 1.7) == 1.0);
  CHECK(fnr_bound(200.0, 100.0, 1.7) == 1.0);
  CHECK(fnr_bound(100.0, 100.0, 2.0, 0.1) ==
        doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
  CHECK(fnr_bound(130.0, 200.0, 1.7, 0.1) < fnr_bound(130.0, 100.0, 1.7, 0.1));
}

TEST_CASE("beta draws and unshifting preserve uniformity") {
  SplitMix rng(55);
  // alpha = 1 draws are plain uniforms
  const int n = 100000;
  std::vector<double> z(n);
  for (auto& x : z) x = sample_beta_z(1.0, rng);
  CHECK(ks_statistic_uniform(z) < 1.63 / std::sqrt(double(n)));

  // a uniform shifted by a random grid message stays uniform
  for (auto& x : z) {
    const int sym = static_cast<int>(rng.next_below(4));
    double v = rng.next_uniform() - message_shift(sym, 2);
    if (v < 0.0) v += 1.0;
    x = v;
  }
  CHECK(ks_statistic_uniform(z) < 1.63 / std::sqrt(double(n)));

  // Beta(alpha,1) draws match the analytic mean alpha/(alpha+1)
  std::vector<double> z5(50000);
  for (auto& x : z5) x = sample_beta_z(5.0, rng);
  const double se = std::sqrt(variance_of(z5) / z5.size());
  CHECK(std::abs(mean_of(z5) - 5.0 / 6.0) < 3.0 * se);
}

TEST_CASE("simulation trials are deterministic and self-consistent") {
  ChunkModel model = base_model(20, 2, 5.0);
  auto a = simulate_chunks(model, 300, 99);
  auto b = simulate_chunks(model, 300, 99);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].watermarked == b[i].watermarked);
    CHECK(a[i].u == b[i].u);
    CHECK(a[i].marginal_stat == b[i].marginal_stat);
  }

  for (const auto& trial : a) {
    REQUIRE(trial.u.size() == 20);
    REQUIRE(trial.messages.size() == 20);
    REQUIRE(trial.decoded.size() == 20);
    // recorded statistics match a fresh evaluation on the recorded data
    DetectorResult m = marginal_detector(trial.u, model);
    CHECK(trial.marginal_stat == doctest::Approx(m.statistic).epsilon(1e-12));
    CHECK(trial.marginal_decision == m.decision);
    CHECK(trial.detect_then_decode == trial.marginal_decision);
    DetectorResult g = glrt_detector(trial.u, model, model.prior_threshold());
    CHECK(trial.glrt_stat == doctest::Approx(g.statistic).epsilon(1e-12));
    for (std::size_t k = 0; k < trial.u.size(); ++k) {
      CHECK(trial.decoded[k] == map_decode(trial.u[k], model));
    }
  }
}

TEST_CASE("null false-positive rate agrees with an independent replica") {
  // independently coded detector on std::mt19937_64 draws
  const int k_chunks = 20, bits = 2;
  const double alpha = 5.0;
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n_ref = 60000;
  int ref_hits = 0;
  for (int i = 0; i < n_ref; ++i) {
    double stat = 0.0;
    for (int k = 0; k < k_chunks; ++k) {
      const double u = unif(gen);
      double mix = 0.0;
      for (int sym = 0; sym < (1 << bits); ++sym) {
        double r = u - (sym == 0 ? 0.0 : 1.0 - std::ldexp(double(sym), -bits));
        if (r < 0.0) r += 1.0;
        mix += alpha * std::pow(r, alpha - 1.0);
      }
      stat += std::log(mix / double(1 << bits));
    }
    if (stat > 0.0) ++ref_hits;
  }
  const double ref_fpr = double(ref_hits) / n_ref;

  ChunkModel model = base_model(k_chunks, bits, alpha);
  auto trials = simulate_chunks(model, 60000, 2718);
  long nulls = 0, hits = 0;
  for (const auto& t : trials) {
    if (t.watermarked) continue;
    ++nulls;
    if (t.marginal_decision) ++hits;
  }
  const double fpr = double(hits) / double(nulls);
  const double pooled = (ref_fpr + fpr) / 2.0;
  const double sigma = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_ref + 1.0 / nulls));
  CHECK(std::abs(fpr - ref_fpr) < 3.0 * sigma);
}
