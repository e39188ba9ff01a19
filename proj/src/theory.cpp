#include "mirrorwm/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mirrorwm/numerics.hpp"

namespace mirrorwm {

namespace {

// Bernoulli-number coefficients B_{2n} / (2n) for the psi0 tail and
// B_{2n} for the psi1 tail.
constexpr double kDigammaTail[] = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};
constexpr double kTrigammaTail[] = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};
constexpr double kAsymptoticCut = 12.0;

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x > 0 required");
  double acc = 0.0;
  while (x < kAsymptoticCut) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double tail = 0.0;
  double power = inv2;
  for (double coef : kDigammaTail) {
    tail += coef * power;
    power *= inv2;
  }
  return acc + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("trigamma: x > 0 required");
  double acc = 0.0;
  while (x < kAsymptoticCut) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double tail = 0.0;
  double power = inv2 * inv;
  for (double coef : kTrigammaTail) {
    tail += coef * power;
    power *= inv2;
  }
  return acc + inv + 0.5 * inv2 + tail;
}

double harmonic(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("harmonic: x > 0 required");
  return digamma(x + 1.0) + kEulerGamma;
}

double gaussian_tail(double z) { return normal_tail(z); }

FoldedMoments folded_normal_moments(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("folded_normal_moments: sigma > 0");
  const double r = mu / sigma;
  const double mean = sigma * std::sqrt(2.0 / std::numbers::pi) *
                          std::exp(-0.5 * r * r) +
                      mu * (1.0 - 2.0 * normal_cdf(-r));
  return {mean, mu * mu + sigma * sigma - mean * mean};
}

GumbelEer eer_gumbel_exact(double tokens, double entropy_nats, int msg_bits) {
  if (tokens < 1.0) throw std::invalid_argument("eer_gumbel_exact: tokens >= 1");
  if (entropy_nats < 0.0 || msg_bits < 0) {
    throw std::invalid_argument("eer_gumbel_exact: entropy, msg_bits >= 0");
  }
  const double pool = std::exp(entropy_nats);  // effective competitors 1/p
  const double mu_delta = harmonic(pool) - 1.0;
  GumbelEer out;
  if (mu_delta <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const double width = 1.0 + std::sqrt(trigamma(1.0) - trigamma(1.0 + pool));
  const double root_t = std::sqrt(tokens);
  const double z = mu_delta * root_t / width -
                   msg_bits * std::numbers::ln2 / (mu_delta * root_t);
  out.q_argument = z;
  if (z <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.eer = gaussian_tail(z);
  return out;
}

namespace {
double asymptotic_width() { return 1.0 + std::numbers::pi / std::sqrt(6.0); }
}  // namespace

GumbelLogEer eer_gumbel_asymptotic(double tokens, double entropy_nats,
                                   int msg_bits) {
  if (tokens < 1.0) throw std::invalid_argument("eer_gumbel_asymptotic: tokens >= 1");
  if (entropy_nats < 0.0 || msg_bits < 0) {
    throw std::invalid_argument("eer_gumbel_asymptotic: entropy, msg_bits >= 0");
  }
  const double mu_delta = entropy_nats + kEulerGamma - 1.0;
  GumbelLogEer out;
  out.log_eer = std::log(0.5);
  if (mu_delta <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const double root_t = std::sqrt(tokens);
  const double z = mu_delta * root_t / asymptotic_width() -
                   msg_bits * std::numbers::ln2 / (mu_delta * root_t);
  out.q_argument = z;
  if (z <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.log_eer = -0.5 * z * z - std::log(z * std::sqrt(2.0 * std::numbers::pi));
  return out;
}

double gumbel_c1() {
  const double w = asymptotic_width();
  return 1.0 / (2.0 * w * w);
}

double gumbel_c2() { return std::numbers::ln2 / asymptotic_width(); }

void TournamentRegime::validate() const {
  if (layers < 1) throw std::invalid_argument("tournament regime: layers >= 1");
  const Eigen::VectorXd a = weights();
  if (a.size() != layers || collision.size() != layers) {
    throw std::invalid_argument("tournament regime: per-layer lengths must equal layers");
  }
  if (std::fabs(a.mean() - 1.0) > 1e-9) {
    throw std::invalid_argument("tournament regime: weights must average to 1");
  }
  for (int l = 0; l < layers; ++l) {
    if (collision[l] < 0.0 || collision[l] >= 1.0) {
      throw std::invalid_argument("tournament regime: collision in [0,1)");
    }
  }
}

TournamentRegime TournamentRegime::uniform(int layers, double c) {
  TournamentRegime r;
  r.layers = layers;
  r.collision = Eigen::VectorXd::Constant(layers, c);
  return r;
}

TournamentMoments tournament_moments(const TournamentRegime& regime) {
  regime.validate();
  const Eigen::VectorXd a = regime.weights();
  const Eigen::VectorXd& c = regime.collision;
  const double L = regime.layers;

  TournamentMoments m;
  m.a = a.squaredNorm();
  m.c1 = (a.array() * c.array()).mean();
  m.c2 = (a.array().square() *
          (2.0 + 2.0 * c.array() - c.array().square()) / 36.0)
             .mean();
  m.mu_delta = (1.0 - m.c1) / 6.0;
  m.v_s = m.c2 / L;
  m.kappa0 = std::sqrt(m.a / (6.0 * std::numbers::pi * L * L));
  m.kappa1 = std::sqrt(m.a * (1.0 - 2.0 / std::numbers::pi) / (12.0 * L * L));
  if (m.mu_delta <= 0.0) {
    m.degenerate = true;
    return m;
  }
  m.z = m.mu_delta / std::sqrt(m.v_s);
  m.m_z = std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * m.z * m.z) / m.z +
          2.0 * normal_cdf(m.z) - 1.0;
  m.kappa2 = m.mu_delta * m.m_z;
  m.kappa3 = m.mu_delta * std::sqrt(1.0 - m.m_z * m.m_z + 1.0 / (m.z * m.z));
  if (m.kappa2 <= m.kappa0) {
    m.degenerate = true;
    return m;
  }
  m.zeta = (m.kappa2 - m.kappa0) / (m.kappa3 + m.kappa1);
  return m;
}

TournamentEer eer_tournament(double tokens, const TournamentRegime& regime) {
  if (tokens < 1.0) throw std::invalid_argument("eer_tournament: tokens >= 1");
  const TournamentMoments m = tournament_moments(regime);
  TournamentEer out;
  out.mu_h0 = 0.5 + m.kappa0;
  out.var_h0 = m.kappa1 * m.kappa1 / tokens;
  out.log_eer = std::log(0.5);
  if (m.degenerate) {
    out.degenerate = true;
    return out;
  }
  out.mu_h1 = 0.5 + m.kappa2;
  out.var_h1 = m.kappa3 * m.kappa3 / tokens;
  out.zeta = m.zeta;
  out.eer = gaussian_tail(m.zeta * std::sqrt(tokens));
  out.log_eer = -0.5 * tokens * m.zeta * m.zeta -
                0.5 * std::log(2.0 * std::numbers::pi * tokens) -
                std::log(m.zeta);
  return out;
}

}  // namespace mirrorwm
