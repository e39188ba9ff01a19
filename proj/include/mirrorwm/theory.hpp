// Special functions and closed-form equal-error-rate evaluators for the
// sequence-level detection statistics of both sampling schemes.
#pragma once

#include <Eigen/Core>

namespace mirrorwm {

inline constexpr double kEulerGamma = 0.5772156649015328606065120900824024;

// psi0 / psi1 by recurrence into the asymptotic regime; x > 0.
double digamma(double x);
double trigamma(double x);

// Generalized harmonic number H_x = psi0(x + 1) + gamma; harmonic(1) = 1.
double harmonic(double x);

// Q(z) = 1 - Phi(z).
double gaussian_tail(double z);

struct FoldedMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Moments of |X| for X ~ N(mu, sigma^2); sigma > 0.
FoldedMoments folded_normal_moments(double mu, double sigma);

// Gumbel-max chain: detection statistic mean gap H_{e^H} - 1 per token.
struct GumbelEer {
  double eer = 0.5;
  double q_argument = 0.0;
  bool degenerate = false;  // non-positive separation; eer pinned at 0.5
};

// Exact digamma/trigamma terms; T tokens, entropy in nats, m message bits.
GumbelEer eer_gumbel_exact(double tokens, double entropy_nats, int msg_bits);

struct GumbelLogEer {
  double log_eer = 0.0;
  double q_argument = 0.0;
  bool degenerate = false;
};

// Large-vocabulary form: log EER = -z^2/2 - ln(z sqrt(2 pi)) with
// z = (H + gamma - 1) sqrt(T) / (1 + pi/sqrt(6)) - m ln2 / ((H + gamma - 1) sqrt(T)).
GumbelLogEer eer_gumbel_asymptotic(double tokens, double entropy_nats,
                                   int msg_bits);

// Leading-order constants of the asymptotic exponent, evaluated at runtime.
double gumbel_c1();  // 1 / (2 (1 + pi/sqrt(6))^2)
double gumbel_c2();  // ln 2 / (1 + pi/sqrt(6))

// Tournament chain inputs: layer count, per-layer weights averaging to 1,
// per-layer collision probabilities in [0, 1).
struct TournamentRegime {
  int layers = 30;
  Eigen::VectorXd alpha;      // empty means all-ones
  Eigen::VectorXd collision;  // C_l, length = layers

  Eigen::VectorXd weights() const {
    return alpha.size() == 0 ? Eigen::VectorXd::Ones(layers) : alpha;
  }
  void validate() const;
  static TournamentRegime uniform(int layers, double c);
};

// Intermediates of the tournament EER chain, all per-token (no T factor).
struct TournamentMoments {
  double c1 = 0.0;        // (1/L) sum alpha_l C_l
  double c2 = 0.0;        // (1/L) sum alpha_l^2 (2 + 2C_l - C_l^2) / 36
  double a = 0.0;         // sum alpha_l^2
  double mu_delta = 0.0;  // (1 - c1) / 6
  double v_s = 0.0;       // c2 / L
  double z = 0.0;         // mu_delta / sqrt(v_s)
  double m_z = 0.0;       // folded mean ratio at z
  double kappa0 = 0.0, kappa1 = 0.0, kappa2 = 0.0, kappa3 = 0.0;
  double zeta = 0.0;      // (kappa2 - kappa0) / (kappa3 + kappa1)
  bool degenerate = false;  // mu_delta <= 0 or kappa2 <= kappa0
};

TournamentMoments tournament_moments(const TournamentRegime& regime);

struct TournamentEer {
  double eer = 0.5;
  double zeta = 0.0;
  double log_eer = 0.0;  // -(T/2) zeta^2 - ln(zeta) - ln(2 pi T)/2
  double mu_h0 = 0.5, var_h0 = 0.0;  // moments of the max statistic, null
  double mu_h1 = 0.5, var_h1 = 0.0;  // and under watermark
  bool degenerate = false;
};

TournamentEer eer_tournament(double tokens, const TournamentRegime& regime);

}  // namespace mirrorwm
