#include "mirrorwm/chunkbayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mirrorwm {

double ChunkModel::prior_threshold() const {
  return std::log((1.0 - prior_w) / prior_w);
}

void ChunkModel::validate() const {
  if (num_chunks < 1) throw std::invalid_argument("chunk model: K >= 1");
  if (msg_bits < 0 || msg_bits > 20) {
    throw std::invalid_argument("chunk model: msg_bits out of range");
  }
  if (alpha < 1.0) throw std::invalid_argument("chunk model: alpha >= 1");
  if (!(prior_w > 0.0 && prior_w < 1.0)) {
    throw std::invalid_argument("chunk model: prior_w in (0,1)");
  }
  if (!msg_prior.empty()) {
    if (static_cast<int>(msg_prior.size()) != num_messages()) {
      throw std::invalid_argument("chunk model: msg_prior length mismatch");
    }
    double total = 0.0;
    for (double p : msg_prior) {
      if (p < 0.0) throw std::invalid_argument("chunk model: msg_prior >= 0");
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("chunk model: msg_prior must sum to 1");
    }
  }
}

double message_shift(int symbol, int msg_bits) {
  if (msg_bits < 0 || symbol < 0 || symbol >= (1 << msg_bits)) {
    throw std::invalid_argument("message_shift: symbol out of range");
  }
  if (symbol == 0) return 0.0;
  return 1.0 - std::ldexp(static_cast<double>(symbol), -msg_bits);
}

double wrapped_beta_pdf(double x, double alpha, double delta) {
  if (x < 0.0 || x >= 1.0) throw std::invalid_argument("wrapped_beta_pdf: x in [0,1)");
  if (alpha < 1.0) throw std::invalid_argument("wrapped_beta_pdf: alpha >= 1");
  if (delta < 0.0 || delta >= 1.0) {
    throw std::invalid_argument("wrapped_beta_pdf: delta in [0,1)");
  }
  const double d = x >= delta ? x - delta : x - delta + 1.0;
  return alpha * std::pow(d, alpha - 1.0);
}

double score_pdf(double s, double alpha, std::optional<double> delta) {
  if (s < 0.0) throw std::invalid_argument("score_pdf: s >= 0");
  // large s saturates 1 - e^{-s} at 1.0; clamp below like log_score does
  const double x = std::min(-std::expm1(-s), std::nextafter(1.0, 0.0));
  return std::exp(-s) * wrapped_beta_pdf(x, alpha, delta.value_or(0.0));
}

namespace {

// ln[(1/2^m) sum_M f(u|M)] via log-sum-exp; null density is 1 on [0,1).
double chunk_marginal_loglr(double u, const ChunkModel& model) {
  const int n = model.num_messages();
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(n);
  for (int msg = 0; msg < n; ++msg) {
    const double f = wrapped_beta_pdf(u, model.alpha, message_shift(msg, model.msg_bits));
    logs[msg] = f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, logs[msg]);
  }
  if (!std::isfinite(max_log)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - max_log);
  return max_log + std::log(acc / n);
}

double chunk_glrt_loglr(double u, const ChunkModel& model) {
  const int n = model.num_messages();
  double best = -std::numeric_limits<double>::infinity();
  for (int msg = 0; msg < n; ++msg) {
    const double f = wrapped_beta_pdf(u, model.alpha, message_shift(msg, model.msg_bits));
    if (f > 0.0) best = std::max(best, std::log(f));
  }
  return best;
}

}  // namespace

DetectorResult marginal_detector(std::span<const double> u, const ChunkModel& model,
                                 std::optional<double> threshold) {
  model.validate();
  double stat = 0.0;
  for (double x : u) stat += chunk_marginal_loglr(x, model);
  const double tau = threshold.value_or(model.prior_threshold());
  return {stat, stat > tau};
}

DetectorResult glrt_detector(std::span<const double> u, const ChunkModel& model,
                             double threshold) {
  model.validate();
  double stat = 0.0;
  for (double x : u) stat += chunk_glrt_loglr(x, model);
  return {stat, stat > threshold};
}

int map_decode(double u, const ChunkModel& model) {
  model.validate();
  const int n = model.num_messages();
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int msg = 0; msg < n; ++msg) {
    const double prior =
        model.msg_prior.empty() ? 1.0 / n : model.msg_prior[msg];
    if (prior <= 0.0) continue;
    const double f = wrapped_beta_pdf(u, model.alpha, message_shift(msg, model.msg_bits));
    const double s = std::log(prior) + (f > 0.0 ? std::log(f)
                                                : -std::numeric_limits<double>::infinity());
    if (s > best_score) {
      best_score = s;
      best = msg;
    }
  }
  return best;
}

double lambda_statistic(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) {
    if (x < 0.0 || x >= 1.0) {
      throw std::invalid_argument("lambda_statistic: z in [0,1)");
    }
    s -= std::log1p(-x);
  }
  return s;
}

double fpr_bound(double tau, double T) {
  if (T <= 0.0) throw std::invalid_argument("fpr_bound: T > 0");
  const double r = tau / T;
  if (r <= 1.0) return 1.0;
  return std::exp(-T * (r - 1.0 - std::log(r)));
}

double fnr_bound(double tau, double T, double h_emp, double c) {
  if (T <= 0.0 || c <= 0.0) throw std::invalid_argument("fnr_bound: T, c > 0");
  const double gap = h_emp - tau / T;
  if (gap <= 0.0) return 1.0;
  return std::exp(-c * T * gap * gap);
}

double sample_beta_z(double alpha, SplitMix& rng) {
  if (alpha < 1.0) throw std::invalid_argument("sample_beta_z: alpha >= 1");
  return std::pow(rng.next_uniform(), 1.0 / alpha);
}

double sample_lambda(double alpha, int tokens, SplitMix& rng) {
  double s = 0.0;
  for (int t = 0; t < tokens; ++t) {
    s -= std::log1p(-sample_beta_z(alpha, rng));
  }
  return s;
}

std::vector<ChunkTrial> simulate_chunks(const ChunkModel& model, int n_trials,
                                        std::uint64_t seed,
                                        std::optional<double> marginal_threshold,
                                        std::optional<double> glrt_threshold) {
  model.validate();
  if (n_trials < 1) throw std::invalid_argument("simulate_chunks: n_trials >= 1");
  const double tau_m = marginal_threshold.value_or(model.prior_threshold());
  const double tau_g = glrt_threshold.value_or(model.prior_threshold());
  const int n_msg = model.num_messages();

  std::vector<double> msg_cdf(n_msg);
  {
    double acc = 0.0;
    for (int msg = 0; msg < n_msg; ++msg) {
      acc += model.msg_prior.empty() ? 1.0 / n_msg : model.msg_prior[msg];
      msg_cdf[msg] = acc;
    }
    msg_cdf.back() = 1.0;
  }

  std::vector<ChunkTrial> trials;
  trials.reserve(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    SplitMix rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    ChunkTrial trial;
    trial.watermarked = rng.next_uniform() < model.prior_w;
    trial.u.resize(model.num_chunks);
    trial.messages.resize(model.num_chunks);
    for (int k = 0; k < model.num_chunks; ++k) {
      const double r = rng.next_uniform();
      int msg = 0;
      while (msg + 1 < n_msg && r >= msg_cdf[msg]) ++msg;
      trial.messages[k] = msg;
      if (trial.watermarked) {
        const double z = sample_beta_z(model.alpha, rng);
        double v = z + message_shift(msg, model.msg_bits);
        if (v >= 1.0) v -= 1.0;
        trial.u[k] = v < 1.0 ? v : 0.0;
      } else {
        trial.u[k] = rng.next_uniform();
      }
    }
    const auto marg = marginal_detector(trial.u, model, tau_m);
    const auto glrt = glrt_detector(trial.u, model, tau_g);
    trial.marginal_stat = marg.statistic;
    trial.marginal_decision = marg.decision;
    trial.glrt_stat = glrt.statistic;
    trial.glrt_decision = glrt.decision;
    trial.detect_then_decode = marg.decision;
    trial.decoded.resize(model.num_chunks);
    for (int k = 0; k < model.num_chunks; ++k) {
      trial.decoded[k] = map_decode(trial.u[k], model);
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

}  // namespace mirrorwm
