#include "mirrorwm/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mirrorwm {

void WatermarkParams::validate() const {
  if (msg_bits < 0 || msg_bits > 20) {
    throw std::invalid_argument("params: msg_bits out of range");
  }
  if (num_positions < 1) throw std::invalid_argument("params: num_positions >= 1");
  if (cabs.num_positions != num_positions) {
    throw std::invalid_argument("params: cabs.num_positions must equal num_positions");
  }
  cabs.validate();
  if (top_k < 0) throw std::invalid_argument("params: top_k must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("params: temperature > 0");
  if (sampler == SamplerKind::kTournament) {
    if (tournament.layers < 1) throw std::invalid_argument("params: layers >= 1");
    const Eigen::VectorXd a = tournament.weights();
    if (a.size() != tournament.layers) {
      throw std::invalid_argument("params: alpha length must equal layers");
    }
    if (std::fabs(a.mean() - 1.0) > 1e-9) {
      throw std::invalid_argument("params: alpha weights must average to 1");
    }
  }
}

namespace {

TokenDistribution effective_dist(const DistributionSource& source,
                                 std::span<const std::int64_t> context,
                                 int top_k, double temperature) {
  TokenDistribution p = source.next_dist(context);
  if (top_k > 0 || temperature != 1.0) {
    const int k = top_k > 0 ? top_k : static_cast<int>(p.size());
    p = truncate_topk(p, k, temperature);
  }
  return p;
}

std::int64_t plain_draw(const TokenDistribution& p, std::uint64_t step_seed,
                        double* prob_out) {
  SplitMix rng(step_seed);
  const int tok = sample_categorical(p, rng.next_uniform());
  if (prob_out != nullptr) *prob_out = p[tok];
  return tok;
}

}  // namespace

EncodeResult encode(const DistributionSource& source, const WatermarkParams& params,
                    const MessageSequence& msg, int num_tokens, std::uint64_t seed) {
  params.validate();
  if (static_cast<int>(msg.size()) != params.num_positions) {
    throw std::invalid_argument("encode: message length must equal num_positions");
  }
  for (int s : msg) {
    if (s < 0 || s >= params.num_symbols()) {
      throw std::invalid_argument("encode: message symbol out of range");
    }
  }
  if (num_tokens < 0) throw std::invalid_argument("encode: num_tokens >= 0");

  const int h = params.cabs.context;
  const int layers = params.num_layers();

  CabsScheduler scheduler(params.cabs, params.key);
  EncodeResult out;
  out.tokens.reserve(num_tokens);
  out.trace.reserve(num_tokens);

  for (int t = 0; t < num_tokens; ++t) {
    const TokenDistribution dist = effective_dist(
        source, std::span<const std::int64_t>(out.tokens), params.top_k,
        params.temperature);
    const std::uint64_t step_seed = mix_seed(seed, static_cast<std::uint64_t>(t));

    StepTrace step;
    std::optional<int> pos;
    if (t >= h) {
      pos = scheduler.assign(
          std::span<const std::int64_t>(out.tokens).subspan(t - h, h));
    }
    if (!pos.has_value()) {
      step.token = plain_draw(dist, step_seed, &step.prob);
      step.position = -1;
    } else {
      const int symbol = msg[*pos];
      const ContextWindow cw(
          std::vector<std::int64_t>(out.tokens.end() - h, out.tokens.end()), h);
      const int v = static_cast<int>(dist.size());
      Eigen::MatrixXd u_base = Eigen::MatrixXd::Zero(layers, v);
      Eigen::MatrixXd u_mirror = Eigen::MatrixXd::Zero(layers, v);
      for (int i = 0; i < v; ++i) {
        if (dist[i] <= 0.0) continue;
        for (int l = 0; l < layers; ++l) {
          const double u = prf_uniform(params.key, cw, i, l + 1);
          u_base(l, i) = u;
          u_mirror(l, i) = mirror_for(u, params.msg_bits, symbol);
        }
      }
      int tok;
      if (params.sampler == SamplerKind::kGumbel) {
        tok = gumbel_select(dist, u_mirror.row(0).transpose());
      } else {
        tok = tournament_sample(dist, u_mirror, layers, step_seed);
      }
      scheduler.commit(tok);
      step.token = tok;
      step.position = *pos;
      step.prob = dist[tok];
      step.u.resize(layers);
      for (int l = 0; l < layers; ++l) step.u[l] = u_base(l, tok);
    }
    out.tokens.push_back(step.token);
    out.trace.push_back(std::move(step));
  }
  return out;
}

std::vector<std::int64_t> generate_plain(const DistributionSource& source,
                                         int top_k, double temperature,
                                         int num_tokens, std::uint64_t seed) {
  if (num_tokens < 0) throw std::invalid_argument("generate_plain: num_tokens >= 0");
  std::vector<std::int64_t> tokens;
  tokens.reserve(num_tokens);
  for (int t = 0; t < num_tokens; ++t) {
    const TokenDistribution dist = effective_dist(
        source, std::span<const std::int64_t>(tokens), top_k, temperature);
    tokens.push_back(
        plain_draw(dist, mix_seed(seed, static_cast<std::uint64_t>(t)), nullptr));
  }
  return tokens;
}

// ---- scores ----------------------------------------------------------------

double log_score(std::span<const double> u, bool* clamped) {
  if (clamped != nullptr) *clamped = false;
  double s = 0.0;
  for (double x : u) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("log_score: u outside [0,1]");
    if (x >= 1.0) {
      x = 0x1.fffffffffffffp-1;
      if (clamped != nullptr) *clamped = true;
    }
    s -= std::log1p(-x);
  }
  return s;
}

double wmean_score(const Eigen::MatrixXd& u, const Eigen::VectorXd& alpha) {
  if (u.cols() != alpha.size()) {
    throw std::invalid_argument("wmean_score: weight length must match layers");
  }
  if (u.rows() == 0) return 0.0;
  return (u * alpha).sum() /
         (static_cast<double>(u.rows()) * static_cast<double>(u.cols()));
}

PiModel PiModel::logistic(double weight, double bias) {
  PiModel m;
  m.oracle_ = false;
  m.weight_ = weight;
  m.bias_ = bias;
  return m;
}

PiModel PiModel::oracle(Eigen::VectorXd p_two_per_layer) {
  for (Eigen::Index i = 0; i < p_two_per_layer.size(); ++i) {
    if (p_two_per_layer[i] < 0.0 || p_two_per_layer[i] > 1.0) {
      throw std::invalid_argument("PiModel: p_two outside [0,1]");
    }
  }
  PiModel m;
  m.oracle_ = true;
  m.p_two_ = std::move(p_two_per_layer);
  return m;
}

double PiModel::p_two(int layer, double feature) const {
  if (oracle_) {
    if (layer < 0 || layer >= p_two_.size()) {
      throw std::invalid_argument("PiModel: layer outside oracle table");
    }
    return p_two_[layer];
  }
  return 1.0 / (1.0 + std::exp(-(weight_ * feature + bias_)));
}

namespace {

double feature_mean_before(const Eigen::MatrixXd& u, Eigen::Index row, int layer) {
  if (layer == 0) return 0.5;  // no history: neutral null mean
  double s = 0.0;
  for (int l = 0; l < layer; ++l) s += u(row, l);
  return s / static_cast<double>(layer);
}

double bayes_loglik(const Eigen::MatrixXd& u, const PiModel& pi) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < u.rows(); ++t) {
    for (int l = 0; l < u.cols(); ++l) {
      const double p2 = pi.p_two(l, feature_mean_before(u, t, l));
      double lik = (1.0 - p2) * 1.0 + p2 * 2.0 * u(t, l);
      if (lik < 1e-300) lik = 1e-300;
      total += std::log(lik);
    }
  }
  return total;
}

}  // namespace

double bayes_score(const Eigen::MatrixXd& u, const PiModel& pi, double prior_w) {
  if (!(prior_w > 0.0 && prior_w < 1.0)) {
    throw std::invalid_argument("bayes_score: prior must be in (0,1)");
  }
  const double logit = bayes_loglik(u, pi) + std::log(prior_w / (1.0 - prior_w));
  return 1.0 / (1.0 + std::exp(-logit));
}

// ---- per-position decoders -------------------------------------------------

namespace {

Eigen::MatrixXd mirror_matrix(const Eigen::MatrixXd& u, int msg_bits, int symbol) {
  Eigen::MatrixXd out(u.rows(), u.cols());
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      out(r, c) = mirror_for(u(r, c), msg_bits, symbol);
    }
  }
  return out;
}

}  // namespace

DecodeOutcome decode_position_gumbel(std::span<const double> u, int msg_bits) {
  if (u.empty()) return {0, true};
  const int n = 1 << msg_bits;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> mirrored(u.size());
  for (int sym = 0; sym < n; ++sym) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      mirrored[i] = mirror_for(u[i], msg_bits, sym);
    }
    const double s = log_score(mirrored);
    if (s > best_score) {
      best_score = s;
      best = sym;
    }
  }
  return {best, false};
}

DecodeOutcome decode_position_wmean(const Eigen::MatrixXd& u,
                                    const Eigen::VectorXd& alpha, int msg_bits) {
  if (u.rows() == 0) return {0, true};
  const int n = 1 << msg_bits;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int sym = 0; sym < n; ++sym) {
    const double s = wmean_score(mirror_matrix(u, msg_bits, sym), alpha);
    if (s > best_score) {
      best_score = s;
      best = sym;
    }
  }
  return {best, false};
}

DecodeOutcome decode_position_bayes(const Eigen::MatrixXd& u, const PiModel& pi,
                                    int msg_bits, std::span<const double> msg_prior) {
  if (u.rows() == 0) return {0, true};
  const int n = 1 << msg_bits;
  if (!msg_prior.empty() && static_cast<int>(msg_prior.size()) != n) {
    throw std::invalid_argument("decode_position_bayes: prior length mismatch");
  }
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int sym = 0; sym < n; ++sym) {
    const double prior = msg_prior.empty() ? 1.0 / n : msg_prior[sym];
    const double lp = prior > 0.0 ? std::log(prior) : -1e300;
    const double s = lp + bayes_loglik(mirror_matrix(u, msg_bits, sym), pi);
    if (s > best_score) {
      best_score = s;
      best = sym;
    }
  }
  return {best, false};
}

// ---- detection -------------------------------------------------------------

DetectionReport detect(std::span<const std::int64_t> tokens,
                       const WatermarkParams& params, const DetectOptions& opts) {
  params.validate();
  if ((opts.decoder == DecoderKind::kBayes || opts.scorer == ScorerKind::kBayes) &&
      opts.pi == nullptr) {
    throw std::invalid_argument("detect: Bayes decoder/scorer needs a pi model");
  }
  const int h = params.cabs.context;
  const int layers = params.num_layers();
  const Eigen::VectorXd alpha = params.sampler == SamplerKind::kTournament
                                    ? params.tournament.weights()
                                    : Eigen::VectorXd::Ones(1);

  DetectionReport report;
  report.threshold = opts.threshold;
  report.decoded.assign(params.num_positions, 0);
  report.empty_positions.assign(params.num_positions, true);

  // bucket recomputed u-values by replayed position
  std::vector<std::vector<Eigen::VectorXd>> buckets(params.num_positions);
  CabsScheduler scheduler(params.cabs, params.key);
  const int n = static_cast<int>(tokens.size());
  for (int t = h; t < n; ++t) {
    const auto ctx = tokens.subspan(t - h, h);
    const auto pos = scheduler.assign_token(ctx, tokens[t]);
    if (!pos.has_value()) continue;
    const ContextWindow cw(std::vector<std::int64_t>(ctx.begin(), ctx.end()), h);
    Eigen::VectorXd u(layers);
    for (int l = 0; l < layers; ++l) {
      u[l] = prf_uniform(params.key, cw, tokens[t], l + 1);
    }
    buckets[*pos].push_back(std::move(u));
    report.eligible_tokens += 1;
  }

  report.position_u.resize(params.num_positions);
  for (int p = 0; p < params.num_positions; ++p) {
    Eigen::MatrixXd m(buckets[p].size(), layers);
    for (std::size_t r = 0; r < buckets[p].size(); ++r) m.row(r) = buckets[p][r];
    report.position_u[p] = std::move(m);
  }

  // decode each position
  for (int p = 0; p < params.num_positions; ++p) {
    const Eigen::MatrixXd& u = report.position_u[p];
    DecodeOutcome d;
    switch (opts.decoder) {
      case DecoderKind::kGumbel: {
        std::vector<double> flat(u.data(), u.data() + u.size());
        d = decode_position_gumbel(flat, params.msg_bits);
        break;
      }
      case DecoderKind::kWeightedMean:
        d = decode_position_wmean(u, alpha, params.msg_bits);
        break;
      case DecoderKind::kBayes:
        d = decode_position_bayes(u, *opts.pi, params.msg_bits, opts.msg_prior);
        break;
    }
    report.decoded[p] = d.symbol;
    report.empty_positions[p] = d.empty;
  }

  // re-mirror by the decoded symbols and aggregate
  Eigen::MatrixXd all(report.eligible_tokens, layers);
  Eigen::Index row = 0;
  for (int p = 0; p < params.num_positions; ++p) {
    const Eigen::MatrixXd& u = report.position_u[p];
    for (Eigen::Index r = 0; r < u.rows(); ++r, ++row) {
      for (int l = 0; l < layers; ++l) {
        all(row, l) = mirror_for(u(r, l), params.msg_bits, report.decoded[p]);
      }
    }
  }

  switch (opts.scorer) {
    case ScorerKind::kLog: {
      std::vector<double> flat(all.data(), all.data() + all.size());
      report.score = log_score(flat);
      break;
    }
    case ScorerKind::kWeightedMean:
      report.score = wmean_score(all, alpha);
      break;
    case ScorerKind::kBayes:
      report.score = bayes_score(all, *opts.pi, opts.prior_w);
      break;
  }
  report.decision = report.eligible_tokens > 0 && report.score > opts.threshold;
  return report;
}

// ---- pi-model training -----------------------------------------------------

std::vector<PiSample> make_pi_training_samples(const TokenDistribution& p,
                                               int layers, int n_brackets,
                                               std::uint64_t seed) {
  if (layers < 1 || layers > 10) {
    throw std::invalid_argument("make_pi_training_samples: layers in [1,10]");
  }
  if (!is_distribution(p)) {
    throw std::invalid_argument("make_pi_training_samples: not a distribution");
  }
  SplitMix rng(seed);
  const int v = static_cast<int>(p.size());
  const int leaves = 1 << layers;
  std::vector<PiSample> samples;
  samples.reserve(static_cast<std::size_t>(layers) * n_brackets);

  std::vector<int> bracket(leaves);
  for (int b = 0; b < n_brackets; ++b) {
    Eigen::MatrixXd u(layers, v);
    for (int l = 0; l < layers; ++l) {
      for (int i = 0; i < v; ++i) u(l, i) = rng.next_uniform();
    }
    for (int i = 0; i < leaves; ++i) bracket[i] = sample_categorical(p, rng.next_uniform());

    // play the bracket, remembering each surviving slot's per-layer opponent
    std::vector<int> alive = bracket;
    std::vector<std::vector<int>> opp_history(alive.size());
    for (int l = 0; l < layers; ++l) {
      std::vector<int> next;
      std::vector<std::vector<int>> next_hist;
      for (std::size_t i = 0; i + 1 < alive.size(); i += 2) {
        const int a = alive[i], b2 = alive[i + 1];
        int win, lose;
        if (u(l, a) > u(l, b2)) {
          win = a; lose = b2;
        } else if (u(l, b2) > u(l, a)) {
          win = b2; lose = a;
        } else {
          if (rng.next_uniform() < 0.5) { win = a; lose = b2; } else { win = b2; lose = a; }
        }
        std::vector<int> hist = (win == a) ? opp_history[i] : opp_history[i + 1];
        hist.push_back(lose);
        next.push_back(win);
        next_hist.push_back(std::move(hist));
      }
      alive = std::move(next);
      opp_history = std::move(next_hist);
    }
    const int winner = alive[0];
    const std::vector<int>& opps = opp_history[0];
    for (int l = 0; l < layers; ++l) {
      PiSample s;
      s.layer = l;
      s.u = u(l, winner);
      s.pi = opps[l] == winner ? 1 : 2;
      s.feature = 0.5;
      if (l > 0) {
        double acc = 0.0;
        for (int j = 0; j < l; ++j) acc += u(j, winner);
        s.feature = acc / l;
      }
      samples.push_back(s);
    }
  }
  return samples;
}

PiModel train_pi_model(std::span<const PiSample> samples) {
  long n1 = 0, n2 = 0;
  for (const auto& s : samples) {
    if (s.pi == 1) ++n1;
    else if (s.pi == 2) ++n2;
    else throw std::invalid_argument("train_pi_model: labels must be 1 or 2");
  }
  if (n1 == 0 || n2 == 0) {
    throw std::invalid_argument("train_pi_model: both classes must be present");
  }
  double w = 0.0, b = 0.0;
  const double n = static_cast<double>(samples.size());
  const double lr = 2.0;
  for (int epoch = 0; epoch < 10000; ++epoch) {
    double gw = 0.0, gb = 0.0;
    for (const auto& s : samples) {
      const double y = s.pi == 2 ? 1.0 : 0.0;
      const double pred = 1.0 / (1.0 + std::exp(-(w * s.feature + b)));
      const double err = pred - y;
      gw += err * s.feature;
      gb += err;
    }
    gw /= n;
    gb /= n;
    w -= lr * gw;
    b -= lr * gb;
    if (std::fabs(gw) < 1e-6 && std::fabs(gb) < 1e-6) break;
  }
  return PiModel::logistic(w, b);
}

}  // namespace mirrorwm
