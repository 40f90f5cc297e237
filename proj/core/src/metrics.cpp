// Copyright 2026 The JGHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jghm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "jghm/belief.hpp"
#include "jghm/bp.hpp"
#include "jghm/diffusion.hpp"
#include "jghm/oracle.hpp"
#include "jghm/parallel.hpp"
#include "jghm/sampler.hpp"

namespace jghm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

template <typename T>
std::string optional_field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_integral_v<T>) return std::to_string(*v);
  else return format_double(*v);
}

std::optional<double> p_flip_of(const JghmModel& model) {
  if (model.metadata) return model.metadata->p_flip;
  return std::nullopt;
}

RiskReport make_report(std::string name, const MeanSe& ms, std::size_t n, ReportMeta meta) {
  RiskReport r;
  r.name = std::move(name);
  r.estimate = ms.mean;
  r.se = ms.se;
  r.n = n;
  r.meta = meta;
  return r;
}

double cross_entropy(std::span<const double> target, std::span<const double> predicted) {
  double ce = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] <= 0.0) continue;
    if (predicted[i] <= 0.0) return kInf;
    ce -= target[i] * std::log(predicted[i]);
  }
  return ce;
}

std::vector<std::vector<std::vector<int>>> class_texts(const JghmModel& model, int M, rng::Stream& stream) {
  std::vector<std::vector<std::vector<int>>> texts(model.states());
  for (int y = 0; y < model.states(); ++y) {
    texts[y].reserve(M);
    for (int j = 0; j < M; ++j) texts[y].push_back(sample_text_for_class(model, y, stream));
  }
  return texts;
}

double squared_error(std::span<const int> x, std::span<const double> m) {
  double e = 0.0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    const double diff = (x[v] + 1) - m[v];
    e += diff * diff;
  }
  return e / static_cast<double>(x.size());
}

void require_modality(const Encoder& encoder, Modality m, const char* who) {
  if (encoder.modality() != m) {
    throw InvariantError(std::string(who) + ": encoder must act on the " + modality_name(m) + " modality");
  }
}

}  // namespace

std::string csv_header() { return "name,estimate,se,n,K,M,t,p_flip_train,p_flip_test,seed"; }

std::string to_csv_row(const RiskReport& r) {
  return r.name + "," + format_double(r.estimate) + "," + format_double(r.se) + "," + std::to_string(r.n) +
         "," + optional_field(r.meta.K) + "," + optional_field(r.meta.M) + "," + optional_field(r.meta.t) +
         "," + optional_field(r.meta.p_flip_train) + "," + optional_field(r.meta.p_flip_test) + "," +
         std::to_string(r.meta.seed);
}

MeanSe mean_and_se(std::span<const double> values) {
  MeanSe out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (!std::isfinite(out.mean) || values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

double infonce_loss(const ScoreFunction& score, const std::vector<std::vector<int>>& images,
                    const std::vector<std::vector<int>>& texts) {
  const std::size_t K = images.size();
  std::vector<std::vector<double>> e_im(K);
  std::vector<std::vector<double>> e_tx(K);
  for (std::size_t j = 0; j < K; ++j) {
    e_im[j] = score.embed_image(images[j]);
    e_tx[j] = score.embed_text(texts[j]);
  }
  std::vector<double> row(K);
  std::vector<double> col(K);
  for (std::size_t j = 0; j < K; ++j) {
    row[j] = score.link(e_im[0], e_tx[j]);
    col[j] = score.link(e_im[j], e_tx[0]);
  }
  const double positive = row[0];
  if (!std::isfinite(positive)) return kInf;
  return (log_sum_exp(row) - positive) + (log_sum_exp(col) - positive);
}

RiskReport clip_risk(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int K,
                     std::size_t n, std::uint64_t seed) {
  if (K < 2) throw InvariantError("clip_risk: K must be at least 2");
  if (n < 1) throw InvariantError("clip_risk: n must be at least 1");
  ReportMeta meta{K, std::nullopt, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
  if (score->is_constant()) {
    return make_report("clip_risk", {2.0 * std::log(static_cast<double>(K)), 0.0}, n, meta);
  }
  const auto s = maybe_cached(std::move(score), model.topology);
  const auto losses = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kContrastive, i, static_cast<std::uint64_t>(K));
    const ContrastiveBatch batch = sample_contrastive_batch(model, K, stream);
    return infonce_loss(*s, batch.images, batch.texts);
  });
  return make_report("clip_risk", mean_and_se(losses), n, meta);
}

std::vector<ClipLimitRow> clip_excess_and_mi_limit(const JghmModel& model,
                                                   std::shared_ptr<const ScoreFunction> score,
                                                   std::span<const int> Ks, std::size_t n,
                                                   std::uint64_t seed) {
  const auto star = maybe_cached(std::make_shared<OptimalScore>(model), model.topology);
  const auto s = maybe_cached(std::move(score), model.topology);
  std::vector<ClipLimitRow> rows;
  for (int K : Ks) {
    if (K < 2) throw InvariantError("clip_excess_and_mi_limit: K must be at least 2");
    std::vector<double> mi(n);
    std::vector<double> excess(n);
    parallel_for(n, [&](std::size_t i) {
      rng::Stream stream(seed, rng::Purpose::kContrastive, i, static_cast<std::uint64_t>(K));
      const ContrastiveBatch batch = sample_contrastive_batch(model, K, stream);
      const double l_star = infonce_loss(*star, batch.images, batch.texts);
      const double l = infonce_loss(*s, batch.images, batch.texts);
      mi[i] = -0.5 * l_star + std::log(static_cast<double>(K));
      excess[i] = l - l_star;
    });
    ReportMeta meta{K, std::nullopt, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
    rows.push_back({K, make_report("clip_mi_limit", mean_and_se(mi), n, meta),
                    make_report("clip_excess", mean_and_se(excess), n, meta)});
  }
  return rows;
}

std::vector<double> zsc_predict_from_texts(const ScoreFunction& score, std::span<const double> prior,
                                           std::span<const int> x_im,
                                           const std::vector<std::vector<std::vector<int>>>& texts) {
  if (texts.size() != prior.size()) throw InvariantError("zsc_predict: one text set per class required");
  const auto e_im = score.embed_image(x_im);
  std::vector<double> logits(prior.size(), kNegInf);
  std::vector<double> values;
  for (std::size_t y = 0; y < prior.size(); ++y) {
    if (texts[y].empty()) throw InvariantError("zsc_predict: M must be at least 1");
    if (prior[y] <= 0.0) continue;
    values.resize(texts[y].size());
    for (std::size_t j = 0; j < texts[y].size(); ++j) values[j] = score.link(e_im, score.embed_text(texts[y][j]));
    const double lme = log_sum_exp(values) - std::log(static_cast<double>(values.size()));
    logits[y] = lme + std::log(prior[y]);
  }
  bool any = false;
  for (double l : logits) any = any || std::isfinite(l);
  if (!any) throw InvariantError("zsc_predict: every class has zero aggregated score");
  return softmax(logits);
}

std::vector<double> zsc_predict(const JghmModel& model, const ScoreFunction& score,
                                std::span<const int> x_im, int M, rng::Stream& stream) {
  if (M < 1) throw InvariantError("zsc_predict: M must be at least 1");
  return zsc_predict_from_texts(score, model.root_prior, x_im, class_texts(model, M, stream));
}

RiskReport zsc_kl(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                  std::size_t n, std::uint64_t seed) {
  if (M < 1) throw InvariantError("zsc_kl: M must be at least 1");
  const auto s = maybe_cached(std::move(score), model.topology);
  const auto kls = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kZsc, i);
    const Sample sample = sample_joint(model, stream);
    const auto predicted = zsc_predict(model, *s, sample.image(), M, stream);
    const auto target = root_posterior(model, Modality::kImage, sample.image());
    return oracle::kl_divergence(target, predicted);
  });
  ReportMeta meta{std::nullopt, M, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
  return make_report("zsc_kl", mean_and_se(kls), n, meta);
}

RiskReport zsc_classifier_risk(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                               std::size_t n, std::uint64_t seed) {
  if (M < 1) throw InvariantError("zsc_classifier_risk: M must be at least 1");
  const auto s = maybe_cached(std::move(score), model.topology);
  const auto losses = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kZsc, i);
    const Sample sample = sample_joint(model, stream);
    const auto predicted = zsc_predict(model, *s, sample.image(), M, stream);
    return cross_entropy(root_posterior(model, Modality::kImage, sample.image()), predicted);
  });
  ReportMeta meta{std::nullopt, M, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
  return make_report("zsc_classifier", mean_and_se(losses), n, meta);
}

RiskReport zsc_accuracy(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                        std::size_t n, std::uint64_t seed) {
  if (M < 1) throw InvariantError("zsc_accuracy: M must be at least 1");
  const auto s = maybe_cached(std::move(score), model.topology);
  const auto hits = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kZsc, i);
    const Sample sample = sample_joint(model, stream);
    const auto predicted = zsc_predict(model, *s, sample.image(), M, stream);
    const auto best = std::max_element(predicted.begin(), predicted.end()) - predicted.begin();
    return best == sample.root ? 1.0 : 0.0;
  });
  ReportMeta meta{std::nullopt, M, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
  return make_report("zsc_accuracy", mean_and_se(hits), n, meta);
}

RiskReport cdm_estimation_error(const JghmModel& model, const Encoder& text_encoder, double t,
                                std::size_t n, std::uint64_t seed) {
  require_modality(text_encoder, Modality::kText, "cdm_estimation_error");
  if (t < 0.0) throw InvariantError("cdm_estimation_error: t must be non-negative");
  const oracle::JointTable table = oracle::enumerate_joint(model);
  const oracle::Fibers fibers = oracle::encoder_fibers(table, text_encoder);
  std::vector<std::vector<double>> weights(fibers.count, std::vector<double>(table.n_tx, 0.0));
  for (std::size_t y = 0; y < table.n_tx; ++y) weights[fibers.fiber_of[y]][y] = 1.0;

  const auto errors = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kCdm, i);
    const Sample sample = sample_joint(model, stream);
    const NoisyImage z = noise_image(sample.image(), t, stream);
    const auto m_star = bayes_denoiser(model, z, sample.text());
    const auto fiber = fibers.fiber_of[configuration_index(sample.text(), table.states)];
    const auto m_hat = oracle::exact_denoiser_weighted(table, z, weights[fiber]);
    double e = 0.0;
    for (std::size_t v = 0; v < m_star.size(); ++v) e += (m_star[v] - m_hat[v]) * (m_star[v] - m_hat[v]);
    return e / static_cast<double>(m_star.size());
  });
  ReportMeta meta{std::nullopt, std::nullopt, t, p_flip_of(model), p_flip_of(model), seed};
  RiskReport r = make_report("cdm_estimation_error", mean_and_se(errors), n, meta);
  const double S = model.states();
  r.bound = 2.0 * S * S * oracle::exact_suff_encoder(table, text_encoder);
  return r;
}

namespace {

// sum_i KL(mu*(. | x_im, y[0..i)) || mu(. | fiber law, y[0..i))).
double vlm_pair_divergence(const JghmModel& model, const oracle::JointTable& table,
                           std::span<const double> fiber_law, std::span<const int> x_im,
                           std::span<const int> x_tx) {
  const auto mu_star = next_token_posteriors_parallel(model, x_im, x_tx);
  double d = 0.0;
  for (std::size_t i = 0; i < x_tx.size(); ++i) {
    const auto mu_hat = oracle::next_token_from_text_law(table, fiber_law, x_tx.first(i));
    d += oracle::kl_divergence(mu_star[i], mu_hat);
  }
  return d;
}

}  // namespace

RiskReport vlm_divergence_exact(const JghmModel& model, const Encoder& image_encoder) {
  require_modality(image_encoder, Modality::kImage, "vlm_divergence");
  const oracle::JointTable table = oracle::enumerate_joint(model);
  const oracle::Fibers fibers = oracle::encoder_fibers(table, image_encoder);
  const auto laws = oracle::fiber_conditionals(table, fibers);
  const auto per_image = parallel_map<double>(table.n_im, [&](std::size_t x) {
    if (table.marginal_im[x] <= 0.0) return 0.0;
    const auto x_im = configuration_from_index(x, table.d_im, table.states);
    double acc = 0.0;
    for (std::size_t y = 0; y < table.n_tx; ++y) {
      const double p = table(x, y);
      if (p <= 0.0) continue;
      const auto x_tx = configuration_from_index(y, table.d_tx, table.states);
      acc += p * vlm_pair_divergence(model, table, laws[fibers.fiber_of[x]], x_im, x_tx);
    }
    return acc;
  });
  double d = 0.0;
  for (double v : per_image) d += v;
  ReportMeta meta{std::nullopt, std::nullopt, std::nullopt, p_flip_of(model), p_flip_of(model), 0};
  RiskReport r = make_report("vlm_divergence", {std::max(d, 0.0), 0.0}, table.n_im * table.n_tx, meta);
  r.bound = oracle::exact_suff_encoder(table, image_encoder);
  return r;
}

RiskReport vlm_divergence(const JghmModel& model, const Encoder& image_encoder, std::size_t n,
                          std::uint64_t seed) {
  require_modality(image_encoder, Modality::kImage, "vlm_divergence");
  const oracle::JointTable table = oracle::enumerate_joint(model);
  const oracle::Fibers fibers = oracle::encoder_fibers(table, image_encoder);
  const auto laws = oracle::fiber_conditionals(table, fibers);
  const auto values = parallel_map<double>(n, [&](std::size_t i) {
    rng::Stream stream(seed, rng::Purpose::kVlm, i);
    const Sample sample = sample_joint(model, stream);
    const auto fiber = fibers.fiber_of[configuration_index(sample.image(), table.states)];
    return vlm_pair_divergence(model, table, laws[fiber], sample.image(), sample.text());
  });
  ReportMeta meta{std::nullopt, std::nullopt, std::nullopt, p_flip_of(model), p_flip_of(model), seed};
  RiskReport r = make_report("vlm_divergence", mean_and_se(values), n, meta);
  r.bound = oracle::exact_suff_encoder(table, image_encoder);
  return r;
}

const char* task_name(Task task) {
  switch (task) {
    case Task::kClip: return "clip";
    case Task::kZsc: return "zsc";
    case Task::kCdm: return "cdm";
    case Task::kVlm: return "vlm";
    case Task::kDiffusion: return "diffusion";
  }
  return "unknown";
}

Task task_from_name(const std::string& name) {
  for (Task t : {Task::kClip, Task::kZsc, Task::kCdm, Task::kVlm, Task::kDiffusion}) {
    if (name == task_name(t)) return t;
  }
  throw InvariantError("unknown task '" + name + "'");
}

MisspecResult misspec_bp_eval(const JghmModel& train, const JghmModel& test, Task task,
                              const EvalParams& params) {
  if (!(train.topology == test.topology)) throw InvariantError("misspec_bp_eval: topologies differ");
  if (params.n < 1) throw InvariantError("misspec_bp_eval: n must be at least 1");
  const std::string base = task_name(task);
  ReportMeta meta;
  meta.p_flip_train = p_flip_of(train);
  meta.p_flip_test = p_flip_of(test);
  meta.seed = params.seed;

  if (task == Task::kDiffusion) {
    rng::Stream text_stream(params.seed, rng::Purpose::kDiffusion, std::numeric_limits<std::uint64_t>::max());
    const std::vector<int> text = sample_joint(test, text_stream).text();
    SdeConfig cfg;
    cfg.horizon = params.horizon;
    cfg.dt = params.dt;
    cfg.n = params.n;
    cfg.seed = params.seed;
    RiskReport bayes = sampled_law_distance(test, text, cfg);
    RiskReport mis = train == test ? bayes : sampled_law_distance(test, text, cfg, &train);
    MisspecResult out;
    out.misspec = mis;
    out.bayes = bayes;
    out.misspec.name = base + "_misspec";
    out.bayes.name = base + "_bayes";
    out.misspec.meta = out.bayes.meta = meta;
    out.bayes.meta.p_flip_train = meta.p_flip_test;
    out.excess = make_report(base + "_excess",
                             {mis.estimate - bayes.estimate, std::hypot(mis.se, bayes.se)}, params.n, meta);
    return out;
  }

  std::shared_ptr<const ScoreFunction> s_train;
  std::shared_ptr<const ScoreFunction> s_test;
  if (task == Task::kClip) {
    s_train = maybe_cached(std::make_shared<OptimalScore>(train), train.topology);
    s_test = maybe_cached(std::make_shared<OptimalScore>(test), test.topology);
  }
  if (task == Task::kClip) meta.K = params.K;
  if (task == Task::kCdm) meta.t = params.t;

  // Matched models share one evaluation, so the excess is exactly zero.
  const bool same = train == test;
  std::vector<double> mis(params.n);
  std::vector<double> bayes(params.n);
  parallel_for(params.n, [&](std::size_t i) {
    switch (task) {
      case Task::kClip: {
        rng::Stream stream(params.seed, rng::Purpose::kContrastive, i, static_cast<std::uint64_t>(params.K));
        const ContrastiveBatch batch = sample_contrastive_batch(test, params.K, stream);
        bayes[i] = infonce_loss(*s_test, batch.images, batch.texts);
        mis[i] = same ? bayes[i] : infonce_loss(*s_train, batch.images, batch.texts);
        break;
      }
      case Task::kZsc: {
        rng::Stream stream(params.seed, rng::Purpose::kZsc, i);
        const Sample sample = sample_joint(test, stream);
        const auto target = root_posterior(test, Modality::kImage, sample.image());
        bayes[i] = cross_entropy(target, target);
        mis[i] = same ? bayes[i] : cross_entropy(target, root_posterior(train, Modality::kImage, sample.image()));
        break;
      }
      case Task::kCdm: {
        rng::Stream stream(params.seed, rng::Purpose::kCdm, i);
        const Sample sample = sample_joint(test, stream);
        const NoisyImage z = noise_image(sample.image(), params.t, stream);
        bayes[i] = squared_error(sample.image(), bayes_denoiser(test, z, sample.text()));
        mis[i] = same ? bayes[i] : squared_error(sample.image(), bayes_denoiser(train, z, sample.text()));
        break;
      }
      case Task::kVlm: {
        rng::Stream stream(params.seed, rng::Purpose::kVlm, i);
        const Sample sample = sample_joint(test, stream);
        auto nll = [&](const JghmModel& m) {
          const auto mu = next_token_posteriors_parallel(m, sample.image(), sample.text());
          double loss = 0.0;
          for (std::size_t k = 0; k < mu.size(); ++k) {
            const double p = mu[k][sample.text()[k]];
            loss += p > 0.0 ? -std::log(p) : kInf;
          }
          return loss;
        };
        bayes[i] = nll(test);
        mis[i] = same ? bayes[i] : nll(train);
        break;
      }
      case Task::kDiffusion:
        break;
    }
  });
  std::vector<double> diff(params.n);
  for (std::size_t i = 0; i < params.n; ++i) diff[i] = mis[i] - bayes[i];

  MisspecResult out;
  out.misspec = make_report(base + "_misspec", mean_and_se(mis), params.n, meta);
  ReportMeta bayes_meta = meta;
  bayes_meta.p_flip_train = meta.p_flip_test;
  out.bayes = make_report(base + "_bayes", mean_and_se(bayes), params.n, bayes_meta);
  out.excess = make_report(base + "_excess", mean_and_se(diff), params.n, meta);
  return out;
}

}  // namespace jghm
