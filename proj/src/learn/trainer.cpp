#include "ipseq/learn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace ipseq {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adadelta"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adadelta") return OptimizerKind::kAdadelta;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be a finite value >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(adadelta_rho > 0.0 && adadelta_rho < 1.0)) throw std::invalid_argument("adadelta_rho must be in (0, 1)");
  if (!(adadelta_epsilon > 0.0)) throw std::invalid_argument("adadelta_epsilon must be > 0");
}

void write_loss_curve(std::ostream& out, std::span<const LossPoint> curve) {
  out.precision(17);
  for (const auto& p : curve) out << p.epoch << '\t' << p.batch << '\t' << p.loss << '\n';
}

double corpus_loss(const Seq2Seq& model, std::span<const TrainingPair> pairs) {
  double nll = 0.0, tokens = 0.0;
  for (const auto& p : pairs) {
    nll -= model.sequence_logprob(p.source, p.target);
    tokens += static_cast<double>(p.target.size());
  }
  if (tokens == 0.0) throw std::invalid_argument("corpus_loss: no pairs");
  return nll / tokens;
}

double accumulate_gradients(Seq2Seq& model, const TrainingPair& pair, double token_count) {
  Graph g(&model.params());
  Var total = model.build_sequence_logprob(g, model.build_encoder(g, pair.source), pair.target);
  Var loss = g.mul(total, g.constant(-1.0 / token_count));
  g.forward();
  g.backward(loss, Tensor::scalar(1.0), &model.params());
  return g.value(loss)[0];
}

double clip_gradients(ParamStore& params, double max_norm) {
  const double norm = params.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& e : params.entries()) {
      for (auto& g : e.grad.mutable_data()) g *= scale;
    }
  }
  return norm;
}

namespace {

Tensor& slot(OptimizerState& state, const std::string& name, const Shape& shape) {
  for (auto& [n, t] : state.slots) {
    if (n == name) {
      if (t.shape() != shape) throw std::invalid_argument("optimizer state: shape mismatch for " + name);
      return t;
    }
  }
  state.slots.emplace_back(name, Tensor::zeros(shape));
  return state.slots.back().second;
}

}  // namespace

void optimizer_step(ParamStore& params, OptimizerState& state, const TrainConfig& config) {
  if (config.learning_rate == 0.0) return;
  const auto kind = std::string(to_string(config.optimizer));
  if (!state.kind.empty() && state.kind != kind) state.slots.clear();
  state.kind = kind;
  const double lr = config.learning_rate;

  for (auto& e : params.entries()) {
    auto value = e.value.mutable_data();
    auto grad = e.grad.data();
    if (config.optimizer == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
      continue;
    }
    const double rho = config.adadelta_rho, eps = config.adadelta_epsilon;
    auto g2 = slot(state, e.name + "/g2", e.value.shape()).mutable_data();
    auto dx2 = slot(state, e.name + "/dx2", e.value.shape()).mutable_data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      g2[i] = rho * g2[i] + (1.0 - rho) * grad[i] * grad[i];
      const double dx = -std::sqrt(dx2[i] + eps) / std::sqrt(g2[i] + eps) * grad[i];
      dx2[i] = rho * dx2[i] + (1.0 - rho) * dx * dx;
      value[i] += lr * dx;
    }
  }
}

std::vector<LossPoint> train(Seq2Seq& model, OptimizerState& state, std::span<const TrainingPair> corpus,
                             const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::vector<LossPoint> curve;
  auto& params = model.params();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      double tokens = 0.0;
      for (std::size_t i = begin; i < end; ++i) tokens += static_cast<double>(corpus[order[i]].target.size());
      params.zero_grad();
      double loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) loss += accumulate_gradients(model, corpus[order[i]], tokens);
      if (config.learning_rate != 0.0) {
        clip_gradients(params, config.gradient_clip_norm);
        optimizer_step(params, state, config);
      }
      LossPoint point{epoch, ++batch, loss};
      curve.push_back(point);
      if (progress) progress(point);
    }
  }
  params.zero_grad();
  return curve;
}

UpdateReport online_update(Seq2Seq& model, OptimizerState& state, const SourceObject& source,
                           std::vector<TokenId> target, const TrainConfig& config) {
  config.validate();
  const auto vocab = model.config().tgt_vocab_size;
  for (auto& t : target) {
    if (t >= vocab) t = kUnkId;
  }
  if (target.empty() || target.back() != kEosId) target.push_back(kEosId);
  const TrainingPair pair{source, std::move(target)};
  const double tokens = static_cast<double>(pair.target.size());

  auto& params = model.params();
  params.zero_grad();
  UpdateReport report{};
  report.loss_before = accumulate_gradients(model, pair, tokens);
  if (config.learning_rate != 0.0) {
    clip_gradients(params, config.gradient_clip_norm);
    optimizer_step(params, state, config);
    report.loss_after = -model.sequence_logprob(pair.source, pair.target) / tokens;
  } else {
    report.loss_after = report.loss_before;
  }
  params.zero_grad();
  return report;
}

std::vector<TrainingPair> make_pairs(const ParallelCorpus& corpus, const Tokenizer& source, const Tokenizer& target) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto src = source.tokenize(corpus.sources[i]);
    src.pop_back();  // the encoder sees content tokens only
    if (src.empty()) throw std::invalid_argument("make_pairs: empty source at line " + std::to_string(i + 1));
    pairs.push_back({std::move(src), target.tokenize(corpus.targets[i])});
  }
  return pairs;
}

double exact_match(const Seq2Seq& model, const Tokenizer& target, std::span<const TrainingPair> pairs,
                   const BeamParams& params) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : pairs) {
    auto hyp = beam_search(model, target, model.encode(p.source), params);
    if (!hyp.empty() && hyp.front().token_ids == p.target) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

}  // namespace ipseq
