#pragma once

// Loop-by-loop re-implementation of the encoder-decoder forward pass, used only
// as an independent reference in tests. Reads raw parameter values; shares no
// arithmetic with the graph engine.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ipseq/model/seq2seq.hpp"

namespace ipseq::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat param(const ParamStore& ps, const std::string& name) {
  const auto& t = ps.value(name);
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

inline Vec row_of(const Mat& m, std::size_t r) { return m[r]; }

// x (1 x n) times W (n x k)
inline Vec vecmat(const Vec& x, const Mat& w) {
  Vec out(w[0].size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec gru(const ParamStore& ps, const std::string& p, const Vec& x, const Vec& h) {
  const std::size_t n = h.size();
  auto pre = [&](const char* k, const Vec& hh) {
    Vec a = vecmat(x, param(ps, p + ".W" + k));
    Vec b = vecmat(hh, param(ps, p + ".U" + k));
    Vec bias = param(ps, p + ".b" + k)[0];
    for (std::size_t j = 0; j < n; ++j) a[j] += b[j] + bias[j];
    return a;
  };
  Vec z = pre("z", h), r = pre("r", h);
  for (std::size_t j = 0; j < n; ++j) {
    z[j] = sigmoid(z[j]);
    r[j] = sigmoid(r[j]);
  }
  Vec rh(n);
  for (std::size_t j = 0; j < n; ++j) rh[j] = r[j] * h[j];
  Vec cand = pre("h", rh);
  Vec out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = (1.0 - z[j]) * h[j] + z[j] * std::tanh(cand[j]);
  return out;
}

struct Encoded {
  Mat annotations;
  Vec init;
};

inline Encoded finish(const ParamStore& ps, Mat annotations) {
  const std::size_t T = annotations.size(), C = annotations[0].size();
  Vec mean(C, 0.0);
  for (const auto& row : annotations)
    for (std::size_t j = 0; j < C; ++j) mean[j] += row[j];
  for (auto& v : mean) v /= static_cast<double>(T);
  Vec init = vecmat(mean, param(ps, "init.W"));
  Vec b = param(ps, "init.b")[0];
  for (std::size_t j = 0; j < init.size(); ++j) init[j] = std::tanh(init[j] + b[j]);
  return {std::move(annotations), std::move(init)};
}

inline Encoded encode_text(const ParamStore& ps, const std::vector<TokenId>& ids, std::size_t hidden) {
  const Mat emb = param(ps, "src_embed");
  const std::size_t T = ids.size();
  Mat fwd(T), bwd(T);
  Vec h(hidden, 0.0);
  for (std::size_t t = 0; t < T; ++t) fwd[t] = h = gru(ps, "enc_fwd", emb[ids[t]], h);
  h.assign(hidden, 0.0);
  for (std::size_t t = T; t-- > 0;) bwd[t] = h = gru(ps, "enc_bwd", emb[ids[t]], h);
  Mat ann(T);
  for (std::size_t t = 0; t < T; ++t) {
    ann[t] = fwd[t];
    ann[t].insert(ann[t].end(), bwd[t].begin(), bwd[t].end());
  }
  return finish(ps, std::move(ann));
}

inline Encoded encode_features(const ParamStore& ps, const Mat& rows) {
  const Mat w = param(ps, "feat.W");
  const Vec b = param(ps, "feat.b")[0];
  Mat ann;
  for (const auto& r : rows) {
    Vec a = vecmat(r, w);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = std::tanh(a[j] + b[j]);
    ann.push_back(std::move(a));
  }
  return finish(ps, std::move(ann));
}

struct Step {
  Vec logprobs;
  Vec hidden;
  Vec attention;
};

inline Step step(const ParamStore& ps, const Encoded& enc, const Vec& hidden, TokenId prev) {
  const Vec e = param(ps, "tgt_embed")[prev];
  const Vec s1 = gru(ps, "dec1", e, hidden);
  const Mat att_w = param(ps, "att.W");
  const Vec q = vecmat(s1, param(ps, "att.U"));
  const Vec v = param(ps, "att.v")[0];
  const std::size_t T = enc.annotations.size();
  Vec scores(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec k = vecmat(enc.annotations[t], att_w);
    double s = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) s += v[j] * std::tanh(k[j] + q[j]);
    scores[t] = s;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  Vec alpha(T);
  for (std::size_t t = 0; t < T; ++t) z += alpha[t] = std::exp(scores[t] - mx);
  for (auto& a : alpha) a /= z;
  Vec ctx(enc.annotations[0].size(), 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < ctx.size(); ++j) ctx[j] += alpha[t] * enc.annotations[t][j];
  const Vec s2 = gru(ps, "dec2", ctx, s1);
  Vec pre = vecmat(s2, param(ps, "out.Ws"));
  const Vec pc = vecmat(ctx, param(ps, "out.Wc"));
  const Vec pe = vecmat(e, param(ps, "out.We"));
  const Vec pb = param(ps, "out.b")[0];
  for (std::size_t j = 0; j < pre.size(); ++j) pre[j] = std::tanh(pre[j] + pc[j] + pe[j] + pb[j]);
  Vec logits = vecmat(pre, param(ps, "out.Wv"));
  const Vec bv = param(ps, "out.bv")[0];
  for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += bv[j];
  const double lm = *std::max_element(logits.begin(), logits.end());
  double lz = 0.0;
  for (double l : logits) lz += std::exp(l - lm);
  Vec lp(logits.size());
  for (std::size_t j = 0; j < lp.size(); ++j) lp[j] = logits[j] - lm - std::log(lz);
  return {lp, s2, alpha};
}

}  // namespace ipseq::oracle
