#pragma once

// Straightforward re-derivation of the encoder-decoder forward pass with
// plain loops, used as an oracle against the Eigen implementation.

#include <cmath>
#include <vector>

#include "codemine/encdec.hpp"

namespace codemine::testing {

using Vec = std::vector<double>;

inline Vec matvec(const Eigen::MatrixXd& m, const Vec& x, int row0, int rows) {
  Vec out(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < m.cols(); ++c) out[r] += m(row0 + r, c) * x[static_cast<std::size_t>(c)];
  return out;
}

inline Vec row_of(const Eigen::MatrixXd& m, int r) {
  Vec v(static_cast<std::size_t>(m.cols()));
  for (int c = 0; c < m.cols(); ++c) v[c] = m(r, c);
  return v;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec ref_cell(const CellParams& p, CellType type, const Vec& x, const Vec& h) {
  const int H = static_cast<int>(h.size());
  Vec out(h.size());
  if (type == CellType::tanh) {
    Vec a = matvec(p.wx, x, 0, H), b = matvec(p.wh, h, 0, H);
    for (int i = 0; i < H; ++i) out[i] = std::tanh(a[i] + b[i] + p.b[i]);
    return out;
  }
  Vec xz = matvec(p.wx, x, 0, H), hz = matvec(p.wh, h, 0, H);
  Vec xr = matvec(p.wx, x, H, H), hr = matvec(p.wh, h, H, H);
  Vec z(h.size()), r(h.size()), rh(h.size());
  for (int i = 0; i < H; ++i) {
    z[i] = sig(xz[i] + hz[i] + p.b[i]);
    r[i] = sig(xr[i] + hr[i] + p.b[H + i]);
    rh[i] = r[i] * h[i];
  }
  Vec xn = matvec(p.wx, x, 2 * H, H), hn = matvec(p.wh, rh, 2 * H, H);
  for (int i = 0; i < H; ++i) {
    const double n = std::tanh(xn[i] + hn[i] + p.b[2 * H + i]);
    out[i] = (1 - z[i]) * n + z[i] * h[i];
  }
  return out;
}

inline std::vector<Vec> ref_encode(const EncDecModel& m, const std::vector<int>& src) {
  Vec h(static_cast<std::size_t>(m.dims.hidden), 0.0);
  std::vector<Vec> states;
  for (int id : src) {
    h = ref_cell(m.params.enc, m.dims.cell, row_of(m.params.src_embed, id), h);
    states.push_back(h);
  }
  return states;
}

struct RefStep {
  Vec probs;
  Vec attention;
};

/// Next-token distribution after feeding BOS + prefix into the decoder.
inline RefStep ref_step(const EncDecModel& m, const std::vector<Vec>& enc, const std::vector<int>& prefix) {
  const auto& p = m.params;
  const int H = m.dims.hidden;
  Vec s = enc.back();
  std::vector<int> inputs{Vocabulary::kBos};
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  for (int id : inputs) s = ref_cell(p.dec, m.dims.cell, row_of(p.tgt_embed, id), s);
  Vec q = matvec(p.att_dec, s, 0, H);
  Vec scores;
  for (const auto& h : enc) {
    Vec k = matvec(p.att_enc, h, 0, H);
    double e = 0;
    for (int i = 0; i < H; ++i) e += p.att_v[i] * std::tanh(q[i] + k[i]);
    scores.push_back(e);
  }
  double mx = scores[0];
  for (double e : scores) mx = std::max(mx, e);
  double z = 0;
  for (double& e : scores) z += (e = std::exp(e - mx));
  for (double& e : scores) e /= z;
  Vec o(2 * static_cast<std::size_t>(H), 0.0);
  for (int i = 0; i < H; ++i) o[i] = s[i];
  for (std::size_t j = 0; j < enc.size(); ++j)
    for (int i = 0; i < H; ++i) o[H + i] += scores[j] * enc[j][i];
  Vec logits = matvec(p.out_w, o, 0, static_cast<int>(p.out_w.rows()));
  for (std::size_t v = 0; v < logits.size(); ++v) logits[v] += p.out_b[static_cast<Eigen::Index>(v)];
  mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  z = 0;
  for (double& l : logits) z += (l = std::exp(l - mx));
  for (double& l : logits) l /= z;
  return {logits, scores};
}

/// Product over steps of P(target_t | ...) including EOS, as a plain probability.
inline double ref_sequence_prob(const EncDecModel& m, const std::vector<int>& src, const std::vector<int>& tgt) {
  auto enc = ref_encode(m, src);
  double prob = 1.0;
  std::vector<int> prefix;
  for (std::size_t t = 0; t <= tgt.size(); ++t) {
    const int y = t < tgt.size() ? tgt[t] : Vocabulary::kEos;
    prob *= ref_step(m, enc, prefix).probs[static_cast<std::size_t>(y)];
    if (t < tgt.size()) prefix.push_back(tgt[t]);
  }
  return prob;
}

}  // namespace codemine::testing
