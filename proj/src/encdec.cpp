#include "codemine/encdec.hpp"

#include <cmath>
#include <stdexcept>

namespace codemine {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string direction_code(Direction d) {
  return d == Direction::snippet_given_intent ? "i2s" : "s2i";
}

Direction parse_direction(std::string_view code) {
  if (code == "i2s") return Direction::snippet_given_intent;
  if (code == "s2i") return Direction::intent_given_snippet;
  throw UserError("direction must be i2s or s2i, got '" + std::string(code) + "'");
}

std::string cell_name(CellType c) { return c == CellType::gated ? "gated" : "tanh"; }

CellType parse_cell(std::string_view name) {
  if (name == "gated" || name == "gru") return CellType::gated;
  if (name == "tanh") return CellType::tanh;
  throw UserError("cell must be gated or tanh, got '" + std::string(name) + "'");
}

// ---- parameters ---------------------------------------------------------------

EncDecParams EncDecParams::zeros(const ModelDims& d, int vs, int vt) {
  const int H = d.hidden, E = d.embed, G = d.gates();
  EncDecParams p;
  p.src_embed = MatrixXd::Zero(vs, E);
  p.tgt_embed = MatrixXd::Zero(vt, E);
  for (CellParams* c : {&p.enc, &p.dec}) {
    c->wx = MatrixXd::Zero(G * H, E);
    c->wh = MatrixXd::Zero(G * H, H);
    c->b = VectorXd::Zero(G * H);
  }
  p.att_dec = MatrixXd::Zero(H, H);
  p.att_enc = MatrixXd::Zero(H, H);
  p.att_v = VectorXd::Zero(H);
  p.out_w = MatrixXd::Zero(vt, 2 * H);
  p.out_b = VectorXd::Zero(vt);
  return p;
}

std::vector<TensorView> EncDecParams::tensors() {
  auto view = [](const char* name, auto& t) {
    return TensorView{name, t.data(), t.rows(), t.cols()};
  };
  return {view("src_embed", src_embed), view("tgt_embed", tgt_embed), view("enc.wx", enc.wx),
          view("enc.wh", enc.wh),       view("enc.b", enc.b),         view("dec.wx", dec.wx),
          view("dec.wh", dec.wh),       view("dec.b", dec.b),         view("att_dec", att_dec),
          view("att_enc", att_enc),     view("att_v", att_v),         view("out_w", out_w),
          view("out_b", out_b)};
}

void EncDecParams::init_uniform(Rng& rng, double scale) {
  for (auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(-scale, scale);
}

void EncDecParams::set_zero() {
  for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), 0.0);
}

std::size_t EncDecParams::parameter_count() {
  std::size_t n = 0;
  for (auto& t : tensors()) n += static_cast<std::size_t>(t.size());
  return n;
}

bool EncDecParams::all_finite() {
  for (auto& t : tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i)
      if (!std::isfinite(t.data[i])) return false;
  return true;
}

EncDecModel EncDecModel::create(Direction direction, const ModelDims& dims, Vocabulary source,
                                Vocabulary target) {
  EncDecModel m;
  m.direction = direction;
  m.dims = dims;
  m.params = EncDecParams::zeros(dims, source.size(), target.size());
  m.source_vocab = std::move(source);
  m.target_vocab = std::move(target);
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

// ---- recurrence -----------------------------------------------------------------

namespace {

struct CellCache {
  VectorXd x;
  VectorXd h_prev;
  VectorXd hm;  // h_prev after the recurrent dropout mask
  VectorXd z, r, n, rh;
  VectorXd h;
};

VectorXd sigmoid(const VectorXd& v) { return (1.0 + (-v.array()).exp()).inverse().matrix(); }

void cell_forward(const CellParams& p, CellType type, const VectorXd& x, const VectorXd& h_prev,
                  const VectorXd* mask, CellCache& c) {
  const Eigen::Index H = h_prev.size();
  c.x = x;
  c.h_prev = h_prev;
  c.hm = mask ? VectorXd(h_prev.cwiseProduct(*mask)) : h_prev;
  if (type == CellType::tanh) {
    c.h = (p.wx * x + p.wh * c.hm + p.b).array().tanh();
    return;
  }
  VectorXd xs = p.wx * x + p.b;
  VectorXd hs = p.wh.topRows(2 * H) * c.hm;
  c.z = sigmoid(xs.head(H) + hs.head(H));
  c.r = sigmoid(xs.segment(H, H) + hs.segment(H, H));
  c.rh = c.r.cwiseProduct(c.hm);
  c.n = (xs.tail(H) + p.wh.bottomRows(H) * c.rh).array().tanh();
  c.h = (1.0 - c.z.array()) * c.n.array() + c.z.array() * h_prev.array();
}

// Accumulates parameter gradients into g; returns input and previous-state
// gradients through dx and dh_prev.
void cell_backward(const CellParams& p, CellType type, const CellCache& c, const VectorXd& dh,
                   const VectorXd* mask, CellParams& g, VectorXd& dx, VectorXd& dh_prev) {
  const Eigen::Index H = dh.size();
  if (type == CellType::tanh) {
    VectorXd dpre = dh.array() * (1.0 - c.h.array().square());
    g.wx.noalias() += dpre * c.x.transpose();
    g.wh.noalias() += dpre * c.hm.transpose();
    g.b += dpre;
    dx.noalias() = p.wx.transpose() * dpre;
    VectorXd dhm = p.wh.transpose() * dpre;
    dh_prev = mask ? VectorXd(dhm.cwiseProduct(*mask)) : dhm;
    return;
  }
  VectorXd dn = dh.array() * (1.0 - c.z.array());
  VectorXd dz = dh.array() * (c.h_prev - c.n).array();
  VectorXd dn_pre = dn.array() * (1.0 - c.n.array().square());
  g.wx.bottomRows(H).noalias() += dn_pre * c.x.transpose();
  g.wh.bottomRows(H).noalias() += dn_pre * c.rh.transpose();
  g.b.tail(H) += dn_pre;
  VectorXd drh = p.wh.bottomRows(H).transpose() * dn_pre;
  VectorXd dr = drh.cwiseProduct(c.hm);
  VectorXd dhm = drh.cwiseProduct(c.r);
  VectorXd dzr(2 * H);
  dzr.head(H) = dz.array() * c.z.array() * (1.0 - c.z.array());
  dzr.tail(H) = dr.array() * c.r.array() * (1.0 - c.r.array());
  g.wx.topRows(2 * H).noalias() += dzr * c.x.transpose();
  g.wh.topRows(2 * H).noalias() += dzr * c.hm.transpose();
  g.b.head(2 * H) += dzr;
  dx.noalias() = p.wx.topRows(2 * H).transpose() * dzr;
  dx.noalias() += p.wx.bottomRows(H).transpose() * dn_pre;
  dhm.noalias() += p.wh.topRows(2 * H).transpose() * dzr;
  dh_prev = dh.cwiseProduct(c.z);
  dh_prev += mask ? VectorXd(dhm.cwiseProduct(*mask)) : dhm;
}

VectorXd dropout_mask(Rng& rng, Eigen::Index n, double p) {
  VectorXd m(n);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < n; ++i) m[i] = rng.uniform() >= p ? keep_scale : 0.0;
  return m;
}

void check_ids(std::span<const int> ids, int vocab, const char* what) {
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw std::out_of_range(std::string(what) + " token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(vocab));
}

struct DecoderStep {
  CellCache cell;
  int input = 0;
  int target = 0;
  VectorXd alpha;
  MatrixXd u;  // tanh(att_dec s + att_enc h_j), one column per source position
  VectorXd o;  // output-layer input after dropout
  VectorXd out_mask;
  VectorXd probs;
};

struct Attention {
  VectorXd alpha;
  MatrixXd u;
  VectorXd context;
};

Attention attend(const EncDecParams& p, const MatrixXd& enc_states, const MatrixXd& projected,
                 const VectorXd& s) {
  Attention a;
  VectorXd q = p.att_dec * s;
  a.u = (projected.colwise() + q).array().tanh();
  a.alpha = softmax(a.u.transpose() * p.att_v);
  a.context = enc_states * a.alpha;
  return a;
}

/// One teacher-forced pass with everything needed for backprop cached.
class SequencePass {
 public:
  SequencePass(const EncDecModel& m, std::span<const int> source, std::span<const int> target,
               const DropoutConfig* dropout)
      : m_(m), p_(m.params), source_(source.begin(), source.end()) {
    if (source.empty()) throw std::invalid_argument("empty source sequence");
    check_ids(source, m.source_vocab.size(), "source");
    check_ids(target, m.target_vocab.size(), "target");
    const Eigen::Index H = m.dims.hidden;
    const bool train = dropout && (dropout->recurrent > 0.0 || dropout->output > 0.0);
    Rng rng(dropout ? dropout->seed : 0);
    if (train && dropout->recurrent > 0.0) {
      enc_mask_ = dropout_mask(rng, H, dropout->recurrent);
      dec_mask_ = dropout_mask(rng, H, dropout->recurrent);
    }
    const VectorXd* em = enc_mask_.size() ? &enc_mask_ : nullptr;
    const VectorXd* dm = dec_mask_.size() ? &dec_mask_ : nullptr;

    const Eigen::Index n = static_cast<Eigen::Index>(source.size());
    enc_.resize(source.size());
    enc_states_.resize(H, n);
    VectorXd h = VectorXd::Zero(H);
    for (Eigen::Index j = 0; j < n; ++j) {
      cell_forward(p_.enc, m.dims.cell, p_.src_embed.row(source[static_cast<std::size_t>(j)]).transpose(),
                   h, em, enc_[static_cast<std::size_t>(j)]);
      h = enc_[static_cast<std::size_t>(j)].h;
      enc_states_.col(j) = h;
    }
    projected_ = p_.att_enc * enc_states_;

    const std::size_t steps = target.size() + 1;
    dec_.resize(steps);
    VectorXd s = h;
    for (std::size_t t = 0; t < steps; ++t) {
      DecoderStep& d = dec_[t];
      d.input = t == 0 ? Vocabulary::kBos : target[t - 1];
      d.target = t < target.size() ? target[t] : Vocabulary::kEos;
      cell_forward(p_.dec, m.dims.cell, p_.tgt_embed.row(d.input).transpose(), s, dm, d.cell);
      s = d.cell.h;
      Attention a = attend(p_, enc_states_, projected_, s);
      d.alpha = std::move(a.alpha);
      d.u = std::move(a.u);
      d.o.resize(2 * H);
      d.o << s, a.context;
      if (train && dropout->output > 0.0) {
        d.out_mask = dropout_mask(rng, 2 * H, dropout->output);
        d.o.array() *= d.out_mask.array();
      }
      d.probs = softmax(p_.out_w * d.o + p_.out_b);
    }
  }

  double nll() const {
    double total = 0.0;
    for (const auto& d : dec_) total -= std::log(d.probs[d.target]);
    return total;
  }

  std::vector<double> floored_log_probs() const {
    std::vector<double> out;
    out.reserve(dec_.size());
    for (const auto& d : dec_) out.push_back(std::max(std::log(d.probs[d.target]), kLogProbFloor));
    return out;
  }

  void backward(EncDecParams& g, double scale) const {
    const Eigen::Index H = m_.dims.hidden;
    const Eigen::Index n = enc_states_.cols();
    const VectorXd* em = enc_mask_.size() ? &enc_mask_ : nullptr;
    const VectorXd* dm = dec_mask_.size() ? &dec_mask_ : nullptr;

    MatrixXd d_enc_states = MatrixXd::Zero(H, n);
    MatrixXd d_projected = MatrixXd::Zero(H, n);
    VectorXd ds_next = VectorXd::Zero(H);
    VectorXd dx, ds_prev;
    for (std::size_t t = dec_.size(); t-- > 0;) {
      const DecoderStep& d = dec_[t];
      VectorXd dlogits = d.probs;
      dlogits[d.target] -= 1.0;
      dlogits *= scale;
      g.out_w.noalias() += dlogits * d.o.transpose();
      g.out_b += dlogits;
      VectorXd dout = p_.out_w.transpose() * dlogits;
      if (d.out_mask.size()) dout.array() *= d.out_mask.array();

      VectorXd ds = dout.head(H) + ds_next;
      const VectorXd dc = dout.tail(H);
      VectorXd dalpha = enc_states_.transpose() * dc;
      d_enc_states.noalias() += dc * d.alpha.transpose();
      VectorXd dscores = d.alpha.array() * (dalpha.array() - d.alpha.dot(dalpha));
      g.att_v.noalias() += d.u * dscores;
      MatrixXd dpre = (p_.att_v * dscores.transpose()).array() * (1.0 - d.u.array().square());
      VectorXd dq = dpre.rowwise().sum();
      d_projected += dpre;
      g.att_dec.noalias() += dq * d.cell.h.transpose();
      ds.noalias() += p_.att_dec.transpose() * dq;

      cell_backward(p_.dec, m_.dims.cell, d.cell, ds, dm, g.dec, dx, ds_prev);
      g.tgt_embed.row(d.input) += dx.transpose();
      ds_next = ds_prev;
    }
    d_enc_states.col(n - 1) += ds_next;
    g.att_enc.noalias() += d_projected * enc_states_.transpose();
    d_enc_states.noalias() += p_.att_enc.transpose() * d_projected;

    VectorXd dh_next = VectorXd::Zero(H);
    for (Eigen::Index j = n; j-- > 0;) {
      VectorXd dh = d_enc_states.col(j) + dh_next;
      cell_backward(p_.enc, m_.dims.cell, enc_[static_cast<std::size_t>(j)], dh, em, g.enc, dx,
                    ds_prev);
      g.src_embed.row(source_[static_cast<std::size_t>(j)]) += dx.transpose();
      dh_next = ds_prev;
    }
  }

 private:
  const EncDecModel& m_;
  const EncDecParams& p_;
  std::vector<int> source_;
  VectorXd enc_mask_, dec_mask_;
  std::vector<CellCache> enc_;
  MatrixXd enc_states_;
  MatrixXd projected_;
  std::vector<DecoderStep> dec_;
};

}  // namespace

double forward_backward(const EncDecModel& model, std::span<const int> source,
                        std::span<const int> target, const DropoutConfig* dropout,
                        EncDecParams* grad, double grad_scale) {
  SequencePass pass(model, source, target, dropout);
  if (grad) pass.backward(*grad, grad_scale);
  return pass.nll();
}

Eigen::MatrixXd encode(const EncDecModel& model, std::span<const int> source) {
  if (source.empty()) throw std::invalid_argument("empty source sequence");
  check_ids(source, model.source_vocab.size(), "source");
  const Eigen::Index H = model.dims.hidden;
  MatrixXd states(H, static_cast<Eigen::Index>(source.size()));
  VectorXd h = VectorXd::Zero(H);
  CellCache c;
  for (std::size_t j = 0; j < source.size(); ++j) {
    cell_forward(model.params.enc, model.dims.cell, model.params.src_embed.row(source[j]).transpose(),
                 h, nullptr, c);
    h = c.h;
    states.col(static_cast<Eigen::Index>(j)) = h;
  }
  return states;
}

StepDistribution step_decode(const EncDecModel& model, const Eigen::MatrixXd& encoded,
                             std::span<const int> previous) {
  if (encoded.cols() == 0) throw std::invalid_argument("empty encoded source");
  check_ids(previous, model.target_vocab.size(), "target");
  const EncDecParams& p = model.params;
  VectorXd s = encoded.col(encoded.cols() - 1);
  CellCache c;
  auto feed = [&](int token) {
    cell_forward(p.dec, model.dims.cell, p.tgt_embed.row(token).transpose(), s, nullptr, c);
    s = c.h;
  };
  feed(Vocabulary::kBos);
  for (int token : previous) feed(token);
  MatrixXd projected = p.att_enc * encoded;
  Attention a = attend(p, encoded, projected, s);
  VectorXd o(2 * model.dims.hidden);
  o << s, a.context;
  return StepDistribution{softmax(p.out_w * o + p.out_b), a.alpha};
}

std::vector<double> step_log_probs(const EncDecModel& model, std::span<const int> source,
                                   std::span<const int> target) {
  return SequencePass(model, source, target, nullptr).floored_log_probs();
}

double sequence_log_prob(const EncDecModel& model, std::span<const int> source,
                         std::span<const int> target) {
  double total = 0.0;
  for (double lp : step_log_probs(model, source, target)) total += lp;
  return total;
}

}  // namespace codemine
