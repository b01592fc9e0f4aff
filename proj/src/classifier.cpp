#include "codemine/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

namespace codemine {

std::string feature_set_name(FeatureSet s) {
  switch (s) {
    case FeatureSet::full: return "full";
    case FeatureSet::structural: return "structural";
    case FeatureSet::correspondence: return "correspondence";
  }
  return "full";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "full") return FeatureSet::full;
  if (name == "structural") return FeatureSet::structural;
  if (name == "correspondence") return FeatureSet::correspondence;
  throw UserError("feature set must be full, structural or correspondence, got '" +
                  std::string(name) + "'");
}

const std::vector<std::string>& feature_registry() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (auto s : kStructuralFeatureNames) n.emplace_back(s);
    for (auto s : kCorrespondenceFeatureNames) n.emplace_back(s);
    return n;
  }();
  return names;
}

std::vector<std::string> feature_names(const FeatureOptions& options) {
  std::vector<std::string> out;
  const auto& all = feature_registry();
  const std::size_t nstruct = kStructuralFeatureNames.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const bool structural = i < nstruct;
    if (structural && options.set == FeatureSet::correspondence) continue;
    if (!structural && options.set == FeatureSet::structural) continue;
    if (options.cross_lingual && all[i] == "IsValue") continue;
    out.push_back(all[i]);
  }
  return out;
}

std::vector<PairFeatureVector> assemble_features(const KeyedStructural& structural,
                                                 const KeyedCorrespondence& correspondence,
                                                 const FeatureOptions& options) {
  const bool need_s = options.set != FeatureSet::correspondence;
  const bool need_c = options.set != FeatureSet::structural;
  std::map<CandidateKey, PairFeatureVector> joined;
  std::map<CandidateKey, int> seen;  // bit 1 structural, bit 2 correspondence
  if (need_s) {
    for (const auto& [key, f] : structural) {
      auto& v = joined[key];
      v.key = key;
      for (std::size_t i = 0; i < f.values.size(); ++i)
        v.values[std::string(kStructuralFeatureNames[i])] = f.values[i] ? 1.0 : 0.0;
      seen[key] |= 1;
    }
  }
  if (need_c) {
    for (const auto& [key, c] : correspondence) {
      auto& v = joined[key];
      v.key = key;
      for (int i = 0; i < 6; ++i) {
        const double x = c.get(i);
        if (!std::isfinite(x))
          throw UserError("non-finite " + std::string(kCorrespondenceFeatureNames[i]) + " for " +
                          key.to_string());
        v.values[kCorrespondenceFeatureNames[i]] = x;
      }
      seen[key] |= 2;
    }
  }
  const int want = (need_s ? 1 : 0) | (need_c ? 2 : 0);
  std::vector<std::string> missing;
  for (const auto& [key, bits] : seen)
    if (bits != want) missing.push_back(key.to_string());
  if (!missing.empty()) {
    std::string msg = "candidate keys missing from one feature source:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ... (" + std::to_string(missing.size()) + " total)";
    throw UserError(msg);
  }
  const auto names = feature_names(options);
  std::vector<PairFeatureVector> out;
  out.reserve(joined.size());
  for (auto& [key, v] : joined) {
    PairFeatureVector kept;
    kept.key = key;
    for (const auto& n : names) kept.values[n] = v.values.at(n);
    out.push_back(std::move(kept));
  }
  return out;
}

json pair_features_to_json(const PairFeatureVector& v) {
  json j = key_to_json(v.key);
  j["label"] = v.label;
  j["features"] = v.values;
  return j;
}

PairFeatureVector pair_features_from_json(const json& j) {
  PairFeatureVector v;
  v.key = key_from_json(j);
  v.label = j.value("label", 0);
  v.values = j.at("features").get<std::map<std::string, double>>();
  return v;
}

// ---- model ------------------------------------------------------------------

Standardization Standardization::compute(const std::vector<std::vector<double>>& rows) {
  Standardization s;
  if (rows.empty()) return s;
  const std::size_t d = rows[0].size();
  const double n = static_cast<double>(rows.size());
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
  for (double& m : s.mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i) s.std[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
  for (double& v : s.std) v = std::sqrt(v / n);
  return s;
}

std::vector<double> ClassifierModel::raw_row(const PairFeatureVector& v) const {
  std::vector<double> row(features.size(), 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto it = v.values.find(features[i]);
    if (it != v.values.end()) row[i] = it->second;
  }
  return row;
}

double ClassifierModel::decision(const std::vector<double>& raw, const Standardization& s) const {
  double z = bias;
  for (std::size_t i = 0; i < features.size(); ++i) z += weights[i] * s.apply(i, raw[i]);
  return z;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Problem {
  Eigen::MatrixXd x;  // n x (d + 1), last column all ones
  Eigen::VectorXd y;  // +1 / -1
  Eigen::VectorXd c;  // example weights
  double l2 = 0.0;
  Eigen::Index d = 0;

  double objective(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z = x * theta;
    double f = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) f += c[i] * softplus(-y[i] * z[i]);
    return f + 0.5 * l2 * theta.head(d).squaredNorm();
  }
};

}  // namespace

double ClassifierModel::predict(const PairFeatureVector& v) const {
  return sigmoid(decision(raw_row(v), stats));
}

ClassifierModel fit(const std::vector<PairFeatureVector>& labeled,
                    const std::vector<std::string>& features, const ClassifierConfig& config) {
  std::size_t pos = 0, neg = 0;
  for (const auto& v : labeled) {
    if (v.label == 1) ++pos;
    else if (v.label == -1) ++neg;
    else throw UserError("unlabeled vector " + v.key.to_string() + " passed to fit");
  }
  if (pos == 0 || neg == 0) throw UserError("training data needs both positive and negative examples");

  ClassifierModel model;
  model.features = features;
  model.config = config;
  std::vector<std::vector<double>> rows;
  rows.reserve(labeled.size());
  for (const auto& v : labeled) {
    rows.push_back(model.raw_row(v));
    for (std::size_t i = 0; i < features.size(); ++i)
      if (!std::isfinite(rows.back()[i]))
        throw UserError("non-finite value of feature " + features[i] + " for " + v.key.to_string());
  }
  model.stats = Standardization::compute(rows);

  Problem p;
  const auto n = static_cast<Eigen::Index>(labeled.size());
  p.d = static_cast<Eigen::Index>(features.size());
  p.l2 = config.l2;
  p.x.resize(n, p.d + 1);
  p.y.resize(n);
  p.c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p.d; ++j)
      p.x(i, j) = model.stats.apply(static_cast<std::size_t>(j), rows[i][j]);
    p.x(i, p.d) = 1.0;
    const bool is_pos = labeled[i].label == 1;
    p.y[i] = is_pos ? 1.0 : -1.0;
    p.c[i] = config.class_weighting
                 ? static_cast<double>(labeled.size()) / (2.0 * static_cast<double>(is_pos ? pos : neg))
                 : 1.0;
  }

  Eigen::VectorXd theta(p.d + 1);
  Rng rng(config.seed);
  for (Eigen::Index j = 0; j <= p.d; ++j) theta[j] = rng.uniform(-0.01, 0.01);

  double f = p.objective(theta);
  model.objective_trace.push_back(f);
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    Eigen::VectorXd z = p.x * theta;
    Eigen::VectorXd gcoef(n), hcoef(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sigmoid(-p.y[i] * z[i]);
      gcoef[i] = -p.c[i] * p.y[i] * s;
      hcoef[i] = p.c[i] * s * (1.0 - s);
    }
    Eigen::VectorXd grad = p.x.transpose() * gcoef;
    grad.head(p.d) += p.l2 * theta.head(p.d);
    if (grad.norm() < config.gradient_tolerance) break;

    Eigen::MatrixXd hess = p.x.transpose() * hcoef.asDiagonal() * p.x;
    hess.diagonal().head(p.d).array() += p.l2;
    hess.diagonal().array() += 1e-10;
    Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    if (!(slope < 0)) step = -grad;  // fall back to steepest descent

    double t = 1.0, next = f;
    Eigen::VectorXd candidate;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      candidate = theta + t * step;
      next = p.objective(candidate);
      if (next <= f + 1e-4 * t * grad.dot(step)) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    theta = candidate;
    f = next;
    model.objective_trace.push_back(f);
  }
  model.weights.assign(theta.data(), theta.data() + p.d);
  model.bias = theta[p.d];
  return model;
}

std::string render_classifier(const ClassifierModel& m, const OutputMeta& meta) {
  std::ostringstream out;
  out << "# " << meta.tool_version << "\n"
      << "config_hash " << meta.config_hash << "\n"
      << "l2 " << format_double(m.config.l2) << "\n"
      << "class_weighting " << (m.config.class_weighting ? 1 : 0) << "\n"
      << "seed " << m.config.seed << "\n"
      << "bias " << format_double(m.bias) << "\n"
      << "# feature name, mean, std, weight\n";
  for (std::size_t i = 0; i < m.features.size(); ++i)
    out << "feature " << m.features[i] << " " << format_double(m.stats.mean[i]) << " "
        << format_double(m.stats.std[i]) << " " << format_double(m.weights[i]) << "\n";
  return out.str();
}

ClassifierModel parse_classifier(const std::string& text, const std::string& origin,
                                 OutputMeta* meta) {
  ClassifierModel m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_bias = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (meta && lineno == 1) meta->tool_version = trim(line.substr(1));
      continue;
    }
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    bool ok = true;
    if (key == "config_hash") {
      std::string h;
      fields >> h;
      if (meta) meta->config_hash = h;
    } else if (key == "l2") {
      ok = static_cast<bool>(fields >> m.config.l2);
    } else if (key == "class_weighting") {
      int v = 0;
      ok = static_cast<bool>(fields >> v);
      m.config.class_weighting = v != 0;
    } else if (key == "seed") {
      ok = static_cast<bool>(fields >> m.config.seed);
    } else if (key == "bias") {
      ok = static_cast<bool>(fields >> m.bias);
      have_bias = ok;
    } else if (key == "feature") {
      std::string name;
      double mean = 0, sd = 0, w = 0;
      ok = static_cast<bool>(fields >> name >> mean >> sd >> w);
      m.features.push_back(name);
      m.stats.mean.push_back(mean);
      m.stats.std.push_back(sd);
      m.weights.push_back(w);
    } else {
      ok = false;
    }
    if (!ok) throw UserError(origin + ":" + std::to_string(lineno) + ": malformed line '" + line + "'");
  }
  if (!have_bias) throw UserError(origin + ": classifier file has no bias line");
  if (meta) meta->kind = "classifier";
  return m;
}

json prediction_to_json(const FoldPrediction& p) {
  json j = key_to_json(p.key);
  j["fold"] = p.fold;
  j["probability"] = p.probability;
  j["label"] = p.label;
  return j;
}

FoldPrediction prediction_from_json(const json& j) {
  return FoldPrediction{key_from_json(j), j.value("fold", 0), j.at("probability").get<double>(),
                        j.value("label", 0)};
}

std::map<std::int64_t, int> assign_folds(std::vector<std::int64_t> ids, int k, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (k < 2) throw UserError("cross-validation needs k >= 2");
  if (static_cast<std::size_t>(k) > ids.size())
    throw UserError("k = " + std::to_string(k) + " exceeds the " + std::to_string(ids.size()) +
                    " annotated questions");
  Rng rng(seed);
  rng.shuffle(ids);
  std::map<std::int64_t, int> folds;
  for (std::size_t i = 0; i < ids.size(); ++i) folds[ids[i]] = static_cast<int>(i % k);
  return folds;
}

CrossValidationResult cross_validate(const std::vector<PairFeatureVector>& labeled,
                                     const std::vector<std::string>& features, int k,
                                     const ClassifierConfig& config, int jobs) {
  std::vector<std::int64_t> ids;
  for (const auto& v : labeled) ids.push_back(v.key.question_id);
  CrossValidationResult result;
  result.folds = assign_folds(ids, k, config.seed);
  result.models.resize(k);
  std::vector<std::vector<FoldPrediction>> per_fold(k);

  auto run_fold = [&](int f) {
    std::vector<PairFeatureVector> train;
    for (const auto& v : labeled)
      if (result.folds.at(v.key.question_id) != f) train.push_back(v);
    result.models[f] = fit(train, features, config);
    for (const auto& v : labeled)
      if (result.folds.at(v.key.question_id) == f)
        per_fold[f].push_back({v.key, f, result.models[f].predict(v), v.label});
  };
  if (jobs <= 1) {
    for (int f = 0; f < k; ++f) run_fold(f);
  } else {
    std::vector<std::exception_ptr> errors(k);
    for (int start = 0; start < k; start += jobs) {
      std::vector<std::jthread> workers;
      for (int f = start; f < std::min(k, start + jobs); ++f)
        workers.emplace_back([&, f] {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (auto& fp : per_fold)
    result.predictions.insert(result.predictions.end(), fp.begin(), fp.end());
  std::sort(result.predictions.begin(), result.predictions.end(),
            [](const FoldPrediction& a, const FoldPrediction& b) { return a.key < b.key; });
  return result;
}

std::vector<FoldPrediction> transfer_apply(const ClassifierModel& model,
                                           const std::vector<PairFeatureVector>& vectors) {
  std::vector<std::string> missing;
  if (!vectors.empty())
    for (const auto& name : model.features)
      if (!vectors.front().values.contains(name)) missing.push_back(name);
  if (!missing.empty()) {
    std::string msg = "feature registries are incompatible; target data lacks:";
    for (const auto& m : missing) msg += " " + m;
    throw UserError(msg);
  }
  std::vector<std::vector<double>> rows;
  for (const auto& v : vectors) rows.push_back(model.raw_row(v));
  const Standardization stats = Standardization::compute(rows);
  std::vector<FoldPrediction> out;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    out.push_back({vectors[i].key, 0, sigmoid(model.decision(rows[i], stats)), vectors[i].label});
  std::sort(out.begin(), out.end(),
            [](const FoldPrediction& a, const FoldPrediction& b) { return a.key < b.key; });
  return out;
}

}  // namespace codemine
