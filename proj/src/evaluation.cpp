#include "codemine/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "codemine/html_code.hpp"

namespace codemine {

std::vector<GoldLabel> label_candidates(const std::vector<CandidateKey>& candidates,
                                        const std::vector<Annotation>& annotations,
                                        const std::map<std::int64_t, const QuestionThread*>& threads,
                                        const LabelOptions& options) {
  // (question, answer, block) -> annotated [start, end] spans
  std::map<std::tuple<std::int64_t, std::int64_t, int>, std::vector<std::pair<int, int>>> spans;
  std::set<std::int64_t> annotated;
  for (const auto& a : annotations) {
    if (a.status != AnnotationStatus::ok) continue;
    annotated.insert(a.question_id);
    auto it = threads.find(a.question_id);
    const QuestionThread* thread = it == threads.end() ? nullptr : it->second;
    for (const auto& s : a.snippet_spans) {
      const std::string where = "annotation of question " + std::to_string(a.question_id) +
                                " by " + a.annotator + ", block " + std::to_string(s.block_index);
      if (s.line_start < 1 || s.line_end < s.line_start)
        throw UserError(where + ": invalid line range " + std::to_string(s.line_start) + "-" +
                        std::to_string(s.line_end));
      if (thread) {
        const Answer* answer = thread->find_answer(a.answer_id);
        if (!answer) throw UserError(where + ": answer " + std::to_string(a.answer_id) + " not in thread");
        auto b = std::find_if(answer->blocks.begin(), answer->blocks.end(),
                              [&](const CodeBlock& cb) { return cb.block_index == s.block_index; });
        if (b == answer->blocks.end()) throw UserError(where + ": no such block");
        if (s.line_end > static_cast<int>(b->lines.size()))
          throw UserError(where + ": span " + std::to_string(s.line_start) + "-" +
                          std::to_string(s.line_end) + " exceeds the block's " +
                          std::to_string(b->lines.size()) + " lines");
      }
      spans[{a.question_id, a.answer_id, s.block_index}].emplace_back(s.line_start, s.line_end);
    }
  }

  std::vector<GoldLabel> out;
  for (const auto& key : candidates) {
    if (!annotated.contains(key.question_id)) continue;
    int label = -1;
    auto it = spans.find({key.question_id, key.answer_id, key.block_index});
    if (it != spans.end()) {
      for (const auto& [s, e] : it->second) {
        if (s == key.line_start && e == key.line_end) {
          label = 1;
          break;
        }
        if (options.overlap) {
          const int inter = std::max(0, std::min(e, key.line_end) - std::max(s, key.line_start) + 1);
          const int uni = (e - s + 1) + (key.line_end - key.line_start + 1) - inter;
          if (static_cast<double>(inter) / uni >= options.jaccard_threshold) {
            label = 1;
            break;
          }
        }
      }
    }
    out.push_back({key, label});
  }
  return out;
}

void rank_items(std::vector<ScoredItem>& items) {
  std::sort(items.begin(), items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  });
}

namespace {

std::pair<std::size_t, std::size_t> class_counts(const std::vector<ScoredItem>& items) {
  std::size_t pos = 0;
  for (const auto& i : items) pos += i.label == 1 ? 1 : 0;
  return {pos, items.size() - pos};
}

void require_both(std::size_t pos, std::size_t neg) {
  if (pos == 0 || neg == 0)
    throw UserError("gold labels need at least one positive and one negative (have " +
                    std::to_string(pos) + " / " + std::to_string(neg) + ")");
}

}  // namespace

std::vector<CurvePoint> pr_curve(const std::vector<ScoredItem>& ranked) {
  auto [pos, neg] = class_counts(ranked);
  require_both(pos, neg);
  std::vector<CurvePoint> out;
  out.reserve(ranked.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].label == 1 ? 1 : 0;
    out.push_back({static_cast<double>(tp) / static_cast<double>(pos),
                   static_cast<double>(tp) / static_cast<double>(k + 1)});
  }
  return out;
}

std::vector<CurvePoint> roc_curve(const std::vector<ScoredItem>& ranked) {
  auto [pos, neg] = class_counts(ranked);
  require_both(pos, neg);
  std::vector<CurvePoint> out{{0.0, 0.0}};
  out.reserve(ranked.size() + 1);
  std::size_t tp = 0, fp = 0;
  for (const auto& item : ranked) {
    (item.label == 1 ? tp : fp) += 1;
    out.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

double auc(const std::vector<CurvePoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
  return area;
}

std::string baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::accept_only: return "accept-only";
    case BaselineKind::all: return "all";
    case BaselineKind::random: return "random";
  }
  return "random";
}

BaselineCandidate baseline_candidate(const CandidateSnippet& c, const QuestionThread& thread) {
  BaselineCandidate b{c.key};
  if (const Answer* a = thread.find_answer(c.key.answer_id)) {
    b.accepted = a->accepted;
    b.answer_blocks = static_cast<int>(a->blocks.size());
    for (const auto& block : a->blocks)
      if (block.block_index == c.key.block_index)
        b.full_block = c.key.line_start == 1 && c.key.line_end == static_cast<int>(block.lines.size());
  }
  return b;
}

BaselineCandidate baseline_candidate_from_json(const json& j) {
  BaselineCandidate b{key_from_json(j)};
  b.accepted = j.at("accepted").get<bool>();
  b.answer_blocks = j.at("answer_blocks").get<int>();
  b.full_block = b.key.line_start == 1 && b.key.line_end == j.at("block_lines").get<int>();
  return b;
}

std::vector<double> baseline_scores(const std::vector<BaselineCandidate>& candidates,
                                    BaselineKind kind, std::uint64_t seed) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return candidates[a].key < candidates[b].key; });
  std::vector<double> scores(candidates.size(), 0.0);
  Rng rng(seed);
  for (std::size_t i : order) {
    const auto& c = candidates[i];
    switch (kind) {
      case BaselineKind::accept_only:
        scores[i] = c.accepted && c.answer_blocks == 1 && c.full_block ? 1.0 : 0.0;
        break;
      case BaselineKind::all:
        scores[i] = c.full_block ? 1.0 : 0.0;
        break;
      case BaselineKind::random:
        scores[i] = rng.uniform();
        break;
    }
  }
  return scores;
}

SystemResult evaluate_system(const std::string& name, std::vector<ScoredItem> items) {
  rank_items(items);
  SystemResult r;
  r.name = name;
  r.items = items.size();
  r.positives = class_counts(items).first;
  r.pr = pr_curve(items);
  r.roc = roc_curve(items);
  r.auc = auc(r.roc);
  return r;
}

json report_to_json(const std::vector<SystemResult>& systems, const OutputMeta& meta) {
  json sys = json::array();
  for (const auto& s : systems) {
    json pr = json::array(), roc = json::array();
    for (const auto& p : s.pr) pr.push_back({p.x, p.y});
    for (const auto& p : s.roc) roc.push_back({p.x, p.y});
    sys.push_back({{"name", s.name},
                   {"items", s.items},
                   {"positives", s.positives},
                   {"auc", s.auc},
                   {"pr", pr},
                   {"roc", roc}});
  }
  return {{"_meta", meta_to_json(meta)}, {"systems", sys}};
}

std::string render_curves_csv(const std::vector<SystemResult>& systems, const OutputMeta& meta) {
  std::ostringstream out;
  out << "# " << meta.tool_version << " config " << meta.config_hash << "\n";
  out << "system,curve,k,x,y\n";
  for (const auto& s : systems) {
    for (std::size_t k = 0; k < s.pr.size(); ++k)
      out << s.name << ",pr," << k + 1 << "," << format_double(s.pr[k].x) << ","
          << format_double(s.pr[k].y) << "\n";
    for (std::size_t k = 0; k < s.roc.size(); ++k)
      out << s.name << ",roc," << k << "," << format_double(s.roc[k].x) << ","
          << format_double(s.roc[k].y) << "\n";
  }
  return out.str();
}

std::string render_svg(const std::vector<SystemResult>& systems, const std::string& curve,
                       const OutputMeta& meta) {
  constexpr double W = 480, H = 400, L = 60, R = 150, T = 30, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const bool pr = curve == "pr";
  char buf[128];
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<!-- " << meta.tool_version << " config " << meta.config_hash << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    std::snprintf(buf, sizeof buf, "%.1f", v);
    out << "<text x=\"" << L + v * pw << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
        << buf << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << T + ph - v * ph + 4 << "\" text-anchor=\"end\">"
        << buf << "</text>\n";
  }
  out << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << (pr ? "Recall" : "False positive rate") << "</text>\n";
  out << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << (pr ? "Precision" : "True positive rate") << "</text>\n";
  for (std::size_t s = 0; s < systems.size(); ++s) {
    const auto& pts = pr ? systems[s].pr : systems[s].roc;
    const char* color = colors[s % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", L + p.x * pw, T + ph - p.y * ph);
      out << buf;
    }
    out << "\"/>\n";
    const double ly = T + 14 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    std::snprintf(buf, sizeof buf, " (%.3f)", systems[s].auc);
    out << "<text x=\"" << W - R + 34 << "\" y=\"" << ly << "\">" << escape_html(systems[s].name)
        << (pr ? "" : buf) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace codemine
