#include "transgen/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "transgen/annotate.hpp"
#include "transgen/error.hpp"
#include "transgen/simd/kernels.hpp"

namespace transgen::evalkit {

using nlohmann::json;

Box Box::absent() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan, nan};
}

bool Box::present() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h);
}

double iou(const Box& a, const Box& b) {
  const simd::BoxArrays aa{&a.x, &a.y, &a.w, &a.h};
  const simd::BoxArrays bb{&b.x, &b.y, &b.w, &b.h};
  double out = 0.0;
  simd::active_kernels().iou_batch(aa, bb, &out, 1);
  return out;
}

double center_error(const Box& a, const Box& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

double success_threshold(int k) { return k / 20.0; }

SuccessCurve success_curve(std::span<const double> ious) {
  if (ious.empty()) throw InputError("success curve needs at least one scored frame");
  SuccessCurve c;
  const double n = static_cast<double>(ious.size());
  double sum = 0.0;
  for (int k = 0; k < kSuccessPoints; ++k) {
    const double thr = success_threshold(k);
    const auto hits = std::count_if(ious.begin(), ious.end(), [thr](double v) { return v >= thr; });
    c.values[static_cast<std::size_t>(k)] = static_cast<double>(hits) / n;
    sum += c.values[static_cast<std::size_t>(k)];
  }
  c.auc = sum / kSuccessPoints;
  return c;
}

PrecisionCurve precision_curve(std::span<const double> errors) {
  if (errors.empty()) throw InputError("precision curve needs at least one scored frame");
  PrecisionCurve c;
  const double n = static_cast<double>(errors.size());
  for (int k = 0; k < kPrecisionPoints; ++k) {
    const auto hits = std::count_if(errors.begin(), errors.end(),
                                    [k](double e) { return e <= static_cast<double>(k); });
    c.values[static_cast<std::size_t>(k)] = static_cast<double>(hits) / n;
  }
  c.at_20px = c.values[kPrecisionReportPx];
  return c;
}

SequenceScore score_sequence(const std::string& seq_id, std::span<const Box> gt,
                             std::span<const Box> pred) {
  if (gt.size() != pred.size()) {
    throw InputError("sequence '" + seq_id + "': " + std::to_string(pred.size()) +
                     " predictions for " + std::to_string(gt.size()) + " ground-truth frames");
  }
  // Pairs with both boxes present go through the batched IoU kernel.
  std::vector<double> ax, ay, aw, ah, bx, by, bw, bh;
  std::vector<double> ious;
  std::vector<double> errors;
  std::vector<std::size_t> batched;
  for (std::size_t i = 1; i < gt.size(); ++i) {
    if (!gt[i].present()) continue;
    if (!pred[i].present()) {
      ious.push_back(0.0);
      errors.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    batched.push_back(ious.size());
    ious.push_back(0.0);
    errors.push_back(center_error(pred[i], gt[i]));
    ax.push_back(pred[i].x);
    ay.push_back(pred[i].y);
    aw.push_back(pred[i].w);
    ah.push_back(pred[i].h);
    bx.push_back(gt[i].x);
    by.push_back(gt[i].y);
    bw.push_back(gt[i].w);
    bh.push_back(gt[i].h);
  }
  if (ious.empty()) throw InputError("sequence '" + seq_id + "' has no scored frames");

  std::vector<double> batch(batched.size());
  simd::active_kernels().iou_batch({ax.data(), ay.data(), aw.data(), ah.data()},
                                   {bx.data(), by.data(), bw.data(), bh.data()}, batch.data(),
                                   batch.size());
  for (std::size_t k = 0; k < batched.size(); ++k) ious[batched[k]] = batch[k];

  SequenceScore s;
  s.seq_id = seq_id;
  s.scored_frames = ious.size();
  double sum = 0.0;
  for (double v : ious) sum += v;
  s.mean_iou = sum / static_cast<double>(ious.size());
  s.success = success_curve(ious);
  s.precision = precision_curve(errors);
  return s;
}

Aggregate aggregate(std::span<const SequenceScore> scores) {
  if (scores.empty()) throw InputError("nothing to aggregate: no sequences scored");
  Aggregate a;
  const double n = static_cast<double>(scores.size());
  for (const auto& s : scores) {
    for (int k = 0; k < kSuccessPoints; ++k) a.success.values[static_cast<std::size_t>(k)] += s.success.values[static_cast<std::size_t>(k)];
    for (int k = 0; k < kPrecisionPoints; ++k) a.precision.values[static_cast<std::size_t>(k)] += s.precision.values[static_cast<std::size_t>(k)];
    a.mean_iou += s.mean_iou;
  }
  double sum = 0.0;
  for (auto& v : a.success.values) {
    v /= n;
    sum += v;
  }
  for (auto& v : a.precision.values) v /= n;
  a.success.auc = sum / kSuccessPoints;
  a.precision.at_20px = a.precision.values[kPrecisionReportPx];
  a.mean_iou /= n;
  return a;
}

// ---------------------------------------------------------------------------
// Files

std::vector<Box> parse_boxes(const std::string& text, const std::string& where) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos) lines.pop_back();

  std::vector<Box> out;
  out.reserve(lines.size());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string s = lines[n];
    std::replace(s.begin(), s.end(), ',', ' ');
    std::replace(s.begin(), s.end(), '\t', ' ');
    double v[4];
    const char* p = s.c_str();
    for (int k = 0; k < 4; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(p, &end);
      if (end == p) throw ParseError(where, n + 1, "expected 4 numbers 'x,y,w,h'");
      p = end;
    }
    while (*p == ' ') ++p;
    if (*p != '\0') throw ParseError(where, n + 1, "trailing characters after box");
    Box b{v[0], v[1], v[2], v[3]};
    out.push_back(b.present() ? b : Box::absent());
  }
  return out;
}

std::vector<Box> load_boxes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_boxes(ss.str(), path.string());
}

std::vector<GtSequence> load_gt_tree(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("ground-truth root " + root.string() + " is not a directory");
  std::vector<GtSequence> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const fs::path gt_file = entry.path() / annotate::kGroundTruthFile;
    if (!fs::exists(gt_file)) continue;
    GtSequence g;
    g.seq_id = entry.path().filename().string();
    g.boxes = load_boxes(gt_file);
    const fs::path attr = entry.path() / annotate::kAttributesFile;
    if (fs::exists(attr)) {
      std::ifstream in(attr);
      try {
        const json j = json::parse(in);
        if (j.contains("tags")) g.tags = j["tags"].get<std::vector<std::string>>();
        if (j.contains("study")) g.study = j["study"].get<seqplan::StudyTag>();
      } catch (const json::exception& e) {
        throw InputError(attr.string() + ": " + e.what());
      }
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const GtSequence& a, const GtSequence& b) { return a.seq_id < b.seq_id; });
  return out;
}

std::vector<TrackerResults> load_results_tree(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("results root " + root.string() + " is not a directory");
  std::vector<TrackerResults> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    TrackerResults t;
    t.tracker = entry.path().filename().string();
    for (const auto& f : fs::directory_iterator(entry.path())) {
      if (!f.is_regular_file() || f.path().extension() != ".txt") continue;
      t.sequences[f.path().stem().string()] = load_boxes(f.path());
    }
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const TrackerResults& a, const TrackerResults& b) { return a.tracker < b.tracker; });
  return out;
}

// ---------------------------------------------------------------------------
// Reports

const std::vector<std::string>& known_tags() {
  static const std::vector<std::string> tags = {
      "transparency_1", "transparency_2", "transparency_3", "transparency_4",
      "motion_blur", "partial_occlusion", "rotation", "distractor",
      "full_occlusion", "out_of_view", "fast_motion", "illumination_variation",
      "deformation", "scale_variation", "aspect_ratio_change", "background_clutter",
      "low_resolution"};
  return tags;
}

std::vector<AttributeScore> per_attribute_report(std::span<const SequenceScore> scores,
                                                 std::span<const GtSequence> gt,
                                                 std::vector<std::string>* warnings) {
  const auto& vocab = known_tags();
  std::map<std::string, const GtSequence*> by_id;
  for (const auto& g : gt) {
    for (const auto& t : g.tags) {
      if (std::find(vocab.begin(), vocab.end(), t) == vocab.end()) {
        throw InputError("unknown attribute tag '" + t + "' on sequence '" + g.seq_id + "'");
      }
    }
    by_id[g.seq_id] = &g;
  }

  std::vector<AttributeScore> out;
  for (const auto& tag : vocab) {
    std::vector<SequenceScore> subset;
    for (const auto& s : scores) {
      const auto it = by_id.find(s.seq_id);
      if (it == by_id.end()) continue;
      const auto& tags = it->second->tags;
      if (std::find(tags.begin(), tags.end(), tag) != tags.end()) subset.push_back(s);
    }
    if (subset.empty()) {
      if (warnings) warnings->push_back("attribute '" + tag + "' has no sequences; omitted");
      continue;
    }
    const Aggregate a = aggregate(subset);
    out.push_back({tag, subset.size(), a.success.auc, a.precision.at_20px});
  }
  return out;
}

EvalReport evaluate_tracker(const TrackerResults& results, std::span<const GtSequence> gt) {
  std::vector<std::string> missing;
  for (const auto& g : gt) {
    if (!results.sequences.contains(g.seq_id)) missing.push_back(g.seq_id);
  }
  if (!missing.empty()) {
    std::string msg = "tracker '" + results.tracker + "' has no results for:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }

  EvalReport r;
  r.tracker = results.tracker;
  for (const auto& g : gt) {
    const auto& pred = results.sequences.at(g.seq_id);
    if (pred.size() != g.boxes.size()) {
      throw InputError("tracker '" + results.tracker + "', sequence '" + g.seq_id + "': " +
                       std::to_string(pred.size()) + " result lines for " +
                       std::to_string(g.boxes.size()) + " ground-truth frames");
    }
    r.sequences.push_back(score_sequence(g.seq_id, g.boxes, pred));
  }
  r.overall = aggregate(r.sequences);
  r.per_attribute = per_attribute_report(r.sequences, gt, &r.warnings);
  return r;
}

std::vector<EvalReport> ope_evaluate(const fs::path& results_root, const fs::path& gt_root) {
  const auto gt = load_gt_tree(gt_root);
  if (gt.empty()) throw InputError("no ground-truth sequences under " + gt_root.string());
  const auto trackers = load_results_tree(results_root);
  if (trackers.empty()) throw InputError("no tracker directories under " + results_root.string());
  std::vector<EvalReport> out;
  for (const auto& t : trackers) out.push_back(evaluate_tracker(t, gt));
  return out;
}

// ---------------------------------------------------------------------------
// Attribute difficulty

double study_level_value(const std::string& attribute, int level) {
  if (level < 0 || level > 3) throw InputError("study level index out of range");
  const auto i = static_cast<std::size_t>(level);
  if (attribute == "transparency") return seqplan::kTransparencyLevels[i];
  if (attribute == "occlusion") return seqplan::kStripeLevels[i];
  if (attribute == "rotation") return seqplan::kRotationLevels[i];
  if (attribute == "blur") return seqplan::kBlurLevels[i];
  throw InputError("unknown study attribute '" + attribute + "'");
}

const DifficultyCell& DifficultyTable::cell(const std::string& attribute, int level) const {
  for (const auto& c : cells) {
    if (c.attribute == attribute && c.level_index == level) return c;
  }
  throw InputError("no difficulty cell for " + attribute + " level " + std::to_string(level));
}

DifficultyTable attribute_difficulty(std::span<const TrackerResults> trackers,
                                     std::span<const GtSequence> study_gt) {
  if (trackers.empty()) throw InputError("attribute difficulty needs at least one tracker");
  std::vector<const GtSequence*> study;
  for (const auto& g : study_gt) {
    if (g.study) study.push_back(&g);
  }
  if (study.empty()) throw InputError("no study sequences in the ground truth");

  std::vector<std::string> missing;
  for (const auto& t : trackers) {
    for (const auto* g : study) {
      if (!t.sequences.contains(g->seq_id)) missing.push_back("(" + t.tracker + ", " + g->seq_id + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "incomplete study coverage, missing:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }

  DifficultyTable table;
  for (const char* attr : seqplan::kStudyAttributes) {
    for (int level = 0; level < 4; ++level) {
      DifficultyCell c;
      c.attribute = attr;
      c.level_index = level;
      c.level_value = study_level_value(attr, level);
      double sum = 0.0;
      for (const auto& t : trackers) {
        for (const auto* g : study) {
          if (g->study->attribute != attr || g->study->level_index != level) continue;
          const auto& pred = t.sequences.at(g->seq_id);
          if (pred.size() != g->boxes.size()) {
            throw InputError("tracker '" + t.tracker + "', sequence '" + g->seq_id +
                             "': frame count mismatch");
          }
          sum += score_sequence(g->seq_id, g->boxes, pred).mean_iou;
          c.samples++;
        }
      }
      if (c.samples == 0) {
        throw InputError(std::string("study ground truth has no sequences for ") + attr +
                         " level " + std::to_string(level));
      }
      c.mean_iou = sum / static_cast<double>(c.samples);
      table.cells.push_back(c);
    }
  }
  return table;
}

std::vector<GtSequence> attach_study_tags(std::vector<GtSequence> gt, const seqplan::DatasetPlan& plan) {
  for (auto& g : gt) {
    for (const auto& s : plan.sequences) {
      if (s.seq_id == g.seq_id && s.study) g.study = s.study;
    }
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json success_json(const SuccessCurve& c) {
  json thr = json::array();
  for (int k = 0; k < kSuccessPoints; ++k) thr.push_back(success_threshold(k));
  return {{"thresholds", thr}, {"values", c.values}};
}

json precision_json(const PrecisionCurve& c) {
  json thr = json::array();
  for (int k = 0; k < kPrecisionPoints; ++k) thr.push_back(k);
  return {{"thresholds", thr}, {"values", c.values}};
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

json report_json(std::span<const EvalReport> reports, const std::optional<DifficultyTable>& difficulty) {
  json trackers = json::array();
  for (const auto& r : reports) {
    json seqs = json::array();
    for (const auto& s : r.sequences) {
      seqs.push_back({{"seq_id", s.seq_id},
                      {"scored_frames", s.scored_frames},
                      {"mean_iou", s.mean_iou},
                      {"auc", s.success.auc},
                      {"precision_at_20", s.precision.at_20px}});
    }
    json attrs = json::array();
    for (const auto& a : r.per_attribute) {
      attrs.push_back({{"tag", a.tag}, {"sequences", a.sequences}, {"auc", a.auc},
                       {"precision_at_20", a.precision_at_20}});
    }
    trackers.push_back({{"tracker", r.tracker},
                        {"auc", r.overall.success.auc},
                        {"precision_at_20", r.overall.precision.at_20px},
                        {"mean_iou", r.overall.mean_iou},
                        {"success_curve", success_json(r.overall.success)},
                        {"precision_curve", precision_json(r.overall.precision)},
                        {"sequences", seqs},
                        {"per_attribute", attrs},
                        {"warnings", r.warnings}});
  }
  json out{{"protocol", "ope"}, {"trackers", trackers}};
  if (difficulty) {
    json cells = json::array();
    for (const auto& c : difficulty->cells) {
      cells.push_back({{"attribute", c.attribute}, {"level_index", c.level_index},
                       {"level_value", c.level_value}, {"mean_iou", c.mean_iou}, {"samples", c.samples}});
    }
    out["difficulty"] = cells;
  }
  return out;
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::string out = "tracker,scope,sequences,auc,precision_at_20\n";
  for (const auto& r : reports) {
    out += r.tracker + ",overall," + std::to_string(r.sequences.size()) + "," +
           fmt6(r.overall.success.auc) + "," + fmt6(r.overall.precision.at_20px) + "\n";
    for (const auto& a : r.per_attribute) {
      out += r.tracker + "," + a.tag + "," + std::to_string(a.sequences) + "," + fmt6(a.auc) + "," +
             fmt6(a.precision_at_20) + "\n";
    }
  }
  return out;
}

std::string difficulty_csv(const DifficultyTable& table) {
  std::string out = "attribute,level_index,level_value,mean_iou,samples\n";
  for (const auto& c : table.cells) {
    out += c.attribute + "," + std::to_string(c.level_index) + "," + fmt6(c.level_value) + "," +
           fmt6(c.mean_iou) + "," + std::to_string(c.samples) + "\n";
  }
  return out;
}

}  // namespace transgen::evalkit
