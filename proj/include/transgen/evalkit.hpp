#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "transgen/seqplan.hpp"

namespace transgen::evalkit {

namespace fs = std::filesystem;

// Real-valued box covering [x, x+w) x [y, y+h). An absent box has NaN fields.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  static Box absent();
  bool present() const;
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
};

double iou(const Box& a, const Box& b);
double center_error(const Box& a, const Box& b);

inline constexpr int kSuccessPoints = 21;    // IoU thresholds 0.00 .. 1.00 step 0.05
inline constexpr int kPrecisionPoints = 51;  // center-error thresholds 0 .. 50 px
inline constexpr int kPrecisionReportPx = 20;

double success_threshold(int k);

struct SuccessCurve {
  std::array<double, kSuccessPoints> values{};
  double auc = 0.0;
};

struct PrecisionCurve {
  std::array<double, kPrecisionPoints> values{};
  double at_20px = 0.0;
};

// Point k = fraction of frames with IoU >= threshold k; AUC = mean of points.
// Throws InputError when no frames are given.
SuccessCurve success_curve(std::span<const double> ious);
// Point k = fraction of frames with center error <= k pixels.
PrecisionCurve precision_curve(std::span<const double> center_errors);

struct SequenceScore {
  std::string seq_id;
  std::size_t scored_frames = 0;
  double mean_iou = 0.0;
  SuccessCurve success;
  PrecisionCurve precision;
};

// One-pass scoring: frame 0 initializes the tracker and is not scored,
// frames whose ground truth is absent are skipped, and an absent prediction
// counts as IoU 0 with infinite center error.
SequenceScore score_sequence(const std::string& seq_id, std::span<const Box> ground_truth,
                             std::span<const Box> predictions);

// Mean of per-sequence curves (equal sequence weight).
struct Aggregate {
  SuccessCurve success;
  PrecisionCurve precision;
  double mean_iou = 0.0;
};
Aggregate aggregate(std::span<const SequenceScore> scores);

// Parses "x,y,w,h" lines (comma, tab or space separated; "nan" allowed).
// Throws ParseError with the file and line number.
std::vector<Box> load_boxes(const fs::path& path);
std::vector<Box> parse_boxes(const std::string& text, const std::string& where);

struct GtSequence {
  std::string seq_id;
  std::vector<Box> boxes;
  std::vector<std::string> tags;
  std::optional<seqplan::StudyTag> study;
};

// Every subdirectory of root holding a groundtruth.txt, sorted by name.
// Tags and study labels come from attributes.json when present.
std::vector<GtSequence> load_gt_tree(const fs::path& root);

using SequenceResults = std::map<std::string, std::vector<Box>>;  // seq_id -> boxes

struct TrackerResults {
  std::string tracker;
  SequenceResults sequences;
};

// results_root/<tracker>/<seq_id>.txt, trackers sorted by name.
std::vector<TrackerResults> load_results_tree(const fs::path& root);

// Tags understood by the per-attribute report: those the generator emits
// plus the usual benchmark annotations for externally labelled sequences.
const std::vector<std::string>& known_tags();

struct AttributeScore {
  std::string tag;
  std::size_t sequences = 0;
  double auc = 0.0;
  double precision_at_20 = 0.0;
};

struct EvalReport {
  std::string tracker;
  std::vector<SequenceScore> sequences;
  Aggregate overall;
  std::vector<AttributeScore> per_attribute;
  std::vector<std::string> warnings;
};

// Scores one tracker over all GT sequences. Throws InputError naming the
// sequence when a result is missing or its frame count differs.
EvalReport evaluate_tracker(const TrackerResults& results, std::span<const GtSequence> gt);

// AUC per tag over the subset of sequences carrying it. Unknown tags throw;
// empty subsets are omitted with a warning.
std::vector<AttributeScore> per_attribute_report(std::span<const SequenceScore> scores,
                                                 std::span<const GtSequence> gt,
                                                 std::vector<std::string>* warnings = nullptr);

std::vector<EvalReport> ope_evaluate(const fs::path& results_root, const fs::path& gt_root);

struct DifficultyCell {
  std::string attribute;
  int level_index = 0;
  double level_value = 0.0;
  double mean_iou = 0.0;
  std::size_t samples = 0;  // (tracker, sequence) pairs averaged
};

struct DifficultyTable {
  std::vector<DifficultyCell> cells;  // attribute-major, levels ascending
  const DifficultyCell& cell(const std::string& attribute, int level_index) const;
};

double study_level_value(const std::string& attribute, int level_index);

// Cell (attribute, level) = mean per-sequence IoU over that level's
// sequences and all trackers. Every tracker must cover every study sequence.
DifficultyTable attribute_difficulty(std::span<const TrackerResults> trackers,
                                     std::span<const GtSequence> study_gt);

// Study labels taken from a plan instead of attributes.json.
std::vector<GtSequence> attach_study_tags(std::vector<GtSequence> gt, const seqplan::DatasetPlan& plan);

nlohmann::json report_json(std::span<const EvalReport> reports,
                           const std::optional<DifficultyTable>& difficulty = std::nullopt);
std::string report_csv(std::span<const EvalReport> reports);
std::string difficulty_csv(const DifficultyTable& table);

}  // namespace transgen::evalkit
