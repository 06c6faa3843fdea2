#include "transgen/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "transgen/assets.hpp"
#include "transgen/error.hpp"
#include "transgen/evalkit.hpp"
#include "transgen/image.hpp"
#include "transgen/parallel.hpp"
#include "transgen/render.hpp"
#include "transgen/seqplan.hpp"

#ifdef TRANSGEN_HAVE_OPENCV
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>
#endif

namespace transgen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

// Settings shared by plan and study.
struct PlanFlags {
  std::string corpus;
  std::string catalog;
  std::uint64_t seed = kDefaultSeed;
  seqplan::GenerationParams params;
};

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--corpus", f.corpus, "background corpus manifest (JSON)");
  cmd->add_option("--catalog", f.catalog, "object catalog manifest (JSON)");
  cmd->add_option("--seed", f.seed, "global seed")->capture_default_str();
  cmd->add_option("--frames", f.params.n_frames, "frames per sequence")->capture_default_str();
  cmd->add_option("--width", f.params.render.width, "frame width")->capture_default_str();
  cmd->add_option("--height", f.params.render.height, "frame height")->capture_default_str();
  cmd->add_option("--spp", f.params.render.spp, "samples per pixel")->capture_default_str();
  cmd->add_option("--vfov", f.params.render.vfov_deg, "vertical field of view, degrees")
      ->capture_default_str();
  cmd->add_flag("--modal-masks", f.params.render.modal_masks,
                "clear target mask pixels under occluder stripes");
  cmd->add_option("--blur-prob", f.params.blur_probability)->capture_default_str();
  cmd->add_option("--occlusion-prob", f.params.occlusion_probability)->capture_default_str();
  cmd->add_option("--distractor-prob", f.params.distractor_probability)->capture_default_str();
}

// Fills options that were not given on the command line from a flat JSON
// object whose keys are long option names ("batch_size" or "batch-size").
void apply_config(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open config " + config_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(config_path + ": " + e.what());
  }
  if (!doc.is_object()) throw InputError(config_path + ": config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = cmd->get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") {
      throw InputError(config_path + ": unknown setting '" + key + "' for " + cmd->get_name());
    }
    if (opt->count() > 0) continue;  // command line wins
    std::vector<std::string> results;
    const auto as_text = [](const json& v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (value.is_array()) {
      for (const auto& v : value) results.push_back(as_text(v));
    } else {
      results.push_back(as_text(value));
    }
    opt->clear();
    for (const auto& r : results) opt->add_result(r);
    opt->run_callback();
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required ") + flag);
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw InputError(std::string(what) + " not found: " + path);
}

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// "a..b" half-open; either bound may be omitted.
Range parse_range(const std::string& text, std::size_t n) {
  Range r{0, n};
  if (text.empty()) return r;
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw InputError("range must look like a..b: " + text);
  const auto parse_bound = [&](std::string_view s, std::size_t fallback) {
    if (s.empty()) return fallback;
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw InputError("bad range bound in " + text);
    return v;
  };
  const std::string_view sv(text);
  r.begin = parse_bound(sv.substr(0, dots), 0);
  r.end = std::min(parse_bound(sv.substr(dots + 2), n), n);
  if (r.begin > r.end) throw InputError("empty range " + text);
  return r;
}

void check_manifest(const fs::path& path, const std::string& hash, const char* what) {
  if (!fs::exists(path)) throw InputError(std::string(what) + " manifest not found: " + path.string());
  if (seqplan::fnv1a_hex(path) != hash) {
    throw InputError(std::string(what) + " manifest changed since the plan was made: " + path.string());
  }
}

// Renders plan.sequences[range] under out_root. Sequences are the unit of
// dispatch; leftover workers go to rows within each frame.
int render_plan(const seqplan::DatasetPlan& plan, const Range& range, const fs::path& out_root,
                int workers, std::ostream& out, std::ostream& err) {
  check_manifest(plan.corpus_manifest, plan.corpus_hash, "corpus");
  check_manifest(plan.catalog_manifest, plan.catalog_hash, "catalog");
  const auto corpus = seqplan::load_corpus(plan.corpus_manifest);
  const auto catalog = seqplan::load_catalog(plan.catalog_manifest);
  fs::create_directories(out_root);

  const std::size_t n = range.end - range.begin;
  const int seq_workers = static_cast<int>(std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1)));
  render::SequenceOptions options;
  options.workers = std::max(1, workers / seq_workers);

  enum class Outcome { kRendered, kSkipped, kFailed };
  std::vector<Outcome> outcomes(n, Outcome::kFailed);
  std::vector<std::string> messages(n);
  std::mutex log_mutex;
  parallel_for(n, seq_workers, [&](std::size_t i) {
    const auto& config = plan.sequences[range.begin + i];
    const fs::path dir = out_root / config.seq_id;
    try {
      if (render::sequence_complete(config, dir)) {
        outcomes[i] = Outcome::kSkipped;
        return;
      }
      render::render_sequence(config, corpus, catalog, dir, options);
      outcomes[i] = Outcome::kRendered;
      std::lock_guard lock(log_mutex);
      out << "rendered " << config.seq_id << "\n";
    } catch (const std::exception& e) {
      messages[i] = e.what();
    }
  });

  std::size_t rendered = 0, skipped = 0, failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (outcomes[i]) {
      case Outcome::kRendered: ++rendered; break;
      case Outcome::kSkipped: ++skipped; break;
      case Outcome::kFailed:
        ++failed;
        err << "failed " << plan.sequences[range.begin + i].seq_id << ": " << messages[i] << "\n";
        break;
    }
  }
  out << "rendered " << rendered << ", skipped " << skipped << ", failed " << failed << "\n";
  return failed > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_plan(const PlanFlags& f, const std::string& out_path, int n_sequences, std::ostream& out) {
  require(f.corpus, "--corpus");
  require(f.catalog, "--catalog");
  if (n_sequences < 1) throw InputError("--sequences must be at least 1");
  require_file(f.corpus, "corpus manifest");
  require_file(f.catalog, "catalog manifest");
  const auto corpus = seqplan::load_corpus(f.corpus);
  const auto catalog = seqplan::load_catalog(f.catalog);
  const auto plan = seqplan::build_dataset_plan(f.seed, n_sequences, corpus, catalog, f.params);
  if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
  seqplan::write_plan(out_path, plan);
  out << "plan " << out_path << ": " << plan.sequences.size() << " sequences, "
      << plan.total_frames() << " frames expected\n";
  return kExitOk;
}

int cmd_generate(const std::string& plan_path, const std::string& range_text,
                 const std::string& out_dir, int workers, std::ostream& out, std::ostream& err) {
  require(plan_path, "plan file");
  require_file(plan_path, "plan");
  const auto plan = seqplan::read_plan(plan_path);
  const auto range = parse_range(range_text, plan.sequences.size());
  const fs::path root = out_dir.empty() ? fs::path(plan_path).parent_path() : fs::path(out_dir);
  return render_plan(plan, range, root.empty() ? fs::path(".") : root, workers, out, err);
}

int cmd_study(const PlanFlags& f, const std::string& out_dir, int workers, std::ostream& out,
              std::ostream& err) {
  require(f.corpus, "--corpus");
  require(f.catalog, "--catalog");
  require(out_dir, "--out");
  require_file(f.corpus, "corpus manifest");
  require_file(f.catalog, "catalog manifest");
  const auto corpus = seqplan::load_corpus(f.corpus);
  const auto catalog = seqplan::load_catalog(f.catalog);
  const auto plan = seqplan::build_attribute_study_plan(f.seed, corpus, catalog, f.params);
  fs::create_directories(out_dir);
  seqplan::write_plan(fs::path(out_dir) / "study_plan.json", plan);
  out << "study plan: " << plan.sequences.size() << " sequences, " << plan.total_frames()
      << " frames expected\n";
  return render_plan(plan, {0, plan.sequences.size()}, out_dir, workers, out, err);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw Error("cannot write " + path.string());
  o << text;
}

int cmd_eval(const std::string& results, const std::string& gt, const std::string& out_dir,
             bool difficulty, const std::string& plan_path, std::ostream& out, std::ostream& err) {
  require(results, "--results");
  require(gt, "--gt");
  require(out_dir, "--out");
  require_file(results, "results root");
  require_file(gt, "ground-truth root");

  auto gt_tree = evalkit::load_gt_tree(gt);
  if (gt_tree.empty()) throw InputError("no ground-truth sequences under " + gt);
  if (!plan_path.empty()) gt_tree = evalkit::attach_study_tags(std::move(gt_tree), seqplan::read_plan(plan_path));
  const auto trackers = evalkit::load_results_tree(results);
  if (trackers.empty()) throw InputError("no tracker results under " + results);

  std::vector<evalkit::EvalReport> reports;
  for (const auto& t : trackers) reports.push_back(evalkit::evaluate_tracker(t, gt_tree));
  std::optional<evalkit::DifficultyTable> table;
  if (difficulty) table = evalkit::attribute_difficulty(trackers, gt_tree);

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "report.json", evalkit::report_json(reports, table).dump(2) + "\n");
  write_text(fs::path(out_dir) / "report.csv", evalkit::report_csv(reports));
  if (table) write_text(fs::path(out_dir) / "difficulty.csv", evalkit::difficulty_csv(*table));

  for (const auto& r : reports) {
    for (const auto& w : r.warnings) err << "warning: " << r.tracker << ": " << w << "\n";
    out << r.tracker << ": AUC " << r.overall.success.auc << ", precision@20 "
        << r.overall.precision.at_20px << " over " << r.sequences.size() << " sequences\n";
  }
  return kExitOk;
}

int cmd_mix(const std::string& trans, const std::string& opaque, std::size_t batch_size,
            std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  require(trans, "--transparent");
  require(opaque, "--opaque");
  require(out_path, "--out");
  if (batch_size == 0) throw InputError("--batch-size must be positive");
  require_file(trans, "transparent manifest");
  require_file(opaque, "opaque manifest");
  const auto t = seqplan::load_sequence_index(trans);
  const auto o = seqplan::load_sequence_index(opaque);
  Rng rng(seed);
  const auto spec = seqplan::mix_batches(t, o, batch_size, rng);

  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write " + out_path);
  for (const auto& e : spec.entries) {
    const auto& seq = (e.source == seqplan::Source::kTransparent ? t : o)[e.sequence];
    json line = {{"source", seqplan::to_string(e.source)}, {"sequence", seq.id}, {"frame", e.frame}};
    file << line.dump() << "\n";
  }
  out << spec.entries.size() << " entries, transparent fraction " << spec.transparent_fraction()
      << "\n";
  return kExitOk;
}

#ifdef TRANSGEN_HAVE_OPENCV
RgbImage to_rgb_image(const cv::Mat& bgr_in, int width, int height) {
  cv::Mat bgr = bgr_in;
  if (bgr.channels() == 1) cv::cvtColor(bgr_in, bgr, cv::COLOR_GRAY2BGR);
  if (bgr.channels() == 4) cv::cvtColor(bgr_in, bgr, cv::COLOR_BGRA2BGR);
  if (bgr.depth() != CV_8U) bgr.convertTo(bgr, CV_8U, bgr.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
  if (width > 0 && height > 0 && (bgr.cols != width || bgr.rows != height)) {
    cv::resize(bgr, bgr, cv::Size(width, height), 0, 0, cv::INTER_AREA);
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage img(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::copy_n(rgb.ptr<std::uint8_t>(y), 3 * rgb.cols, img.pixel(0, y));
  }
  return img;
}
#endif

int cmd_convert_bg(const std::string& input, const std::string& out_dir, int width, int height,
                   int max_frames, const std::string& manifest, const std::string& id,
                   std::ostream& out) {
#ifdef TRANSGEN_HAVE_OPENCV
  require(input, "--input");
  require(out_dir, "--out");
  require_file(input, "input");
  if ((width > 0) != (height > 0)) throw InputError("--width and --height go together");
  fs::create_directories(out_dir);
  int written = 0;
  const auto emit = [&](const cv::Mat& m) {
    char name[32];
    std::snprintf(name, sizeof name, "%06d.ppm", written);
    write_ppm(fs::path(out_dir) / name, to_rgb_image(m, width, height));
    ++written;
  };
  const auto limit_reached = [&] { return max_frames > 0 && written >= max_frames; };
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      if (limit_reached()) break;
      const cv::Mat m = cv::imread(p.string(), cv::IMREAD_COLOR);
      if (m.empty()) continue;  // not an image
      emit(m);
    }
  } else {
    cv::VideoCapture cap(input);
    if (!cap.isOpened()) throw InputError("cannot decode " + input);
    cv::Mat m;
    while (!limit_reached() && cap.read(m)) emit(m);
  }
  if (written == 0) throw InputError("no frames decoded from " + input);
  out << "wrote " << written << " frames to " << out_dir << "\n";

  if (!manifest.empty()) {
    seqplan::Corpus corpus;
    if (fs::exists(manifest)) corpus = seqplan::load_corpus(manifest);
    const std::string entry_id = id.empty() ? fs::path(out_dir).filename().string() : id;
    std::erase_if(corpus.entries, [&](const auto& e) { return e.id == entry_id; });
    corpus.entries.push_back({entry_id, fs::absolute(out_dir), written});
    seqplan::write_corpus(manifest, corpus);
    out << "corpus " << manifest << ": " << corpus.entries.size() << " backgrounds\n";
  }
  return kExitOk;
#else
  (void)input, (void)out_dir, (void)width, (void)height, (void)max_frames, (void)manifest, (void)id;
  (void)out;
  throw InputError("convert-bg needs a build with OpenCV");
#endif
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic transparent-object tracking data: planning, rendering, evaluation"};
  app.name("transgen");
  app.require_subcommand(1);

  std::string config;
  int workers = default_worker_count();
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON file of option values; flags win");
  };
  const auto add_workers = [&](CLI::App* cmd) {
    cmd->add_option("--workers", workers, "worker threads (default: TRANSGEN_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
  };

  PlanFlags pf;
  int n_sequences = 0;
  std::string plan_out = "plan.json";
  auto* plan = app.add_subcommand("plan", "sample a dataset plan");
  add_common(plan);
  add_plan_flags(plan, pf);
  plan->add_option("--sequences", n_sequences, "number of sequences");
  plan->add_option("--out", plan_out, "plan file to write")->capture_default_str();

  std::string plan_path, range_text, gen_out;
  auto* gen = app.add_subcommand("generate", "render the sequences of a plan");
  add_common(gen);
  add_workers(gen);
  gen->add_option("plan", plan_path, "plan.json");
  gen->add_option("--range", range_text, "half-open index range a..b");
  gen->add_option("--out", gen_out, "output root (default: the plan's directory)");

  PlanFlags sf;
  std::string study_out;
  auto* study = app.add_subcommand("study", "plan and render the 80-sequence attribute study");
  add_common(study);
  add_workers(study);
  add_plan_flags(study, sf);
  study->add_option("--out", study_out, "output root");

  std::string results, gt, eval_out, eval_plan;
  bool difficulty = false;
  auto* eval = app.add_subcommand("eval", "one-pass evaluation of tracker results");
  add_common(eval);
  eval->add_option("--results", results, "results root: <tracker>/<sequence>.txt");
  eval->add_option("--gt", gt, "ground-truth root: <sequence>/groundtruth.txt");
  eval->add_option("--out", eval_out, "report directory");
  eval->add_flag("--difficulty", difficulty, "add the attribute difficulty table (study tree)");
  eval->add_option("--plan", eval_plan, "take study labels from this plan");

  std::string mix_t, mix_o, mix_out;
  std::size_t batch_size = 0;
  std::uint64_t mix_seed = kDefaultSeed;
  auto* mix = app.add_subcommand("mix", "sample training entries from transparent and opaque sets");
  add_common(mix);
  mix->add_option("--transparent", mix_t, "transparent sequence manifest");
  mix->add_option("--opaque", mix_o, "opaque sequence manifest");
  mix->add_option("--batch-size", batch_size, "number of entries");
  mix->add_option("--seed", mix_seed)->capture_default_str();
  mix->add_option("--out", mix_out, "JSON-lines output file");

  std::string cv_in, cv_out, cv_manifest, cv_id;
  int cv_w = 0, cv_h = 0, cv_max = 0;
  auto* conv = app.add_subcommand("convert-bg", "convert a video or image folder to a background");
  add_common(conv);
  conv->add_option("--input", cv_in, "video file or directory of images");
  conv->add_option("--out", cv_out, "directory for %06d.ppm frames");
  conv->add_option("--width", cv_w, "resize width");
  conv->add_option("--height", cv_h, "resize height");
  conv->add_option("--max-frames", cv_max, "stop after this many frames");
  conv->add_option("--manifest", cv_manifest, "corpus manifest to add the background to");
  conv->add_option("--id", cv_id, "background id (default: output directory name)");

  assets::DemoOptions demo;
  std::string demo_out;
  auto* dem = app.add_subcommand("demo-assets", "write a procedural corpus and catalog");
  add_common(dem);
  dem->add_option("--out", demo_out, "output directory");
  dem->add_option("--backgrounds", demo.backgrounds)->capture_default_str();
  dem->add_option("--frames", demo.frames)->capture_default_str();
  dem->add_option("--width", demo.width)->capture_default_str();
  dem->add_option("--height", demo.height)->capture_default_str();
  dem->add_option("--seed", demo.seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    apply_config(cmd, config);
    if (cmd == plan) return cmd_plan(pf, plan_out, n_sequences, out);
    if (cmd == gen) return cmd_generate(plan_path, range_text, gen_out, workers, out, err);
    if (cmd == study) return cmd_study(sf, study_out, workers, out, err);
    if (cmd == eval) return cmd_eval(results, gt, eval_out, difficulty, eval_plan, out, err);
    if (cmd == mix) return cmd_mix(mix_t, mix_o, batch_size, mix_seed, mix_out, out);
    if (cmd == conv) return cmd_convert_bg(cv_in, cv_out, cv_w, cv_h, cv_max, cv_manifest, cv_id, out);
    if (cmd == dem) {
      require(demo_out, "--out");
      const auto paths = assets::write_demo_assets(demo_out, demo);
      out << "corpus " << paths.corpus_manifest.string() << "\ncatalog "
          << paths.catalog_manifest.string() << "\n";
      return kExitOk;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}

}  // namespace transgen::cli
