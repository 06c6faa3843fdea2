#include "transgen/annotate.hpp"

#include <charconv>
#include <fstream>

#include "transgen/error.hpp"
#include "transgen/simd/kernels.hpp"

namespace transgen::annotate {

std::optional<Aabb> mask_to_bbox(const Mask& mask) {
  const auto b = simd::active_kernels().mask_bounds(mask.data.data(), mask.width, mask.height);
  if (!b.found) return std::nullopt;
  return Aabb{b.x0, b.y0, b.x1 - b.x0 + 1, b.y1 - b.y0 + 1};
}

FrameAnnotation annotate_frame(int frame_index, const Mask& target, const Mask& distractor) {
  FrameAnnotation a;
  a.frame_index = frame_index;
  a.target_box = mask_to_bbox(target);
  a.distractor_box = mask_to_bbox(distractor);
  a.target_visible = a.target_box.has_value();
  a.distractor_visible = a.distractor_box.has_value();
  return a;
}

std::string format_box(const std::optional<Aabb>& box) {
  if (!box) return "nan,nan,nan,nan";
  return std::to_string(box->x) + "," + std::to_string(box->y) + "," + std::to_string(box->w) +
         "," + std::to_string(box->h);
}

std::optional<Aabb> parse_box(std::string_view line, const std::string& where,
                              std::size_t line_no) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  if (line == "nan,nan,nan,nan") return std::nullopt;
  int v[4];
  const char* p = line.data();
  const char* end = line.data() + line.size();
  for (int k = 0; k < 4; ++k) {
    const auto [next, ec] = std::from_chars(p, end, v[k]);
    if (ec != std::errc()) throw ParseError(where, line_no, "expected integer box 'x,y,w,h'");
    p = next;
    if (k < 3) {
      if (p == end || *p != ',') throw ParseError(where, line_no, "expected ',' between fields");
      ++p;
    }
  }
  if (p != end) throw ParseError(where, line_no, "trailing characters after box");
  if (v[0] < 0 || v[1] < 0) throw ParseError(where, line_no, "box origin must be non-negative");
  if (v[2] < 1 || v[3] < 1) throw ParseError(where, line_no, "box width and height must be >= 1");
  return Aabb{v[0], v[1], v[2], v[3]};
}

namespace {

void write_lines(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

void write_groundtruth(std::span<const FrameAnnotation> annotations, const fs::path& output_dir,
                       const seqplan::AttributeLevels& attributes,
                       const std::optional<seqplan::StudyTag>& study) {
  std::string target;
  std::string distractor;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].frame_index != static_cast<int>(i)) {
      throw Error("annotations out of order at frame " + std::to_string(i));
    }
    target += format_box(annotations[i].target_box) + "\n";
    distractor += format_box(annotations[i].distractor_box) + "\n";
  }
  write_lines(output_dir / kGroundTruthFile, target);
  write_lines(output_dir / kDistractorGroundTruthFile, distractor);

  nlohmann::json j;
  j["levels"] = attributes;
  j["tags"] = attributes.tags();
  if (study) j["study"] = *study;
  write_lines(output_dir / kAttributesFile, j.dump(2) + "\n");
}

std::vector<std::optional<Aabb>> read_box_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::optional<Aabb>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    out.push_back(parse_box(line, path.string(), n));
  }
  return out;
}

std::vector<FrameAnnotation> read_groundtruth(const fs::path& dir) {
  const auto target = read_box_file(dir / kGroundTruthFile);
  const auto distractor = read_box_file(dir / kDistractorGroundTruthFile);
  if (target.size() != distractor.size()) {
    throw InputError(dir.string() + ": target and distractor ground truth lengths differ");
  }
  std::vector<FrameAnnotation> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    out[i].frame_index = static_cast<int>(i);
    out[i].target_box = target[i];
    out[i].distractor_box = distractor[i];
    out[i].target_visible = target[i].has_value();
    out[i].distractor_visible = distractor[i].has_value();
  }
  return out;
}

}  // namespace transgen::annotate
