#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "transgen/image.hpp"
#include "transgen/seqplan.hpp"

namespace transgen::annotate {

namespace fs = std::filesystem;

// Pixel box: top-left (x, y), 0-indexed, covering columns x..x+w-1 and rows y..y+h-1.
struct Aabb {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool operator==(const Aabb&) const = default;
};

// Tightest box around the mask's nonzero pixels; empty for an empty mask.
std::optional<Aabb> mask_to_bbox(const Mask& mask);

struct FrameAnnotation {
  int frame_index = 0;
  std::optional<Aabb> target_box;
  std::optional<Aabb> distractor_box;
  bool target_visible = false;
  bool distractor_visible = false;

  bool operator==(const FrameAnnotation&) const = default;
};

FrameAnnotation annotate_frame(int frame_index, const Mask& target, const Mask& distractor);

// "x,y,w,h" or "nan,nan,nan,nan" for an absent box.
std::string format_box(const std::optional<Aabb>& box);
// Throws ParseError (with the given location) on malformed input.
std::optional<Aabb> parse_box(std::string_view line, const std::string& where, std::size_t line_no);

inline constexpr const char* kGroundTruthFile = "groundtruth.txt";
inline constexpr const char* kDistractorGroundTruthFile = "groundtruth_distractor.txt";
inline constexpr const char* kAttributesFile = "attributes.json";

// Writes groundtruth.txt, groundtruth_distractor.txt and attributes.json.
// Annotations must be ordered by frame index starting at 0.
void write_groundtruth(std::span<const FrameAnnotation> annotations, const fs::path& output_dir,
                       const seqplan::AttributeLevels& attributes,
                       const std::optional<seqplan::StudyTag>& study = std::nullopt);

std::vector<std::optional<Aabb>> read_box_file(const fs::path& path);

// Rebuilds annotations from the two ground-truth files of a sequence directory.
std::vector<FrameAnnotation> read_groundtruth(const fs::path& sequence_dir);

}  // namespace transgen::annotate
