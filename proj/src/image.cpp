#include "transgen/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "transgen/error.hpp"

namespace transgen {

namespace fs = std::filesystem;

bool Mask::empty() const {
  return std::all_of(data.begin(), data.end(), [](std::uint8_t v) { return v == 0; });
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

struct NetpbmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) break;
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  // The single whitespace byte after maxval has been consumed.
  return tok;
}

NetpbmHeader read_header(std::istream& in, const fs::path& path, std::string_view magic) {
  const std::string m = next_token(in);
  if (m != magic) throw InputError(path.string() + ": expected netpbm magic " + std::string(magic));
  NetpbmHeader h;
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw InputError(path.string() + ": malformed netpbm header");
  }
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 255) {
    throw InputError(path.string() + ": unsupported netpbm dimensions or maxval");
  }
  return h;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

void write_blob(const fs::path& path, const std::string& header, const std::uint8_t* bytes,
                std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << header;
  out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

RgbImage read_ppm(const fs::path& path) {
  auto in = open_in(path);
  const NetpbmHeader h = read_header(in, path, "P6");
  RgbImage img(h.width, h.height);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw InputError(path.string() + ": truncated pixel data");
  }
  if (h.maxval != 255) {
    for (auto& v : img.data) v = static_cast<std::uint8_t>((v * 255 + h.maxval / 2) / h.maxval);
  }
  return img;
}

void write_ppm(const fs::path& path, const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  write_blob(path, header, image.data.data(), image.data.size());
}

Mask read_pgm_mask(const fs::path& path) {
  auto in = open_in(path);
  const NetpbmHeader h = read_header(in, path, "P5");
  Mask m(h.width, h.height);
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(m.data.size())) {
    throw InputError(path.string() + ": truncated pixel data");
  }
  for (auto& v : m.data) v = v != 0 ? 1 : 0;
  return m;
}

void write_pgm_mask(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), bytes.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v != 0 ? 255 : 0; });
  const std::string header =
      "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  write_blob(path, header, bytes.data(), bytes.size());
}

}  // namespace transgen
