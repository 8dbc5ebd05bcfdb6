#include "eccnn/raster.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "eccnn/errors.hpp"

namespace eccnn {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FileNotFoundError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
class HeaderParser {
 public:
  HeaderParser(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) t.push_back(static_cast<char>(bytes_[pos_++]));
    if (t.empty()) throw FormatError(path_.string() + ": truncated header");
    return t;
  }
  int number() {
    const std::string t = token();
    for (char c : t) {
      if (c < '0' || c > '9') throw FormatError(path_.string() + ": malformed header value '" + t + "'");
    }
    return std::stoi(t);
  }
  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size()) throw FormatError(path_.string() + ": missing raster data");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::vector<std::uint8_t>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::vector<std::uint8_t>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << header;
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  HeaderParser p(bytes, path);
  if (p.token() != "P5") throw FormatError(path.string() + ": not a binary PGM (P5) file");
  GrayImage img;
  img.w = p.number();
  img.h = p.number();
  const int maxval = p.number();
  if (img.w <= 0 || img.h <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError(path.string() + ": unsupported PGM geometry or maxval");
  }
  const std::size_t start = p.raster_start();
  const std::size_t n = static_cast<std::size_t>(img.w) * img.h;
  if (bytes.size() < start + n) throw FormatError(path.string() + ": truncated raster");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + n));
  return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  write_bytes(path, "P5\n" + std::to_string(image.w) + " " + std::to_string(image.h) + "\n255\n",
              image.pixels);
}

LabelMap read_mask(const std::filesystem::path& path, int num_classes) {
  const GrayImage img = read_pgm(path);
  LabelMap mask(1, img.h, img.w);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const int v = img.pixels[i];
    if (num_classes > 0 && v >= num_classes && v != kIgnoreIndex) {
      throw ValidationError(path.string() + ": label " + std::to_string(v) + " outside [0, " +
                            std::to_string(num_classes - 1) + "]");
    }
    mask.values[i] = v;
  }
  return mask;
}

void write_mask(const LabelMap& mask, const std::filesystem::path& path) {
  if (mask.n != 1) throw ValidationError("write_mask: expected a single mask");
  GrayImage img{mask.h, mask.w, {}};
  img.pixels.reserve(mask.size());
  for (int v : mask.values) {
    if (v < 0 || v > 255) throw ValidationError("write_mask: label " + std::to_string(v) + " does not fit 8 bits");
    img.pixels.push_back(static_cast<std::uint8_t>(v));
  }
  write_pgm(img, path);
}

std::array<std::uint8_t, 3> class_color(int label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kPalette{{
      {0, 0, 0},       {230, 25, 75},  {60, 180, 75},  {255, 225, 25},
      {0, 130, 200},   {245, 130, 48}, {145, 30, 180}, {70, 240, 240},
      {240, 50, 230},  {210, 245, 60}, {250, 190, 212}, {0, 128, 128},
  }};
  return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

void write_overlay(const GrayImage& image, const LabelMap& mask, const std::filesystem::path& path) {
  if (mask.h != image.h || mask.w != image.w) {
    throw ShapeError("write_overlay: mask and image sizes differ");
  }
  std::vector<std::uint8_t> rgb;
  rgb.reserve(image.pixels.size() * 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const int g = image.pixels[i];
    const int label = mask.values[i];
    if (label == kIgnoreIndex) {
      rgb.insert(rgb.end(), {static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(g),
                             static_cast<std::uint8_t>(g)});
      continue;
    }
    const auto c = class_color(label);
    for (int k = 0; k < 3; ++k) rgb.push_back(static_cast<std::uint8_t>((g + c[k]) / 2));
  }
  write_bytes(path, "P6\n" + std::to_string(image.w) + " " + std::to_string(image.h) + "\n255\n", rgb);
}

}  // namespace eccnn
