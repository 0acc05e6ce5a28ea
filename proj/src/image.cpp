#include "kafr/image.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kafr/text.hpp"

namespace kafr {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const auto start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    long value = 0;
    if (start == pos_ || !text::parse_number(bytes_.substr(start, pos_ - start), value)) {
      throw Error(ErrorKind::MalformedRecord, std::string("PGM: bad ") + what);
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayscaleFrame decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorKind::MalformedRecord, "PGM: expected P5 magic");
  }
  HeaderReader header(bytes);
  header.advance(2);
  const long width = header.number("width");
  const long height = header.number("height");
  const long maxval = header.number("maxval");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::MalformedRecord, "PGM: empty image");
  if (maxval <= 0 || maxval > 255) {
    throw Error(ErrorKind::MalformedRecord, "PGM: only 8-bit maxval supported");
  }
  // exactly one whitespace byte separates the header from the raster
  if (header.pos() >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[header.pos()]))) {
    throw Error(ErrorKind::MalformedRecord, "PGM: missing raster separator");
  }
  header.advance(1);

  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - header.pos() < count) {
    throw Error(ErrorKind::MalformedRecord, "PGM: truncated raster");
  }
  GrayscaleFrame frame(height, width);
  std::memcpy(frame.data(), bytes.data() + header.pos(), count);
  return frame;
}

std::string encode_pgm(const GrayscaleFrame& frame) {
  std::string out = "P5\n" + std::to_string(frame.cols()) + " " + std::to_string(frame.rows()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.data()), static_cast<std::size_t>(frame.size()));
  return out;
}

GrayscaleFrame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pgm(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayscaleFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto bytes = encode_pgm(frame);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<IndexedFrame> read_frame_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  }
  std::vector<std::pair<std::int64_t, std::filesystem::path>> files;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    if (!item.is_regular_file() || item.path().extension() != ".pgm") continue;
    const auto stem = item.path().stem().string();
    std::int64_t index = 0;
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit) ||
        !text::parse_number(stem, index)) {
      continue;
    }
    files.emplace_back(index, item.path());
  }
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no numbered PGM frames in " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<IndexedFrame> frames;
  frames.reserve(files.size());
  for (const auto& [index, path] : files) {
    auto image = read_pgm(path);
    if (!frames.empty() && (image.rows() != frames.front().image.rows() ||
                            image.cols() != frames.front().image.cols())) {
      throw Error(ErrorKind::DimensionMismatch, path.string() + ": frame size differs");
    }
    frames.push_back({index, std::move(image)});
  }
  return frames;
}

}  // namespace kafr
