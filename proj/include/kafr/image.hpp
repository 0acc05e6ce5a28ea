#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kafr/error.hpp"

namespace kafr {

/// 8-bit grayscale image, rows x cols, row-major so the buffer matches P5 order.
using GrayscaleFrame = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Mean over pixels of the squared intensity difference, intensities as reals.
template <typename DerivedA, typename DerivedB>
double mean_squared_error(const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "frames differ in size");
  }
  if (a.size() == 0) return 0.0;
  return (a.template cast<double>() - b.template cast<double>()).array().square().mean();
}

/// Decodes a binary (P5) PGM with maxval <= 255. Header comments are skipped.
GrayscaleFrame decode_pgm(std::string_view bytes);
std::string encode_pgm(const GrayscaleFrame& frame);

GrayscaleFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayscaleFrame& frame);

struct IndexedFrame {
  std::int64_t frame_index;
  GrayscaleFrame image;
};

/// Loads every `<digits>.pgm` file in `dir`, ordered by the numeric stem.
/// All frames must share dimensions (DimensionMismatch otherwise).
std::vector<IndexedFrame> read_frame_directory(const std::filesystem::path& dir);

}  // namespace kafr
