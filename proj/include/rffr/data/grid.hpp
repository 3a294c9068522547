#pragma once

#include <vector>

#include "rffr/data/image.hpp"

namespace rffr {

/// k x k division of a square image. Blocks are numbered 1..k*k row-major.
class BlockGrid {
 public:
  BlockGrid(int k, int image_side);

  int k() const { return k_; }
  int image_side() const { return image_side_; }
  int block_side() const { return image_side_ / k_; }
  int block_count() const { return k_ * k_; }

  void check_index(int j) const;
  int row_offset(int j) const;
  int col_offset(int j) const;
  /// Block that owns pixel (x, y).
  int block_of(int x, int y) const;

  bool operator==(const BlockGrid&) const = default;

 private:
  int k_;
  int image_side_;
};

/// Binary map that is 0 on block j and 1 elsewhere.
struct BlockMask {
  int j = 0;
  int side = 0;
  std::vector<unsigned char> bitmap;  // side*side, row-major

  unsigned char at(int y, int x) const { return bitmap[static_cast<std::size_t>(y) * side + x]; }
  int zero_count() const;
};

/// Splits the image into k*k blocks in row-major order.
std::vector<Image> divide(const Image& image, const BlockGrid& grid);
/// Inverse of divide.
Image assemble(const std::vector<Image>& blocks, const BlockGrid& grid);

Image extract_block(const Image& image, const BlockGrid& grid, int j);
void place_block(Image& image, const BlockGrid& grid, int j, const Image& block);

BlockMask make_mask(int j, const BlockGrid& grid);

}  // namespace rffr
