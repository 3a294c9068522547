#include "rffr/data/grid.hpp"

#include <algorithm>

#include "rffr/common/error.hpp"

namespace rffr {

BlockGrid::BlockGrid(int k, int image_side) : k_(k), image_side_(image_side) {
  if (k < 1 || image_side < 1) throw InvalidInput("grid k and image side must be positive");
  if (image_side % k != 0) {
    throw InvalidInput("grid k=" + std::to_string(k) + " does not divide image side " +
                       std::to_string(image_side));
  }
}

void BlockGrid::check_index(int j) const {
  if (j < 1 || j > block_count()) {
    throw InvalidInput("block index " + std::to_string(j) + " outside [1, " +
                       std::to_string(block_count()) + "]");
  }
}

int BlockGrid::row_offset(int j) const {
  check_index(j);
  return ((j - 1) / k_) * block_side();
}

int BlockGrid::col_offset(int j) const {
  check_index(j);
  return ((j - 1) % k_) * block_side();
}

int BlockGrid::block_of(int x, int y) const {
  return (y / block_side()) * k_ + (x / block_side()) + 1;
}

int BlockMask::zero_count() const {
  return static_cast<int>(std::count(bitmap.begin(), bitmap.end(), 0));
}

namespace {

void check_image(const Image& image, const BlockGrid& grid) {
  if (image.height != grid.image_side() || image.width != grid.image_side()) {
    throw InvalidInput("image " + std::to_string(image.height) + "x" +
                       std::to_string(image.width) + " does not match grid side " +
                       std::to_string(grid.image_side()));
  }
}

}  // namespace

Image extract_block(const Image& image, const BlockGrid& grid, int j) {
  check_image(image, grid);
  const int side = grid.block_side();
  const int y0 = grid.row_offset(j);
  const int x0 = grid.col_offset(j);
  Image block(side, side, image.channels);
  const auto row_len = static_cast<std::size_t>(side) * image.channels;
  for (int y = 0; y < side; ++y) {
    std::copy_n(image.data.begin() + static_cast<std::ptrdiff_t>(image.index(y0 + y, x0, 0)),
                row_len, block.data.begin() + static_cast<std::ptrdiff_t>(block.index(y, 0, 0)));
  }
  return block;
}

void place_block(Image& image, const BlockGrid& grid, int j, const Image& block) {
  check_image(image, grid);
  const int side = grid.block_side();
  if (block.height != side || block.width != side || block.channels != image.channels) {
    throw InvalidInput("block shape does not match grid block side");
  }
  const int y0 = grid.row_offset(j);
  const int x0 = grid.col_offset(j);
  const auto row_len = static_cast<std::size_t>(side) * image.channels;
  for (int y = 0; y < side; ++y) {
    std::copy_n(block.data.begin() + static_cast<std::ptrdiff_t>(block.index(y, 0, 0)), row_len,
                image.data.begin() + static_cast<std::ptrdiff_t>(image.index(y0 + y, x0, 0)));
  }
}

std::vector<Image> divide(const Image& image, const BlockGrid& grid) {
  check_image(image, grid);
  std::vector<Image> blocks;
  blocks.reserve(static_cast<std::size_t>(grid.block_count()));
  for (int j = 1; j <= grid.block_count(); ++j) blocks.push_back(extract_block(image, grid, j));
  return blocks;
}

Image assemble(const std::vector<Image>& blocks, const BlockGrid& grid) {
  if (static_cast<int>(blocks.size()) != grid.block_count()) {
    throw InvalidInput("expected " + std::to_string(grid.block_count()) + " blocks, got " +
                       std::to_string(blocks.size()));
  }
  Image image(grid.image_side(), grid.image_side(), blocks.front().channels);
  for (int j = 1; j <= grid.block_count(); ++j) place_block(image, grid, j, blocks[j - 1]);
  return image;
}

BlockMask make_mask(int j, const BlockGrid& grid) {
  grid.check_index(j);
  BlockMask mask;
  mask.j = j;
  mask.side = grid.image_side();
  mask.bitmap.assign(static_cast<std::size_t>(mask.side) * mask.side, 1);
  const int y0 = grid.row_offset(j);
  const int x0 = grid.col_offset(j);
  for (int y = y0; y < y0 + grid.block_side(); ++y)
    for (int x = x0; x < x0 + grid.block_side(); ++x)
      mask.bitmap[static_cast<std::size_t>(y) * mask.side + x] = 0;
  return mask;
}

}  // namespace rffr
