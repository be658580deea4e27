#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusetrack/raster.hpp"
#include "fusetrack/types.hpp"

namespace fusetrack {

// Binary segmentation mask stored as row-major run lengths, alternating
// background/foreground and always starting with a background count
// (possibly 0). Run counts sum to width*height.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint32_t> runs;

  static Mask empty(int w, int h);
  static Mask from_raster(int w, int h, const std::vector<std::uint8_t>& raster);

  std::vector<std::uint8_t> to_raster() const;
  std::uint64_t area() const;  // foreground pixel count
  bool is_empty() const { return area() == 0; }
  bool consistent() const;  // runs sum to width*height

  // Tight pixel bounding box of the foreground, [x1,y1,x2,y2] with x2/y2
  // exclusive. nullopt for an empty mask.
  std::optional<BBox2> bbox() const;

  // Visits foreground pixels in row-major order.
  template <class Fn>
  void for_each_foreground(Fn&& fn) const {
    std::uint64_t pos = 0;
    bool fg = false;
    for (const std::uint32_t run : runs) {
      if (fg) {
        for (std::uint64_t i = pos; i < pos + run; ++i)
          fn(static_cast<int>(i % width), static_cast<int>(i / width));
      }
      pos += run;
      fg = !fg;
    }
  }
};

// |a ∩ b| / |a ∪ b|; 0 when both masks are empty. Throws on dimension
// mismatch.
double mask_iou(const Mask& a, const Mask& b);

// Moves every foreground pixel by the flow vector at that pixel, rounding
// to the nearest pixel; pixels leaving the image are dropped and collisions
// union.
Mask warp_mask(const Mask& mask, const FlowField& flow);

// COCO-style compressed RLE string (column-major counts, 5-bit varint
// chars offset by 48, delta-coded after the first two counts), as used by
// KITTI MOTS annotation files.
std::string mask_to_coco_string(const Mask& mask);
Mask mask_from_coco_string(int height, int width, const std::string& s);

}  // namespace fusetrack
