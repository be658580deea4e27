#include "fusetrack/mask.hpp"

#include <cmath>
#include <stdexcept>

namespace fusetrack {

Mask Mask::empty(int w, int h) {
  Mask m;
  m.width = w;
  m.height = h;
  if (w > 0 && h > 0) m.runs = {static_cast<std::uint32_t>(static_cast<std::uint64_t>(w) * h)};
  return m;
}

Mask Mask::from_raster(int w, int h, const std::vector<std::uint8_t>& raster) {
  Mask m;
  m.width = w;
  m.height = h;
  const std::uint64_t n = static_cast<std::uint64_t>(w) * h;
  if (raster.size() != n) throw std::invalid_argument("from_raster: raster size mismatch");
  bool value = false;  // runs start with background
  std::uint32_t count = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const bool v = raster[i] != 0;
    if (v == value) {
      ++count;
    } else {
      m.runs.push_back(count);
      value = v;
      count = 1;
    }
  }
  m.runs.push_back(count);
  return m;
}

std::vector<std::uint8_t> Mask::to_raster() const {
  std::vector<std::uint8_t> raster(static_cast<std::uint64_t>(width) * height, 0);
  std::uint64_t pos = 0;
  bool fg = false;
  for (const std::uint32_t run : runs) {
    if (fg)
      for (std::uint64_t i = pos; i < pos + run; ++i) raster[i] = 1;
    pos += run;
    fg = !fg;
  }
  return raster;
}

std::uint64_t Mask::area() const {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < runs.size(); i += 2) a += runs[i];
  return a;
}

bool Mask::consistent() const {
  std::uint64_t total = 0;
  for (const std::uint32_t r : runs) total += r;
  return total == static_cast<std::uint64_t>(width) * height;
}

std::optional<BBox2> Mask::bbox() const {
  int x1 = width, y1 = height, x2 = -1, y2 = -1;
  for_each_foreground([&](int u, int v) {
    x1 = std::min(x1, u);
    y1 = std::min(y1, v);
    x2 = std::max(x2, u);
    y2 = std::max(y2, v);
  });
  if (x2 < 0) return std::nullopt;
  return BBox2{static_cast<double>(x1), static_cast<double>(y1), static_cast<double>(x2 + 1),
               static_cast<double>(y2 + 1)};
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("mask_iou: dimension mismatch");
  // Two-pointer sweep over both run lists.
  std::uint64_t inter = 0, uni = 0;
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = ia < a.runs.size() ? a.runs[ia] : 0;
  std::uint64_t rb = ib < b.runs.size() ? b.runs[ib] : 0;
  bool va = false, vb = false;
  std::uint64_t remaining = static_cast<std::uint64_t>(a.width) * a.height;
  while (remaining > 0) {
    while (ra == 0 && ia + 1 < a.runs.size()) {
      ra = a.runs[++ia];
      va = !va;
    }
    while (rb == 0 && ib + 1 < b.runs.size()) {
      rb = b.runs[++ib];
      vb = !vb;
    }
    const std::uint64_t step = std::min(std::min(ra, rb), remaining);
    if (step == 0) break;
    if (va && vb) inter += step;
    if (va || vb) uni += step;
    ra -= step;
    rb -= step;
    remaining -= step;
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask warp_mask(const Mask& mask, const FlowField& flow) {
  if (mask.width != flow.width || mask.height != flow.height)
    throw std::invalid_argument("warp_mask: dimension mismatch");
  std::vector<std::uint8_t> raster(static_cast<std::uint64_t>(mask.width) * mask.height, 0);
  mask.for_each_foreground([&](int u, int v) {
    const Vec2 d = flow.at(u, v);
    const long tu = std::lround(u + d.x());
    const long tv = std::lround(v + d.y());
    if (tu >= 0 && tu < mask.width && tv >= 0 && tv < mask.height)
      raster[static_cast<std::uint64_t>(tv) * mask.width + tu] = 1;
  });
  return Mask::from_raster(mask.width, mask.height, raster);
}

std::string mask_to_coco_string(const Mask& mask) {
  // Column-major run counts.
  const std::vector<std::uint8_t> raster = mask.to_raster();
  std::vector<std::int64_t> counts;
  bool value = false;
  std::int64_t count = 0;
  for (int u = 0; u < mask.width; ++u) {
    for (int v = 0; v < mask.height; ++v) {
      const bool p = raster[static_cast<std::uint64_t>(v) * mask.width + u] != 0;
      if (p == value) {
        ++count;
      } else {
        counts.push_back(count);
        value = p;
        count = 1;
      }
    }
  }
  counts.push_back(count);

  std::string s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = counts[i];
    if (i > 2) x -= counts[i - 2];
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      c += 48;
      s.push_back(c);
    }
  }
  return s;
}

Mask mask_from_coco_string(int height, int width, const std::string& s) {
  std::vector<std::int64_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw std::invalid_argument("coco rle: truncated string");
      const char c = static_cast<char>(s[p] - 48);
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1ll << (5 * k);
    }
    if (counts.size() > 2) x += counts[counts.size() - 2];
    counts.push_back(x);
  }

  std::vector<std::uint8_t> raster(static_cast<std::uint64_t>(width) * height, 0);
  std::uint64_t pos = 0;
  bool value = false;
  for (const std::int64_t c : counts) {
    if (c < 0 || pos + c > raster.size()) throw std::invalid_argument("coco rle: bad counts");
    if (value) {
      for (std::int64_t i = 0; i < c; ++i) {
        const std::uint64_t idx = pos + i;  // column-major position
        const std::uint64_t v = idx % height, u = idx / height;
        raster[v * width + u] = 1;
      }
    }
    pos += c;
    value = !value;
  }
  if (pos != raster.size()) throw std::invalid_argument("coco rle: counts do not cover image");
  return Mask::from_raster(width, height, raster);
}

}  // namespace fusetrack
