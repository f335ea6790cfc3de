#pragma once

#include <compare>
#include <cstddef>

namespace depthfill {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend constexpr PixelCoord operator+(PixelCoord a, PixelCoord b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr PixelCoord operator-(PixelCoord a, PixelCoord b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr bool operator==(PixelCoord, PixelCoord) = default;
  // Row-major order: (y, x).
  friend constexpr auto operator<=>(PixelCoord a, PixelCoord b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  [[nodiscard]] constexpr int width() const { return x1 - x0; }
  [[nodiscard]] constexpr int height() const { return y1 - y0; }
  [[nodiscard]] constexpr bool empty() const { return x1 <= x0 || y1 <= y0; }
  [[nodiscard]] constexpr bool contains(PixelCoord p) const {
    return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
  }
  [[nodiscard]] constexpr bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

constexpr Rect intersect(const Rect& a, const Rect& b) {
  Rect r{a.x0 > b.x0 ? a.x0 : b.x0, a.y0 > b.y0 ? a.y0 : b.y0, a.x1 < b.x1 ? a.x1 : b.x1,
         a.y1 < b.y1 ? a.y1 : b.y1};
  if (r.empty()) return Rect{};
  return r;
}

}  // namespace depthfill
