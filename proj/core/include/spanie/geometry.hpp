#pragma once

#include <array>
#include <string>
#include <vector>

namespace spanie {

inline constexpr int kGridMax = 1000;

// Axis-aligned box on the normalized 0-1000 page grid, origin top-left.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool valid() const;
  int width() const { return x1 - x0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

std::string to_string(const BoundingBox& box);
// Throws DomainError unless the box satisfies the grid invariants.
void validate(const BoundingBox& box);

struct PixelBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// OCR quadrilateral corners in the order (x1,y1) … (x4,y4).
struct Quad {
  std::array<double, 4> x{};
  std::array<double, 4> y{};
};

PixelBox quad_to_box(const Quad& quad);

// Scales pixel coordinates onto the 0-1000 grid (round half up, clamped).
BoundingBox normalize_box(const PixelBox& box, double page_width, double page_height);

// Approximates word boxes inside an OCR line box. Each word is weighted by its
// character count, with a weight-1 separator between consecutive words whose
// sub-interval is dropped. Boundaries are round(cumulative fraction × width).
std::vector<BoundingBox> split_line_to_words(const BoundingBox& line,
                                             const std::vector<std::string>& words);

// Character count in code points, so multi-byte scripts weigh per glyph.
std::size_t text_length(const std::string& utf8);

}  // namespace spanie
