#include "spanie/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "spanie/errors.hpp"

namespace spanie {

bool BoundingBox::valid() const {
  auto in_grid = [](int v) { return v >= 0 && v <= kGridMax; };
  return in_grid(x0) && in_grid(y0) && in_grid(x1) && in_grid(y1) && x0 <= x1 && y0 <= y1;
}

std::string to_string(const BoundingBox& box) {
  return "[" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
         std::to_string(box.x1) + "," + std::to_string(box.y1) + "]";
}

void validate(const BoundingBox& box) {
  if (!box.valid()) throw DomainError("invalid bounding box " + to_string(box));
}

PixelBox quad_to_box(const Quad& quad) {
  auto [xmin, xmax] = std::minmax_element(quad.x.begin(), quad.x.end());
  auto [ymin, ymax] = std::minmax_element(quad.y.begin(), quad.y.end());
  return {*xmin, *ymin, *xmax, *ymax};
}

BoundingBox normalize_box(const PixelBox& box, double page_width, double page_height) {
  if (!(page_width > 0.0) || !(page_height > 0.0)) {
    throw DomainError("page size must be positive");
  }
  auto scale = [](double v, double dim) {
    const double clamped = std::clamp(v, 0.0, dim);
    const int g = static_cast<int>(std::floor(clamped * kGridMax / dim + 0.5));
    return std::clamp(g, 0, kGridMax);
  };
  BoundingBox out{scale(std::min(box.x0, box.x1), page_width),
                  scale(std::min(box.y0, box.y1), page_height),
                  scale(std::max(box.x0, box.x1), page_width),
                  scale(std::max(box.y0, box.y1), page_height)};
  return out;
}

std::size_t text_length(const std::string& utf8) {
  std::size_t n = 0;
  for (unsigned char ch : utf8) {
    if ((ch & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::vector<BoundingBox> split_line_to_words(const BoundingBox& line,
                                             const std::vector<std::string>& words) {
  validate(line);
  if (words.empty()) throw AnnotationError("split_line_to_words: no words");
  std::vector<long long> weights;
  weights.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty()) throw AnnotationError("split_line_to_words: empty word");
    weights.push_back(static_cast<long long>(text_length(w)));
  }
  long long total = static_cast<long long>(words.size()) - 1;
  for (auto w : weights) total += w;

  const long long width = line.x1 - line.x0;
  // round(cum / total × width) with ties rounded up, in exact integer arithmetic.
  auto boundary = [&](long long cum) {
    return line.x0 + static_cast<int>((2 * cum * width + total) / (2 * total));
  };

  std::vector<BoundingBox> out;
  out.reserve(words.size());
  long long cum = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) cum += 1;
    const int left = boundary(cum);
    cum += weights[i];
    const int right = boundary(cum);
    out.push_back({left, line.y0, right, line.y1});
  }
  return out;
}

}  // namespace spanie
