#pragma once

#include <cstdint>
#include <vector>

namespace benthic {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// Axis-aligned box in continuous pixel coordinates, top-left origin.
// Construction rejects non-positive or non-finite extents.
class BBox {
 public:
  BBox(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double area() const { return w_ * h_; }
  Point2 center() const { return {x_ + 0.5 * w_, y_ + 0.5 * h_}; }

  BBox translated(double dx, double dy) const { return {x_ + dx, y_ + dy, w_, h_}; }
  static BBox from_center(Point2 c, double w, double h) {
    return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
  }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x_, y_, w_, h_;
};

double intersection_area(const BBox& a, const BBox& b);
double iou_box(const BBox& a, const BBox& b);

class PolygonMask {
 public:
  explicit PolygonMask(std::vector<Point2> vertices);

  const std::vector<Point2>& vertices() const { return vertices_; }
  // Shoelace area, always non-negative.
  double area() const;

  static PolygonMask rectangle(const BBox& box);

  friend bool operator==(const PolygonMask&, const PolygonMask&) = default;

 private:
  std::vector<Point2> vertices_;
};

class BitMask {
 public:
  BitMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool v = true) { bits_[index(row, col)] = v ? 1 : 0; }
  std::int64_t popcount() const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_, height_;
  std::vector<std::uint8_t> bits_;
};

// Sets pixel (row, col) iff its center (col + 0.5, row + 0.5) lies inside
// the polygon under the even-odd rule. A zero-area polygon yields an empty
// mask and sets *degenerate when the pointer is non-null.
BitMask rasterize(const PolygonMask& polygon, int width, int height,
                  bool* degenerate = nullptr);

// Same sampling rule, with the polygon translated by (-offset_x, -offset_y)
// first. Used to rasterize into a canvas that does not start at the origin.
BitMask rasterize(const PolygonMask& polygon, int width, int height,
                  double offset_x, double offset_y, bool* degenerate = nullptr);

// |a & b| / |a | b|; 0 when both masks are empty. Throws on size mismatch.
double iou_mask(const BitMask& a, const BitMask& b);

}  // namespace benthic
