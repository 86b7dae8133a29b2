#include "benthic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace benthic {

BBox::BBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw std::invalid_argument("bbox: non-finite coordinate");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("bbox: width and height must be positive");
  }
}

double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou_box(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

PolygonMask::PolygonMask(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) {
    throw std::invalid_argument("polygon: at least 3 vertices required");
  }
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw std::invalid_argument("polygon: non-finite vertex");
    }
  }
}

double PolygonMask::area() const {
  double twice = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = vertices_[i];
    const Point2& q = vertices_[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return std::abs(twice) * 0.5;
}

PolygonMask PolygonMask::rectangle(const BBox& box) {
  return PolygonMask({{box.x(), box.y()},
                      {box.right(), box.y()},
                      {box.right(), box.bottom()},
                      {box.x(), box.bottom()}});
}

BitMask::BitMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("bitmask: negative size");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::int64_t BitMask::popcount() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

BitMask rasterize(const PolygonMask& polygon, int width, int height, bool* degenerate) {
  return rasterize(polygon, width, height, 0.0, 0.0, degenerate);
}

BitMask rasterize(const PolygonMask& polygon, int width, int height, double offset_x,
                  double offset_y, bool* degenerate) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("rasterize: width and height must be positive");
  }
  BitMask mask(width, height);
  const bool is_degenerate = polygon.area() == 0.0;
  if (degenerate != nullptr) *degenerate = is_degenerate;
  if (is_degenerate) return mask;

  const auto& verts = polygon.vertices();
  const std::size_t n = verts.size();
  std::vector<double> crossings;
  for (int row = 0; row < height; ++row) {
    const double cy = row + 0.5 + offset_y;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point2& a = verts[i];
      const Point2& b = verts[j];
      // Half-open rule: an edge counts when exactly one endpoint is above cy.
      if ((a.y > cy) != (b.y > cy)) {
        crossings.push_back(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    // A center is inside when an odd number of crossings lie strictly to its
    // right, i.e. it falls in [crossings[2k], crossings[2k+1]).
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const double lo = crossings[k] - offset_x - 0.5;
      const double hi = crossings[k + 1] - offset_x - 0.5;
      const int first = std::max(0, static_cast<int>(std::ceil(lo)));
      int last = static_cast<int>(std::ceil(hi)) - 1;
      last = std::min(last, width - 1);
      for (int col = first; col <= last; ++col) mask.set(row, col);
    }
  }
  return mask;
}

double iou_mask(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("iou_mask: dimension mismatch");
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace benthic
