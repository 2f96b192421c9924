#include "berth/geometry.hpp"

#include <algorithm>
#include <limits>

namespace berth {

double segment_distance(Point q, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(q - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(q - (a + t * ab));
}

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() >= 2 && !(vertices_.front() == vertices_.back())) {
    vertices_.push_back(vertices_.front());
  }
  if (vertices_.size() < 4) {
    throw InvalidPolygon("polygon needs at least 3 distinct vertices plus closure");
  }
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
    if (vertices_[i] == vertices_[i + 1]) {
      throw InvalidPolygon("polygon has repeated consecutive vertex at index " +
                           std::to_string(i + 1));
    }
  }
  if (signed_area() < 0.0) {
    std::reverse(vertices_.begin(), vertices_.end());
    reoriented_ = true;
  }
  if (signed_area() == 0.0) throw InvalidPolygon("polygon has zero area");
}

Polygon Polygon::from_closed(std::vector<Point> vertices) {
  if (vertices.size() >= 2 && !(vertices.front() == vertices.back())) {
    throw InvalidPolygon("polygon is not closed: first and last vertex differ");
  }
  if (vertices.size() < 4) {
    throw InvalidPolygon("closed polygon needs at least 4 stored points (3 distinct)");
  }
  return Polygon(std::move(vertices));
}

double Polygon::signed_area() const {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) a += cross(vertices_[i], vertices_[i + 1]);
  return 0.5 * a;
}

Point Polygon::centroid() const {
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
    const Point p = vertices_[i];
    const Point q = vertices_[i + 1];
    const double c = cross(p, q);
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

WindingNumber winding_number(Point q, const Polygon& polygon) {
  const auto v = polygon.vertices();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (segment_distance(q, v[i], v[i + 1]) <= kEdgeTolerance) return {0.0, true};
    const Point a = v[i] - q;
    const Point b = v[i + 1] - q;
    total += std::atan2(cross(a, b), dot(a, b));
  }
  return {total, false};
}

bool is_inside(Point q, const Polygon& polygon) {
  const WindingNumber wn = winding_number(q, polygon);
  return !wn.on_boundary && std::abs(wn.angle - kTwoPi) <= kWindingTolerance;
}

namespace {

double min_edge_distance(Point q, const Polygon& polygon) {
  const auto v = polygon.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) best = std::min(best, segment_distance(q, v[i], v[i + 1]));
  return best;
}

}  // namespace

double signed_distance(Point q, const Polygon& polygon) {
  const double d = min_edge_distance(q, polygon);
  return is_inside(q, polygon) ? d : -d;
}

double smooth_clearance(Point q, const Polygon& polygon, double sharpness) {
  const auto v = polygon.vertices();
  const double dmin = min_edge_distance(q, polygon);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    acc += std::exp(-sharpness * (segment_distance(q, v[i], v[i + 1]) - dmin));
  }
  const double soft = dmin - std::log(acc) / sharpness;
  return is_inside(q, polygon) ? soft : soft - 2.0 * dmin;
}

std::pair<double, double> ship_domain_axes(double speed, const ShipParams& params) {
  const double ratio = speed / params.u_nominal;
  return {0.5 * params.L * (1.0 + params.domain.k_a * ratio),
          0.5 * params.B * (1.0 + params.domain.k_b * ratio)};
}

ShipDomain ship_domain_vertices(const State& s, const ShipParams& params, int count) {
  if (count < 8) throw std::invalid_argument("ship domain needs at least 8 vertices");
  const auto [a, b] = ship_domain_axes(s.speed(), params);
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  ShipDomain dom;
  dom.semi_major = a;
  dom.semi_minor = b;
  dom.center = {s.x0, s.y0};
  dom.heading = s.psi;
  dom.vertices.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const double th = kTwoPi * j / count;
    const double ex = a * std::cos(th);
    const double ey = b * std::sin(th);
    dom.vertices.push_back({s.x0 + ex * c - ey * sn, s.y0 + ex * sn + ey * c});
  }
  return dom;
}

std::vector<double> collision_residuals(const State& s, const Polygon& polygon,
                                        const ShipParams& params, int count) {
  const ShipDomain dom = ship_domain_vertices(s, params, count);
  std::vector<double> out;
  out.reserve(dom.vertices.size());
  for (const Point& q : dom.vertices) {
    const WindingNumber wn = winding_number(q, polygon);
    out.push_back(wn.on_boundary ? -kTwoPi : wn.angle - kTwoPi);
  }
  return out;
}

}  // namespace berth
