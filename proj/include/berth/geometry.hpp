// Port boundary polygon, winding-number containment and the speed-dependent
// elliptical ship domain.
#pragma once

#include <span>
#include <vector>

#include "berth/dynamics.hpp"

namespace berth {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double k, Point a) { return {k * a.x, k * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Distance from `q` to the closed segment [a, b].
double segment_distance(Point q, Point a, Point b);

/// Boundary detection tolerance [m].
inline constexpr double kEdgeTolerance = 1e-9;
/// Tolerance on the winding angle when classifying a point [rad].
inline constexpr double kWindingTolerance = 1e-6;

class InvalidPolygon : public std::invalid_argument {
 public:
  explicit InvalidPolygon(const std::string& what) : std::invalid_argument(what) {}
};

/// Simple closed polygon. The stored vertex list repeats the first vertex at
/// the end and is normalized to counter-clockwise order on construction.
class Polygon {
 public:
  /// Empty polygon (no edges); contains nothing.
  Polygon() = default;

  /// Accepts either an explicitly closed list (first == last) or an open one,
  /// which is closed here. Throws InvalidPolygon on fewer than three distinct
  /// vertices or repeated consecutive vertices.
  explicit Polygon(std::vector<Point> vertices);

  /// Strict constructor: the list must already be closed.
  static Polygon from_closed(std::vector<Point> vertices);

  std::span<const Point> vertices() const { return vertices_; }
  /// Number of edges (= stored vertices - 1).
  std::size_t edge_count() const { return vertices_.size() - 1; }
  double signed_area() const;
  Point centroid() const;
  bool was_reoriented() const { return reoriented_; }

 private:
  std::vector<Point> vertices_;
  bool reoriented_ = false;
};

struct WindingNumber {
  double angle = 0.0;     ///< sum of signed subtended edge angles [rad]
  bool on_boundary = false;
};

/// Sum of signed angles subtended at `q` by every polygon edge. A point within
/// kEdgeTolerance of an edge is flagged as on the boundary (angle left at 0).
WindingNumber winding_number(Point q, const Polygon& polygon);

/// True iff the winding angle is within kWindingTolerance of 2 pi. Boundary
/// points are not inside.
bool is_inside(Point q, const Polygon& polygon);

/// Signed distance to the polygon boundary, positive inside.
double signed_distance(Point q, const Polygon& polygon);

/// Smooth clearance used as a differentiable collision constraint. Inside
/// the polygon it is the log-sum-exp soft minimum of the edge distances
/// (sharpness in 1/m); outside it is that soft minimum minus twice the true
/// distance. Continuous across the boundary, never above the true signed
/// distance, strictly negative outside.
double smooth_clearance(Point q, const Polygon& polygon, double sharpness);

struct ShipDomain {
  std::vector<Point> vertices;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  Point center;
  double heading = 0.0;
};

/// Axes of the ship domain at resultant speed `speed`.
std::pair<double, double> ship_domain_axes(double speed, const ShipParams& params);

/// `count` points on the domain ellipse centred at midship and rotated by psi.
/// The first vertex lies on the bow end of the major axis.
ShipDomain ship_domain_vertices(const State& s, const ShipParams& params, int count);

/// Per domain vertex: winding angle minus 2 pi (boundary counts as outside).
std::vector<double> collision_residuals(const State& s, const Polygon& polygon,
                                        const ShipParams& params, int count);

}  // namespace berth
