#pragma once

// Convex polygons in V-representation and the disturbance / error invariant
// sets built from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hlip/error.hpp"
#include "hlip/hlip_core.hpp"
#include "hlip/stepping.hpp"

namespace hlip {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

namespace detail {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool lex_less(const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); }

// Lowest y, then lowest x.
inline bool bottom_less(const Vec2& a, const Vec2& b) { return a.y() < b.y() || (a.y() == b.y() && a.x() < b.x()); }

// Upper/lower half of the direction circle, starting at angle 0.
inline int half_turn(const Vec2& e) { return (e.y() < 0.0 || (e.y() == 0.0 && e.x() < 0.0)) ? 1 : 0; }

inline bool angle_less(const Vec2& a, const Vec2& b) {
  const int ha = half_turn(a);
  const int hb = half_turn(b);
  if (ha != hb) return ha < hb;
  return cross(a, b) > 0.0;
}

inline double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (q - a).norm();
  const double t = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

}  // namespace detail

/// Convex polygon with counter-clockwise vertices. Points and segments are
/// valid (one and two vertices); the empty set has none.
class Polytope2 {
 public:
  Polytope2() = default;

  /// Takes vertices that are already convex and CCW; use convex_hull otherwise.
  static Polytope2 from_ccw(std::vector<Vec2> vertices) {
    Polytope2 out;
    out.vertices_ = std::move(vertices);
    return out;
  }

  static Polytope2 point(const Vec2& p) { return from_ccw({p}); }

  /// Axis-aligned box centered at the origin.
  static Polytope2 box(double half_x, double half_y) {
    return from_ccw({{-half_x, -half_y}, {half_x, -half_y}, {half_x, half_y}, {-half_x, half_y}});
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }

  double support(const Vec2& direction) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2& v : vertices_) best = std::max(best, v.dot(direction));
    return best;
  }

  /// Largest vertex norm, i.e. the radius of the smallest origin-centered ball containing the set.
  double support_radius() const {
    double r = 0.0;
    for (const Vec2& v : vertices_) r = std::max(r, v.norm());
    return r;
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      for (std::size_t j = i + 1; j < vertices_.size(); ++j) d = std::max(d, (vertices_[i] - vertices_[j]).norm());
    return d;
  }

  double area() const {
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      twice += detail::cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
    return 0.5 * twice;
  }

  bool is_convex_ccw(double tol = 1e-12) const {
    const std::size_t n = vertices_.size();
    if (n < 3) return true;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e0 = vertices_[(i + 1) % n] - vertices_[i];
      const Vec2 e1 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
      if (detail::cross(e0, e1) < -tol) return false;
    }
    return true;
  }

 private:
  std::vector<Vec2> vertices_;
};

/// Minimal convex hull (monotone chain). Duplicates within dedup_tol and
/// collinear boundary points are dropped.
inline Polytope2 convex_hull(std::span<const Vec2> points, double dedup_tol = 1e-12) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "convex hull of no points");
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), detail::lex_less);
  std::vector<Vec2> unique;
  unique.reserve(pts.size());
  for (const Vec2& p : pts) {
    const bool dup = std::any_of(unique.rbegin(), unique.rbegin() + std::min<std::size_t>(unique.size(), 8),
                                 [&](const Vec2& q) { return (p - q).norm() <= dedup_tol; });
    if (!dup) unique.push_back(p);
  }
  if (unique.size() <= 2) {
    if (unique.size() == 2 && (unique[0] - unique[1]).norm() <= dedup_tol) unique.pop_back();
    return Polytope2::from_ccw(std::move(unique));
  }

  // Collinearity threshold scaled by the point cloud size.
  double scale = 0.0;
  for (const Vec2& p : unique) scale = std::max(scale, (p - unique.front()).norm());
  const double tol = 1e-14 * std::max(1.0, scale * scale);

  std::vector<Vec2> hull(2 * unique.size());
  std::size_t k = 0;
  for (const Vec2& p : unique) {
    while (k >= 2 && detail::cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= tol) --k;
    hull[k++] = p;
  }
  for (std::size_t i = unique.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = unique[i];
    while (k >= lower && detail::cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= tol) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  if (hull.size() == 1) {
    // All points collinear: keep the two extremes as a segment.
    hull = {unique.front(), unique.back()};
  }
  return Polytope2::from_ccw(std::move(hull));
}

inline Polytope2 convex_hull(const std::vector<Vec2>& points, double dedup_tol = 1e-12) {
  return convex_hull(std::span<const Vec2>(points), dedup_tol);
}

/// Exact Minkowski sum by merging the edge sequences of both polygons.
inline Polytope2 minkowski_sum(const Polytope2& p, const Polytope2& q) {
  if (p.empty() || q.empty()) return {};
  const auto rotated = [](const std::vector<Vec2>& v) {
    const auto first = std::min_element(v.begin(), v.end(), detail::bottom_less);
    std::vector<Vec2> out(first, v.end());
    out.insert(out.end(), v.begin(), first);
    return out;
  };
  const auto edges = [](const std::vector<Vec2>& v) {
    std::vector<Vec2> e;
    if (v.size() < 2) return e;
    for (std::size_t i = 0; i < v.size(); ++i) e.push_back(v[(i + 1) % v.size()] - v[i]);
    return e;
  };
  const std::vector<Vec2> pv = rotated(p.vertices());
  const std::vector<Vec2> qv = rotated(q.vertices());
  const std::vector<Vec2> pe = edges(pv);
  const std::vector<Vec2> qe = edges(qv);

  std::vector<Vec2> out;
  out.reserve(pe.size() + qe.size() + 1);
  Vec2 cursor = pv.front() + qv.front();
  out.push_back(cursor);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < pe.size() || j < qe.size()) {
    if (j == qe.size() || (i < pe.size() && detail::angle_less(pe[i], qe[j]))) {
      cursor += pe[i++];
    } else if (i == pe.size() || detail::angle_less(qe[j], pe[i])) {
      cursor += qe[j++];
    } else {
      cursor += pe[i++] + qe[j++];
    }
    out.push_back(cursor);
  }
  return convex_hull(out);
}

inline Polytope2 linear_map(const Mat2& m, const Polytope2& p) {
  if (p.empty()) return {};
  std::vector<Vec2> mapped;
  mapped.reserve(p.size());
  for (const Vec2& v : p.vertices()) mapped.push_back(m * v);
  return convex_hull(mapped);
}

inline Polytope2 translate(const Polytope2& p, const Vec2& offset) {
  std::vector<Vec2> moved = p.vertices();
  for (Vec2& v : moved) v += offset;
  return Polytope2::from_ccw(std::move(moved));
}

/// Point inside the set or within tol (Euclidean) of it.
inline bool contains(const Polytope2& p, const Vec2& point, double tol) {
  const auto& v = p.vertices();
  if (v.empty()) return false;
  if (v.size() == 1) return (point - v[0]).norm() <= tol;
  if (v.size() == 2) return detail::point_segment_distance(point, v[0], v[1]) <= tol;
  bool inside = true;
  for (std::size_t i = 0; i < v.size() && inside; ++i) {
    const Vec2 edge = v[(i + 1) % v.size()] - v[i];
    if (detail::cross(edge, point - v[i]) < 0.0) inside = false;
  }
  if (inside) return true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, detail::point_segment_distance(point, v[i], v[(i + 1) % v.size()]));
  return best <= tol;
}

/// Every vertex of inner lies in outer (sufficient for convex sets).
inline bool is_subset(const Polytope2& inner, const Polytope2& outer, double tol) {
  return std::all_of(inner.vertices().begin(), inner.vertices().end(),
                     [&](const Vec2& v) { return contains(outer, v, tol); });
}

// ---------------------------------------------------------------------------
// Disturbance and invariant sets

/// One step of plane-projected data: pre-impact state, applied step size,
/// next pre-impact state, and the velocity-estimate offset used by the
/// controller (zero when it saw the true state).
struct StepTriple {
  PlanarState x;
  double u = 0.0;
  PlanarState x_next;
  Vec2 delta_x = Vec2::Zero();
};

/// w = x_{k+1} - A x_k - B u_k
inline Vec2 s2s_residual(const StepTriple& step, const S2SMatrices& mats) {
  return step.x_next.vec() - mats.a * step.x.vec() - mats.b * step.u;
}

struct DisturbanceOptions {
  /// Fold the estimate offset into the residual, w + B K delta_x.
  const SteppingGain* estimate_gain = nullptr;
  /// Fraction of residuals farthest from their mean to discard before the hull.
  double quantile_trim = 0.0;
};

inline std::vector<Vec2> disturbance_samples(std::span<const StepTriple> steps, const S2SMatrices& mats,
                                             const DisturbanceOptions& options = {}) {
  std::vector<Vec2> w;
  w.reserve(steps.size());
  for (const StepTriple& s : steps) {
    Vec2 r = s2s_residual(s, mats);
    if (options.estimate_gain) r += mats.b * options.estimate_gain->k.dot(s.delta_x);
    w.push_back(r);
  }
  return w;
}

inline Polytope2 estimate_disturbance_set(std::span<const StepTriple> steps, const S2SMatrices& mats,
                                          const DisturbanceOptions& options = {}) {
  if (steps.empty()) throw Error(ErrorCode::EmptyInput, "no step records for the disturbance set");
  std::vector<Vec2> w = disturbance_samples(steps, mats, options);
  if (options.quantile_trim > 0.0 && w.size() > 2) {
    Vec2 mean = Vec2::Zero();
    for (const Vec2& r : w) mean += r;
    mean /= static_cast<double>(w.size());
    std::sort(w.begin(), w.end(), [&](const Vec2& a, const Vec2& b) { return (a - mean).norm() < (b - mean).norm(); });
    const auto keep = std::max<std::size_t>(
        1, w.size() - static_cast<std::size_t>(std::floor(options.quantile_trim * static_cast<double>(w.size()))));
    w.resize(keep);
  }
  return convex_hull(w);
}

inline Polytope2 estimate_disturbance_set(const std::vector<StepTriple>& steps, const S2SMatrices& mats,
                                          const DisturbanceOptions& options = {}) {
  return estimate_disturbance_set(std::span<const StepTriple>(steps), mats, options);
}

inline constexpr double kNilpotencyTol = 1e-8;

/// E = (A + BK) W (+) W, valid when A + BK is nilpotent. The result is checked
/// against (A + BK) E (+) W being a subset of E before it is returned.
inline Polytope2 deadbeat_invariant_set(const Polytope2& w, const S2SMatrices& mats, const SteppingGain& gain) {
  const Mat2 closed = closed_loop(mats, gain);
  const double residual = nilpotency_residual(closed);
  if (!(residual < kNilpotencyTol)) {
    throw Error(ErrorCode::NotDeadbeat, "closed loop is not nilpotent, residual " + std::to_string(residual));
  }
  Polytope2 e = minkowski_sum(linear_map(closed, w), w);
  const Polytope2 image = minkowski_sum(linear_map(closed, e), w);
  const double tol = 1e-9 * (1.0 + e.support_radius());
  if (!is_subset(image, e, tol)) {
    throw Error(ErrorCode::NotDeadbeat, "invariance self-check failed");
  }
  return e;
}

struct RpiApproximation {
  Polytope2 set;
  std::size_t terms = 0;  ///< number of summands a^i W, i = 0..terms-1
};

/// Outer approximation of the minimal robust positively invariant set,
/// sum_{i<n} a^i W, truncated once the next summand fits in an eps ball.
inline RpiApproximation rpi_outer_approx(const Polytope2& w, const Mat2& a_cl, double eps, std::size_t max_iter) {
  if (!(spectral_radius(a_cl) < 1.0)) throw Error(ErrorCode::UnstableMatrix, "closed-loop matrix is not Schur");
  if (w.empty()) throw Error(ErrorCode::EmptyInput, "empty disturbance set");
  RpiApproximation out{w, 1};
  Mat2 power = a_cl;
  Polytope2 term = linear_map(power, w);
  while (true) {
    const double radius = term.support_radius();
    if (radius < eps || radius == 0.0) return out;
    if (out.terms >= max_iter) throw Error(ErrorCode::NoConvergence, "rpi series did not reach eps");
    out.set = minkowski_sum(out.set, term);
    ++out.terms;
    power = a_cl * power;
    term = linear_map(power, w);
  }
}

}  // namespace hlip
