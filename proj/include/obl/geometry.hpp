// Planar strictly convex obstacles (discs and ellipses), their differential
// geometry, ray intersection, pairwise separation and the no-eclipse test.
//
// Everything is templated on the scalar so the same code runs in double,
// long double and software quad precision. Eigen fixed-size vectors are the
// only math dependency.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "obl/common.hpp"

namespace obl {

template <typename S>
using Vec2 = Eigen::Matrix<S, 2, 1>;

template <typename S>
using Mat2 = Eigen::Matrix<S, 2, 2>;

using std::cos;
using std::sin;
using std::sqrt;
using std::atan2;
using std::abs;
using std::log;
using std::exp;

enum class ObstacleKind { Disc, Ellipse };

/// One strictly convex scatterer. Discs are (center, radius); ellipses carry
/// semi-axes (a, b) and a rotation angle. Boundaries are analytic, so normals,
/// tangents and curvatures all have closed forms.
template <typename S>
struct ConvexObstacle {
    ObstacleKind kind = ObstacleKind::Disc;
    Vec2<S> center = Vec2<S>::Zero();
    S radius = S(1);           // disc
    S a = S(1), b = S(1);      // ellipse semi-axes
    S angle = S(0);            // ellipse rotation

    static ConvexObstacle disc(const Vec2<S>& c, S r) {
        if (!(r > S(0))) throw InvalidConfiguration("disc radius must be positive");
        ConvexObstacle o;
        o.kind = ObstacleKind::Disc;
        o.center = c;
        o.radius = r;
        return o;
    }

    static ConvexObstacle ellipse(const Vec2<S>& c, S a_, S b_, S angle_) {
        if (!(a_ > S(0)) || !(b_ > S(0)))
            throw InvalidConfiguration("ellipse semi-axes must be positive");
        ConvexObstacle o;
        o.kind = ObstacleKind::Ellipse;
        o.center = c;
        o.a = a_;
        o.b = b_;
        o.angle = angle_;
        return o;
    }

    Mat2<S> rotation() const {
        Mat2<S> r;
        r << cos(angle), -sin(angle), sin(angle), cos(angle);
        return r;
    }

    /// Boundary point at parameter theta (counterclockwise).
    Vec2<S> point(S theta) const {
        if (kind == ObstacleKind::Disc)
            return center + radius * Vec2<S>(cos(theta), sin(theta));
        return center + rotation() * Vec2<S>(a * cos(theta), b * sin(theta));
    }

    /// d(point)/d(theta).
    Vec2<S> velocity(S theta) const {
        if (kind == ObstacleKind::Disc)
            return radius * Vec2<S>(-sin(theta), cos(theta));
        return rotation() * Vec2<S>(-a * sin(theta), b * cos(theta));
    }

    /// d2(point)/d(theta)2.
    Vec2<S> acceleration(S theta) const {
        if (kind == ObstacleKind::Disc)
            return -radius * Vec2<S>(cos(theta), sin(theta));
        return rotation() * Vec2<S>(-a * cos(theta), -b * sin(theta));
    }

    /// Outward unit normal at parameter theta.
    Vec2<S> normal(S theta) const {
        if (kind == ObstacleKind::Disc) return Vec2<S>(cos(theta), sin(theta));
        Vec2<S> n = rotation() * Vec2<S>(b * cos(theta), a * sin(theta));
        return n / n.norm();
    }

    /// Boundary curvature at theta (with respect to arclength, > 0).
    S curvature(S theta) const {
        if (kind == ObstacleKind::Disc) return S(1) / radius;
        const S st = sin(theta), ct = cos(theta);
        const S w = a * a * st * st + b * b * ct * ct;
        return a * b / (w * sqrt(w));
    }

    /// Implicit boundary function: < 0 inside, 0 on the boundary, > 0 outside.
    S implicit_value(const Vec2<S>& q) const {
        if (kind == ObstacleKind::Disc) return (q - center).norm() - radius;
        Vec2<S> p = rotation().transpose() * (q - center);
        const S v = (p.x() / a) * (p.x() / a) + (p.y() / b) * (p.y() / b);
        // scaled back to length units so tolerances are comparable across kinds
        return (sqrt(v) - S(1)) * std::min(a, b);
    }

    bool contains(const Vec2<S>& q) const { return implicit_value(q) < S(0); }

    /// Support function h(u) = sup over the body of <u, x> for unit u.
    S support(const Vec2<S>& u) const {
        if (kind == ObstacleKind::Disc) return u.dot(center) + radius;
        Vec2<S> ub = rotation().transpose() * u;
        return u.dot(center) + sqrt(a * a * ub.x() * ub.x() + b * b * ub.y() * ub.y());
    }

    /// Parameter of the boundary point whose outward normal is parallel to dir.
    S theta_of_normal(const Vec2<S>& dir) const {
        if (kind == ObstacleKind::Disc) return atan2(dir.y(), dir.x());
        Vec2<S> db = rotation().transpose() * dir;
        return atan2(a * db.y(), b * db.x());
    }

    S max_extent() const {
        if (kind == ObstacleKind::Disc) return radius;
        return std::max(a, b);
    }

    /// Closest boundary parameter to an exterior point p (Newton with a
    /// bisection safeguard on <q(theta)-p, q'(theta)> = 0).
    S closest_boundary_theta(const Vec2<S>& p) const {
        if (kind == ObstacleKind::Disc) {
            Vec2<S> d = p - center;
            return atan2(d.y(), d.x());
        }
        auto g = [&](S th) { return (point(th) - p).dot(velocity(th)); };
        S lo = theta_of_normal((p - center).normalized());
        // bracket the root around the normal-direction guess
        const S halfpi = S(1.5707963267948966);
        S a0 = lo - halfpi, b0 = lo + halfpi;
        S ga = g(a0), gb = g(b0);
        // widen if the guess bracket fails (can happen for thin ellipses)
        for (int k = 0; k < 4 && ga * gb > S(0); ++k) {
            a0 -= halfpi;
            b0 += halfpi;
            ga = g(a0);
            gb = g(b0);
        }
        S x = lo;
        const S xtol = S(8) * std::numeric_limits<S>::epsilon();
        for (int it = 0; it < 500; ++it) {
            Vec2<S> q = point(x), qp = velocity(x), qpp = acceleration(x);
            S gx = (q - p).dot(qp);
            S gpx = qp.squaredNorm() + (q - p).dot(qpp);
            S step = gx / gpx;
            S xn = x - step;
            if (!(xn > a0 && xn < b0)) xn = (a0 + b0) / S(2);  // bisect
            S gn = g(xn);
            if (gn * ga <= S(0))
                b0 = xn;
            else {
                a0 = xn;
                ga = gn;
            }
            if (abs(xn - x) < xtol * (S(1) + abs(x))) return xn;
            x = xn;
        }
        return x;
    }

    template <typename T>
    ConvexObstacle<T> cast() const {
        ConvexObstacle<T> o;
        o.kind = kind;
        o.center = center.template cast<T>();
        o.radius = static_cast<T>(radius);
        o.a = static_cast<T>(a);
        o.b = static_cast<T>(b);
        o.angle = static_cast<T>(angle);
        return o;
    }
};

/// A point on some obstacle boundary.
template <typename S>
struct BoundaryPoint {
    int obstacle = -1;
    Vec2<S> position = Vec2<S>::Zero();
    S theta = S(0);
};

struct NoEclipseWitness {
    int i = -1, j = -1, l = -1;  // hull of (i,j) meets l
};

struct NoEclipseReport {
    bool ok = false;
    double margin = 0;  // smallest clearance between any hull and any third body
    NoEclipseWitness witness;
};

// tolerances used throughout the geometry layer
struct GeoTol {
    static constexpr double tangency = 1e-9;        // on |<dir, normal>|
    static constexpr double boundary_rel = 1e-12;   // boundary residual / scale
    static constexpr double ray_rel = 1e-10;        // minimal ray parameter / scale
    static constexpr double separation = 1e-10;     // (H) margin certificate
};

template <typename S>
struct RayHit {
    S t = S(0);
    BoundaryPoint<S> bp;
};

template <typename S>
class ObstacleConfiguration;

namespace detail {

/// Smallest positive ray parameter hitting one obstacle, or none.
template <typename S>
std::optional<S> ray_obstacle(const Vec2<S>& origin, const Vec2<S>& dir,
                              const ConvexObstacle<S>& K, S tmin) {
    // reduce to a quadratic in t; for ellipses work in the body frame
    Vec2<S> o, d;
    if (K.kind == ObstacleKind::Disc) {
        o = origin - K.center;
        d = dir;
        const S r = K.radius;
        const S b = o.dot(d);
        const S c = o.squaredNorm() - r * r;
        const S disc = b * b - c;
        if (disc < S(0)) return std::nullopt;
        const S sq = sqrt(disc);
        const S t1 = -b - sq, t2 = -b + sq;
        if (t1 > tmin) return t1;
        if (t2 > tmin) return t2;
        return std::nullopt;
    }
    Mat2<S> rt = K.rotation().transpose();
    o = rt * (origin - K.center);
    d = rt * dir;
    o.x() /= K.a;
    o.y() /= K.b;
    d.x() /= K.a;
    d.y() /= K.b;
    const S A = d.squaredNorm();
    const S B = o.dot(d);
    const S C = o.squaredNorm() - S(1);
    const S disc = B * B - A * C;
    if (disc < S(0)) return std::nullopt;
    const S sq = sqrt(disc);
    const S t1 = (-B - sq) / A, t2 = (-B + sq) / A;
    if (t1 > tmin) return t1;
    if (t2 > tmin) return t2;
    return std::nullopt;
}

}  // namespace detail

/// The scatterer system: k0 >= 3 pairwise disjoint strictly convex bodies.
/// Immutable after finalize(); cached d0 and no-eclipse verdict.
template <typename S>
class ObstacleConfiguration {
  public:
    ObstacleConfiguration() = default;
    explicit ObstacleConfiguration(std::vector<ConvexObstacle<S>> obstacles)
        : obstacles_(std::move(obstacles)) {
        finalize();
    }

    const std::vector<ConvexObstacle<S>>& obstacles() const { return obstacles_; }
    const ConvexObstacle<S>& obstacle(int i) const { return obstacles_[static_cast<size_t>(i)]; }
    int count() const { return static_cast<int>(obstacles_.size()); }

    S min_separation() const { return d0_; }
    const NoEclipseReport& no_eclipse() const { return eclipse_; }
    S scale() const { return scale_; }

    /// Ray from `origin` in unit direction `dir`; smallest positive hit over
    /// all obstacles, or nullopt if the ray escapes. Near-tangent incidences
    /// throw TangentHit.
    std::optional<RayHit<S>> ray_intersect(const Vec2<S>& origin, const Vec2<S>& dir) const {
        const S tmin = static_cast<S>(GeoTol::ray_rel) * scale_;
        std::optional<S> best;
        int best_i = -1;
        for (int i = 0; i < count(); ++i) {
            auto t = detail::ray_obstacle(origin, dir, obstacles_[static_cast<size_t>(i)], tmin);
            if (t && (!best || *t < *best)) {
                best = *t;
                best_i = i;
            }
        }
        if (!best) return std::nullopt;
        RayHit<S> hit;
        hit.t = *best;
        hit.bp.obstacle = best_i;
        hit.bp.position = origin + (*best) * dir;
        const auto& K = obstacles_[static_cast<size_t>(best_i)];
        hit.bp.theta = K.closest_boundary_theta(hit.bp.position);
        // snap to the boundary so downstream residual checks stay exact
        hit.bp.position = K.point(hit.bp.theta);
        const Vec2<S> nu = K.normal(hit.bp.theta);
        if (abs(dir.dot(nu)) < static_cast<S>(GeoTol::tangency))
            throw TangentHit("near-tangent boundary incidence");
        return hit;
    }

    /// True if q lies outside every (open) obstacle.
    bool is_exterior(const Vec2<S>& q) const {
        for (const auto& K : obstacles_)
            if (K.contains(q)) return false;
        return true;
    }

    /// Rigid motion of the whole configuration (used by invariance checks).
    ObstacleConfiguration transformed(S rot, const Vec2<S>& shift) const {
        Mat2<S> R;
        R << cos(rot), -sin(rot), sin(rot), cos(rot);
        std::vector<ConvexObstacle<S>> out = obstacles_;
        for (auto& K : out) {
            K.center = R * K.center + shift;
            if (K.kind == ObstacleKind::Ellipse) K.angle += rot;
        }
        return ObstacleConfiguration(std::move(out));
    }

    template <typename T>
    ObstacleConfiguration<T> cast() const {
        std::vector<ConvexObstacle<T>> out;
        out.reserve(obstacles_.size());
        for (const auto& K : obstacles_) out.push_back(K.template cast<T>());
        return ObstacleConfiguration<T>(std::move(out));
    }

  private:
    void finalize() {
        if (obstacles_.size() < 3)
            throw InvalidConfiguration("configuration needs k0 >= 3 obstacles");
        scale_ = S(0);
        for (const auto& K : obstacles_)
            scale_ = std::max(scale_, K.center.norm() + K.max_extent());
        if (scale_ <= S(0)) scale_ = S(1);
        d0_ = compute_min_separation();
        if (!(d0_ > S(0)))
            throw InvalidConfiguration("obstacles overlap or touch (d0 <= 0)");
        eclipse_ = compute_no_eclipse();
    }

    S pair_distance(const ConvexObstacle<S>& A, const ConvexObstacle<S>& B) const {
        if (A.kind == ObstacleKind::Disc && B.kind == ObstacleKind::Disc)
            return (A.center - B.center).norm() - A.radius - B.radius;
        // alternating projection between the two convex bodies
        Vec2<S> p = A.center, q = B.center;
        S prev = S(-1);
        for (int it = 0; it < 20000; ++it) {
            S tha = A.closest_boundary_theta(q);
            p = A.point(tha);
            S thb = B.closest_boundary_theta(p);
            q = B.point(thb);
            S d = (p - q).norm();
            if (prev >= S(0) && abs(prev - d) < S(1e-14) * (S(1) + d)) return d;
            prev = d;
        }
        return prev;
    }

    S compute_min_separation() const {
        S best = S(0);
        bool first = true;
        for (int i = 0; i < count(); ++i)
            for (int j = i + 1; j < count(); ++j) {
                S d = pair_distance(obstacles_[static_cast<size_t>(i)], obstacles_[static_cast<size_t>(j)]);
                if (first || d < best) {
                    best = d;
                    first = false;
                }
            }
        return best;
    }

    // clearance between conv(K_i u K_j) and K_l
    S hull_clearance(int i, int j, int l) const {
        const auto& A = obstacles_[static_cast<size_t>(i)];
        const auto& B = obstacles_[static_cast<size_t>(j)];
        const auto& L = obstacles_[static_cast<size_t>(l)];
        if (A.kind == ObstacleKind::Disc && B.kind == ObstacleKind::Disc &&
            L.kind == ObstacleKind::Disc) {
            // hull of two discs: discs centered on the segment with linearly
            // interpolated radius; clearance is convex in the segment parameter
            auto f = [&](S t) {
                Vec2<S> c = A.center + t * (B.center - A.center);
                S r = A.radius + t * (B.radius - A.radius);
                return (L.center - c).norm() - r - L.radius;
            };
            S lo = S(0), hi = S(1);
            for (int it = 0; it < 200; ++it) {
                S m1 = lo + (hi - lo) / S(3), m2 = hi - (hi - lo) / S(3);
                if (f(m1) < f(m2))
                    hi = m2;
                else
                    lo = m1;
            }
            return f((lo + hi) / S(2));
        }
        // support-function separation: dist(H, L) = max over unit u of
        // -h_H(-u) - h_L(u), with h_H = max(h_A, h_B)
        auto margin = [&](S psi) {
            Vec2<S> u(cos(psi), sin(psi));
            S hH = std::max(A.support(-u), B.support(-u));
            return -hH - L.support(u);
        };
        const S tau = S(6.283185307179586);
        S best = margin(S(0)), best_psi = S(0);
        const int starts = 256;
        for (int k = 1; k < starts; ++k) {
            S psi = tau * S(k) / S(starts);
            S m = margin(psi);
            if (m > best) {
                best = m;
                best_psi = psi;
            }
        }
        S lo = best_psi - tau / S(starts), hi = best_psi + tau / S(starts);
        for (int it = 0; it < 200; ++it) {
            S m1 = lo + (hi - lo) / S(3), m2 = hi - (hi - lo) / S(3);
            if (margin(m1) > margin(m2))
                hi = m2;
            else
                lo = m1;
        }
        return margin((lo + hi) / S(2));
    }

    NoEclipseReport compute_no_eclipse() const {
        NoEclipseReport rep;
        rep.ok = true;
        rep.margin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < count(); ++i)
            for (int j = i + 1; j < count(); ++j)
                for (int l = 0; l < count(); ++l) {
                    if (l == i || l == j) continue;
                    const double c = static_cast<double>(hull_clearance(i, j, l));
                    if (c < rep.margin) rep.margin = c;
                    if (c <= GeoTol::separation * static_cast<double>(scale_) && rep.ok) {
                        rep.ok = false;
                        rep.witness = NoEclipseWitness{i, j, l};
                    }
                }
        return rep;
    }

    std::vector<ConvexObstacle<S>> obstacles_;
    S d0_ = S(0);
    S scale_ = S(1);
    NoEclipseReport eclipse_;
};

/// Validate a boundary point against its obstacle's implicit equation.
template <typename S>
bool boundary_point_valid(const ObstacleConfiguration<S>& cfg, const BoundaryPoint<S>& bp) {
    if (bp.obstacle < 0 || bp.obstacle >= cfg.count()) return false;
    const S res = abs(cfg.obstacle(bp.obstacle).implicit_value(bp.position));
    return res <= static_cast<S>(GeoTol::boundary_rel) * cfg.scale();
}

template <typename S>
struct ShapeData {
    Vec2<S> nu;        // outward unit normal
    Vec2<S> Lu;        // shape operator applied to the tangent direction
    S k = S(0);        // normal curvature <L u, u> > 0
};

/// Outward normal, shape-operator image and normal curvature at a boundary
/// point in tangent direction u (unit, tangent to the boundary).
template <typename S>
ShapeData<S> outward_normal_and_shape(const ObstacleConfiguration<S>& cfg,
                                      const BoundaryPoint<S>& bp, const Vec2<S>& u) {
    if (!boundary_point_valid(cfg, bp))
        throw PreconditionError("boundary point is not on its obstacle");
    const auto& K = cfg.obstacle(bp.obstacle);
    const Vec2<S> nu = K.normal(bp.theta);
    if (abs(u.norm() - S(1)) > S(1e-9))
        throw PreconditionError("tangent direction must be a unit vector");
    if (abs(u.dot(nu)) > S(1e-9))
        throw PreconditionError("direction is not tangent to the boundary");
    const S k = K.curvature(bp.theta);
    ShapeData<S> out;
    out.nu = nu;
    out.Lu = k * u;  // 1-dimensional tangent space: L is multiplication by k
    out.k = k;
    return out;
}

/// The reference scatterer used across tests and examples: three unit discs
/// at the vertices of an equilateral triangle with the given side.
template <typename S = double>
ObstacleConfiguration<S> three_disc_config(S side = S(6), S radius = S(1)) {
    const S h = side * S(0.8660254037844386467637231707529362);  // side*sqrt(3)/2
    std::vector<ConvexObstacle<S>> v;
    v.push_back(ConvexObstacle<S>::disc(Vec2<S>(S(0), S(0)), radius));
    v.push_back(ConvexObstacle<S>::disc(Vec2<S>(side, S(0)), radius));
    v.push_back(ConvexObstacle<S>::disc(Vec2<S>(side / S(2), h), radius));
    return ObstacleConfiguration<S>(std::move(v));
}

}  // namespace obl
