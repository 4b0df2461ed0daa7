// Convex front propagation along billiard orbits in the plane.
//
// A front is a curve moving orthogonally to itself; its curvature B spreads
// under free flight as B/(1+tB) and jumps by 2K/cos(phi) at a dispersing
// reflection. The per-flight factors delta_j = 1/(1+d_j ell_j), with ell_j
// from the quadratic relation
//     (1 + d ell)^2 = 1 + 2 d k + d^2 |B e|^2,
// multiply to the reciprocal of the tangent-vector expansion of the flow.
// An independent finite-difference estimator (two nearby trajectories on the
// same front, per-flight renormalization, Richardson extrapolation) serves
// as the oracle for that product.
#pragma once

#include <cmath>
#include <vector>

#include "obl/common.hpp"
#include "obl/dynamics.hpp"
#include "obl/geometry.hpp"

namespace obl {

/// Planar front element: base phase point and scalar curvature B >= 0.
template <typename S>
struct FrontState {
    PhasePoint<S> base;
    S B = S(0);
};

/// Free flight over time t with no reflection inside (0, t).
template <typename S>
FrontState<S> propagate_free(const FrontState<S>& f, S t) {
    FrontState<S> out = f;
    out.base.q += t * f.base.v;
    out.B = f.B / (S(1) + t * f.B);
    return out;
}

/// Reflection at a boundary point with normal curvature K and incidence
/// angle phi: direction reflects, curvature jumps by 2K/cos(phi).
template <typename S>
FrontState<S> reflect_front(const FrontState<S>& f, const Vec2<S>& nu, S boundary_curvature,
                            S cos_phi) {
    if (cos_phi <= static_cast<S>(GeoTol::tangency))
        throw TangentHit("front reflection at tangency");
    FrontState<S> out;
    out.base.q = f.base.q;
    out.base.v = reflect(f.base.v, nu);
    out.B = f.B + S(2) * boundary_curvature / cos_phi;
    return out;
}

template <typename S>
struct ExpansionEntry {
    S d = S(0);        // flight length
    S k = S(0);        // normal curvature of the front at flight start
    S norm_Be = S(0);  // |B e| (equals k for planar fronts)
    S ell = S(0);
    S delta = S(1);
};

template <typename S>
struct ExpansionResult {
    std::vector<ExpansionEntry<S>> entries;
    S product = S(1);        // prod delta_j, in (0,1]
    S log_expansion = S(0);  // -log(product)
};

/// ell and delta from one flight: d > 0, 0 <= k <= |B e|.
template <typename S>
ExpansionEntry<S> expansion_delta(S d, S k, S norm_Be) {
    if (!(d > S(0))) throw PreconditionError("flight length must be positive");
    if (k < S(0) || norm_Be < S(0))
        throw PreconditionError("curvature data must be nonnegative");
    if (k > norm_Be + S(1e-10) * (S(1) + norm_Be))
        throw NumericalError("inconsistent curvature data: k exceeds |B e|");
    ExpansionEntry<S> e;
    e.d = d;
    e.k = k;
    e.norm_Be = norm_Be;
    const S rad = S(1) + S(2) * d * k + d * d * norm_Be * norm_Be;
    e.ell = (sqrt(rad) - S(1)) / d;
    e.delta = S(1) / (S(1) + d * e.ell);
    return e;
}

/// Front-tangent expansion along m reflections of a reconstructed orbit.
///
/// The front starts `start_offset` before reflection `first` with curvature
/// B0 (start_offset == 0 starts at the reflection itself); the last flight is
/// truncated to `end_offset` after reflection first+m-1. Returns every delta
/// and their product; the flow expands tangent vectors by 1/product.
template <typename S>
ExpansionResult<S> expansion_along(const ObstacleConfiguration<S>& cfg, const OrbitPolygon<S>& orb,
                                   long first, int m, S B0, S start_offset, S end_offset) {
    (void)cfg;
    ExpansionResult<S> res;
    S B = B0;
    if (start_offset > S(0)) {
        auto e0 = expansion_delta(start_offset, B, B);
        res.entries.push_back(e0);
        B = B / (S(1) + start_offset * B);
    }
    for (int i = 0; i < m; ++i) {
        const long j = first + i;
        const S K = orb.curvature_at(j);
        const S c = orb.cos_phi_at(j);
        if (c <= static_cast<S>(GeoTol::tangency)) throw TangentHit("tangential bounce");
        const S Bplus = B + S(2) * K / c;
        const S flight = (i == m - 1) ? end_offset : orb.d_at(j);
        auto e = expansion_delta(flight, Bplus, Bplus);
        res.entries.push_back(e);
        B = Bplus / (S(1) + flight * Bplus);
    }
    res.product = S(1);
    S logsum = S(0);
    for (const auto& e : res.entries) {
        res.product *= e.delta;
        logsum += log(e.delta);
    }
    res.log_expansion = -logsum;
    return res;
}

/// Canonical mid-flight expansion experiment over the L reflections of a
/// word orbit: front of curvature B0 half a flight before reflection
/// `first`, ending half a flight after reflection first+L-1.
template <typename S>
ExpansionResult<S> expansion_midflight(const ObstacleConfiguration<S>& cfg,
                                       const OrbitPolygon<S>& orb, long first, int L,
                                       S B0 = S(0)) {
    const S din = orb.d_at(first - 1);
    const S dout = orb.d_at(first + L - 1);
    return expansion_along(cfg, orb, first, L, B0, din / S(2), dout / S(2));
}

template <typename S>
struct PeriodicFrontData {
    std::vector<S> B_plus;  // post-reflection front curvature at each collision
    S log_multiplier = S(0);  // per-period log tangent expansion
};

/// Orbit-invariant front curvatures: iterate the flight/reflection curvature
/// cycle to its (exponentially attracting) fixed point.
template <typename S>
PeriodicFrontData<S> periodic_front_fixed_point(const OrbitPolygon<S>& orb) {
    const int p = orb.period();
    S B = S(0);
    for (int sweep = 0; sweep < 400; ++sweep) {
        const S before = B;
        for (int j = 0; j < p; ++j) {
            const S Bp = B + S(2) * orb.curvature_at(j) / orb.cos_phi_at(j);
            B = Bp / (S(1) + orb.d_at(j) * Bp);
        }
        if (abs(B - before) <= S(4) * std::numeric_limits<S>::epsilon() * (S(1) + abs(B))) break;
    }
    PeriodicFrontData<S> out;
    out.B_plus.resize(static_cast<size_t>(p));
    for (int j = 0; j < p; ++j) {
        const S Bp = B + S(2) * orb.curvature_at(j) / orb.cos_phi_at(j);
        out.B_plus[static_cast<size_t>(j)] = Bp;
        out.log_multiplier += log(S(1) + orb.d_at(j) * Bp);
        B = Bp / (S(1) + orb.d_at(j) * Bp);
    }
    return out;
}

namespace detail {

// advance a phase point through the scatterers to absolute time target,
// requiring the itinerary to follow the expected obstacle sequence
template <typename S>
PhasePoint<S> advance_checked(const ObstacleConfiguration<S>& cfg, PhasePoint<S> x, S t_now,
                              S t_target, const OrbitPolygon<S>& orb, long& next_reflection) {
    while (true) {
        auto hit = cfg.ray_intersect(x.q, x.v);
        const S t_hit = hit ? t_now + hit->t : std::numeric_limits<S>::infinity();
        if (t_hit >= t_target) {
            x.q += (t_target - t_now) * x.v;
            return x;
        }
        if (hit->bp.obstacle != orb.symbol(next_reflection))
            throw ItineraryChanged("perturbed trajectory changed its itinerary");
        const auto& K = cfg.obstacle(hit->bp.obstacle);
        x.q = hit->bp.position;
        x.v = reflect(x.v, K.normal(hit->bp.theta));
        t_now = t_hit;
        ++next_reflection;
    }
}

}  // namespace detail

/// One finite-difference pass at perturbation size s: trace a companion
/// trajectory started distance s along the initial front (curvature B0;
/// exact circular construction), measure the displacement growth between
/// consecutive mid-flight epochs, renormalizing the companion back to
/// distance s after each epoch. Returns the estimated total expansion over
/// the L reflections.
template <typename S>
S fd_expansion_once(const ObstacleConfiguration<S>& cfg, const OrbitPolygon<S>& orb, long first,
                    int L, S s, S B0 = S(0)) {
    if (!(s > S(0))) throw PreconditionError("perturbation size must be positive");
    const S din = orb.d_at(first - 1);
    // base epochs: mid-flight positions and times
    std::vector<Vec2<S>> base_q(static_cast<size_t>(L) + 1);
    std::vector<Vec2<S>> base_v(static_cast<size_t>(L) + 1);
    std::vector<S> base_t(static_cast<size_t>(L) + 1);
    base_q[0] = orb.q_at(first) - (din / S(2)) * orb.dir_at(first - 1);
    base_v[0] = orb.dir_at(first - 1);
    base_t[0] = S(0);
    S t = din / S(2);
    for (int i = 0; i < L; ++i) {
        const long j = first + i;
        const S dj = orb.d_at(j);
        base_t[static_cast<size_t>(i) + 1] = t + dj / S(2);
        base_q[static_cast<size_t>(i) + 1] = orb.q_at(j) + (dj / S(2)) * orb.dir_at(j);
        base_v[static_cast<size_t>(i) + 1] = orb.dir_at(j);
        t += dj;
    }

    const Vec2<S> e(-base_v[0].y(), base_v[0].x());  // front tangent at the start
    PhasePoint<S> pert;
    if (B0 == S(0)) {
        pert.q = base_q[0] + s * e;
        pert.v = base_v[0];
    } else {
        // circular front of radius 1/B0 centered behind the base point
        const Vec2<S> c = base_q[0] - (S(1) / B0) * base_v[0];
        const S a = B0 * s;
        Mat2<S> rot;
        rot << cos(a), -sin(a), sin(a), cos(a);
        pert.v = rot * base_v[0];
        pert.q = c + (S(1) / B0) * pert.v;
    }
    long next_ref = first;
    S expansion = S(1);
    for (int i = 0; i < L; ++i) {
        pert = detail::advance_checked(cfg, pert, base_t[static_cast<size_t>(i)],
                                       base_t[static_cast<size_t>(i) + 1], orb, next_ref);
        if (next_ref != first + i + 1)
            throw ItineraryChanged("perturbed trajectory missed a reflection");
        const Vec2<S> dq = pert.q - base_q[static_cast<size_t>(i) + 1];
        const S len = dq.norm();
        expansion *= len / s;
        // pull the companion back to distance s along the evolved front
        const S z = s / len;
        pert.q = base_q[static_cast<size_t>(i) + 1] + z * dq;
        pert.v = (base_v[static_cast<size_t>(i) + 1] +
                  z * (pert.v - base_v[static_cast<size_t>(i) + 1]))
                     .normalized();
    }
    return expansion;
}

/// Richardson-extrapolated finite-difference expansion over s and s/2.
template <typename S>
S fd_expansion(const ObstacleConfiguration<S>& cfg, const OrbitPolygon<S>& orb, long first, int L,
               S s, S B0 = S(0)) {
    const S e1 = fd_expansion_once(cfg, orb, first, L, s, B0);
    const S e2 = fd_expansion_once(cfg, orb, first, L, s / S(2), B0);
    return S(2) * e2 - e1;
}

// ---------------------------------------------------------------------------
// Quadratic reflection residual.
//
// For a convex front Y whose normal ray from eta(0) hits a convex body Z
// transversally at time tau, the displacement after flight tau obeys
//   | |eta_tau(s)-eta_tau(0)| - (1+tau ell0) |eta(s)-eta(0)| | <= C |eta(s)-eta(0)|^2
// with ell0 from the same quadratic relation as above. The sweep returns the
// measured residual against displacement, for a log-log order fit.

template <typename S>
struct ResidualPoint {
    S displacement = S(0);
    S residual = S(0);
};

template <typename S>
struct ResidualSweep {
    S tau = S(0);
    S ell0 = S(0);
    S cos_phi = S(1);
    std::vector<ResidualPoint<S>> points;
};

template <typename S>
ResidualSweep<S> reflection_residual_sweep(const ConvexObstacle<S>& Y, const ConvexObstacle<S>& Z,
                                           S theta0, const std::vector<S>& sweep,
                                           S speed = S(1)) {
    ResidualSweep<S> out;
    const Vec2<S> eta0 = Y.point(theta0);
    const Vec2<S> n0 = Y.normal(theta0);
    auto t0 = detail::ray_obstacle(eta0, n0, Z, S(0));
    if (!t0) throw PreconditionError("front normal ray misses the target body");
    out.tau = *t0;
    const Vec2<S> hit0 = eta0 + out.tau * n0;
    const S thz = Z.closest_boundary_theta(hit0);
    const Vec2<S> nz = Z.normal(thz);
    out.cos_phi = -n0.dot(nz);
    if (out.cos_phi <= static_cast<S>(GeoTol::tangency))
        throw TangentHit("target hit is tangential");
    const S k0 = Y.curvature(theta0);
    // planar front: |L u| = k, the quadratic relation collapses to ell0 = k0
    const S rad = S(1) + S(2) * out.tau * k0 + out.tau * out.tau * k0 * k0;
    out.ell0 = (sqrt(rad) - S(1)) / out.tau;
    const S factor = S(1) + out.tau * out.ell0;

    for (S s : sweep) {
        const Vec2<S> eta = Y.point(theta0 + speed * s);
        const Vec2<S> n = Y.normal(theta0 + speed * s);
        // position at absolute time tau, reflecting at Z if hit earlier
        Vec2<S> pos;
        auto th = detail::ray_obstacle(eta, n, Z, S(0));
        if (th && *th < out.tau) {
            const Vec2<S> hp = eta + (*th) * n;
            const S thzz = Z.closest_boundary_theta(hp);
            const Vec2<S> v2 = reflect(n, Z.normal(thzz));
            pos = Z.point(thzz) + (out.tau - *th) * v2;
        } else {
            pos = eta + out.tau * n;
        }
        ResidualPoint<S> pt;
        pt.displacement = (eta - eta0).norm();
        pt.residual = abs((pos - hit0).norm() - factor * pt.displacement);
        out.points.push_back(pt);
    }
    return out;
}

}  // namespace obl
