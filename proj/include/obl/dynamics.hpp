// Billiard flow and collision map in the exterior of the scatterers:
// specular reflection, tracing to a given time, symbolic itineraries, and
// reconstruction of periodic/finite-word orbit segments by length
// minimization over boundary parameters (damped Newton, cyclic tridiagonal).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "obl/common.hpp"
#include "obl/geometry.hpp"

namespace obl {

template <typename S>
struct PhasePoint {
    Vec2<S> q = Vec2<S>::Zero();
    Vec2<S> v = Vec2<S>::UnitX();
};

template <typename S>
struct ReflectionRecord {
    BoundaryPoint<S> point;
    S time = S(0);            // t_j
    Vec2<S> out_dir;          // post-reflection direction
    S cos_phi = S(1);         // <out_dir, outward normal>
    S phi = S(0);             // angle in [0, pi/2)
};

template <typename S>
struct Trajectory {
    PhasePoint<S> start;
    std::vector<ReflectionRecord<S>> reflections;

    /// Free path between reflections j and j+1.
    S free_path(size_t j) const {
        return reflections[j + 1].time - reflections[j].time;
    }
};

using SymbolWord = std::vector<int>;

/// Adjacent symbols must differ (convexity forbids immediate re-hits).
inline bool word_admissible(const SymbolWord& w, int k0) {
    if (w.empty()) return false;
    for (size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0 || w[i] >= k0) return false;
        if (i > 0 && w[i] == w[i - 1]) return false;
    }
    return true;
}

/// Admissible as a periodic word (also no repeat across the seam).
inline bool word_cyclically_admissible(const SymbolWord& w, int k0) {
    return word_admissible(w, k0) && (w.size() == 1 || w.front() != w.back());
}

/// v' = v - 2<v,nu> nu. Requires an incoming direction.
template <typename S>
Vec2<S> reflect(const Vec2<S>& v, const Vec2<S>& nu) {
    const S c = v.dot(nu);
    if (c >= -static_cast<S>(GeoTol::tangency))
        throw TangentHit("reflection at (near-)tangent incidence");
    return v - S(2) * c * nu;
}

template <typename S>
struct BilliardStep {
    PhasePoint<S> next;   // phase point just after the reflection
    S flight = S(0);      // free path
    S phi = S(0);
    S cos_phi = S(1);
    BoundaryPoint<S> bp;
};

/// One step of the collision map. Throws EscapeError if the forward ray
/// misses all obstacles, TangentHit near tangency.
template <typename S>
BilliardStep<S> billiard_step(const ObstacleConfiguration<S>& cfg, const PhasePoint<S>& x) {
    auto hit = cfg.ray_intersect(x.q, x.v);
    if (!hit) throw EscapeError("forward ray escapes the scatterer system");
    const auto& K = cfg.obstacle(hit->bp.obstacle);
    const Vec2<S> nu = K.normal(hit->bp.theta);
    if (x.v.dot(nu) > static_cast<S>(GeoTol::tangency))
        throw PreconditionError("trajectory reaches a boundary from inside an obstacle");
    BilliardStep<S> out;
    out.flight = hit->t;
    out.bp = hit->bp;
    out.next.q = hit->bp.position;
    out.next.v = reflect(x.v, nu);
    out.cos_phi = out.next.v.dot(nu);
    using std::acos;
    using std::min;
    out.phi = acos(min(out.cos_phi, S(1)));
    return out;
}

/// Advance the flow by time t, recording all reflections on the way.
/// Throws ReflectionAtBoundaryTime if t lands on a reflection within 1e-10
/// of the configuration scale (the caller should perturb t).
template <typename S>
std::pair<PhasePoint<S>, Trajectory<S>> flow_to_time(const ObstacleConfiguration<S>& cfg,
                                                     const PhasePoint<S>& x0, S t) {
    const S tol = S(1e-10) * std::max(S(1), cfg.scale());
    Trajectory<S> traj;
    traj.start = x0;
    PhasePoint<S> x = x0;
    S elapsed = S(0);
    while (true) {
        std::optional<RayHit<S>> hit = cfg.ray_intersect(x.q, x.v);
        const S t_hit = hit ? elapsed + hit->t : std::numeric_limits<S>::infinity();
        if (abs(t_hit - t) < tol)
            throw ReflectionAtBoundaryTime("requested time coincides with a reflection");
        if (t < t_hit) {
            x.q += (t - elapsed) * x.v;
            return {x, traj};
        }
        const auto& K = cfg.obstacle(hit->bp.obstacle);
        const Vec2<S> nu = K.normal(hit->bp.theta);
        ReflectionRecord<S> rec;
        rec.point = hit->bp;
        rec.time = t_hit;
        rec.out_dir = reflect(x.v, nu);
        rec.cos_phi = rec.out_dir.dot(nu);
        using std::acos;
        rec.phi = acos(std::min(rec.cos_phi, S(1)));
        traj.reflections.push_back(rec);
        x.q = hit->bp.position;
        x.v = rec.out_dir;
        elapsed = t_hit;
    }
}

template <typename S>
SymbolWord itinerary(const Trajectory<S>& traj) {
    if (traj.reflections.empty())
        throw PreconditionError("itinerary needs at least one reflection");
    SymbolWord w;
    w.reserve(traj.reflections.size());
    for (const auto& r : traj.reflections) w.push_back(r.point.obstacle);
    return w;
}

// ---------------------------------------------------------------------------
// Orbit reconstruction from words.
//
// A periodic word of period p determines a unique closed billiard polygon:
// the minimizer of the cyclic total length over boundary parameters, one per
// reflection. Finite words use the periodic extension; when the seam would
// repeat a symbol, one extra symbol is appended (the smallest admissible one)
// and the caller reads only the first |w| reflections.

template <typename S>
struct OrbitPolygon {
    SymbolWord word;                 // the period actually solved
    size_t requested = 0;            // reflections meaningful to the caller
    bool padded = false;             // one symbol appended to close the seam
    std::vector<S> theta;            // boundary parameter per reflection
    std::vector<Vec2<S>> q;          // reflection points
    std::vector<S> d;                // d[j] = |q[j+1]-q[j]|, cyclic
    std::vector<Vec2<S>> out_dir;    // unit(q[j+1]-q[j]) = post-reflection dir
    std::vector<S> cos_phi;          // <out_dir, normal>
    std::vector<S> phi;              // unsigned reflection angle
    std::vector<S> phi_signed;       // angle from normal, ccw positive
    std::vector<S> curvature;        // boundary curvature at q[j]
    S total_length = S(0);
    S grad_norm = S(0);
    int newton_iters = 0;

    int period() const { return static_cast<int>(word.size()); }
    int symbol(long j) const {  // cyclic access for any integer index
        const long p = period();
        long m = j % p;
        if (m < 0) m += p;
        return word[static_cast<size_t>(m)];
    }
    /// Cyclic collision data at any integer index.
    S d_at(long j) const { return d[static_cast<size_t>(mod(j))]; }
    S cos_phi_at(long j) const { return cos_phi[static_cast<size_t>(mod(j))]; }
    S curvature_at(long j) const { return curvature[static_cast<size_t>(mod(j))]; }
    Vec2<S> q_at(long j) const { return q[static_cast<size_t>(mod(j))]; }
    Vec2<S> dir_at(long j) const { return out_dir[static_cast<size_t>(mod(j))]; }
    S theta_at(long j) const { return theta[static_cast<size_t>(mod(j))]; }

    long mod(long j) const {
        const long p = period();
        long m = j % p;
        return m < 0 ? m + p : m;
    }
};

namespace detail {

// Solve the symmetric cyclic tridiagonal system H x = rhs.
// diag/off hold H_ii and H_{i,i+1}; corner = H_{0,p-1} (= H_{p-1,0}).
template <typename S>
void solve_cyclic_tridiag(std::vector<S> diag, const std::vector<S>& off, S corner,
                          std::vector<S> rhs, std::vector<S>& x) {
    const size_t p = diag.size();
    auto thomas = [&](const std::vector<S>& dg, std::vector<S> r) {
        std::vector<S> c(p, S(0)), sol(p);
        std::vector<S> dd = dg;
        for (size_t i = 1; i < p; ++i) {
            const S m = off[i - 1] / dd[i - 1];
            dd[i] -= m * off[i - 1];
            r[i] -= m * r[i - 1];
        }
        sol[p - 1] = r[p - 1] / dd[p - 1];
        for (size_t i = p - 1; i-- > 0;) sol[i] = (r[i] - off[i] * sol[i + 1]) / dd[i];
        return sol;
    };
    if (corner == S(0)) {
        x = thomas(diag, rhs);
        return;
    }
    // rank-one correction: H = T + corner * u u^T with u = e_0 + e_{p-1}
    std::vector<S> dmod = diag;
    dmod[0] -= corner;
    dmod[p - 1] -= corner;
    std::vector<S> u(p, S(0));
    u[0] = S(1);
    u[p - 1] = S(1);
    std::vector<S> y = thomas(dmod, rhs);
    std::vector<S> z = thomas(dmod, u);
    const S uy = y[0] + y[p - 1];
    const S uz = z[0] + z[p - 1];
    const S f = corner * uy / (S(1) + corner * uz);
    x.resize(p);
    for (size_t i = 0; i < p; ++i) x[i] = y[i] - f * z[i];
}

}  // namespace detail

template <typename S>
struct OrbitSolveOptions {
    const std::vector<S>* theta_init = nullptr;  // override the default initial guess
    S grad_tol_factor = S(1e-12);                // gradient tolerance relative to scale
};

/// Closed billiard polygon for a cyclically admissible word: minimizes the
/// cyclic total length over boundary parameters with a damped Newton method.
/// Gradient tolerance 1e-12 * scale by default, at most 200 iterations.
template <typename S>
OrbitPolygon<S> solve_periodic_orbit(const ObstacleConfiguration<S>& cfg, const SymbolWord& word,
                                     const OrbitSolveOptions<S>& opts = {}) {
    const int k0 = cfg.count();
    if (!word_cyclically_admissible(word, k0))
        throw NonAdmissibleWord("word is not cyclically admissible");
    const size_t p = word.size();
    if (p < 2) throw NonAdmissibleWord("periodic orbit needs period >= 2");

    OrbitPolygon<S> orb;
    orb.word = word;
    orb.requested = p;
    orb.theta.assign(p, S(0));

    if (opts.theta_init) {
        orb.theta = *opts.theta_init;
    } else {
        // initial guess: boundary point facing the bisector of the neighbour centers
        for (size_t j = 0; j < p; ++j) {
            const auto& K = cfg.obstacle(word[j]);
            const auto& Kp = cfg.obstacle(word[(j + p - 1) % p]);
            const auto& Kn = cfg.obstacle(word[(j + 1) % p]);
            Vec2<S> a = (Kp.center - K.center).normalized();
            Vec2<S> b = (Kn.center - K.center).normalized();
            Vec2<S> e = a + b;
            if (e.norm() < S(1e-12)) e = a;  // collinear neighbours
            orb.theta[j] = K.theta_of_normal(e.normalized());
        }
    }

    std::vector<Vec2<S>> q(p), qp(p), qpp(p), e(p);
    std::vector<S> d(p), grad(p), diag(p), off(p), step(p);

    auto eval_points = [&](const std::vector<S>& th) {
        for (size_t j = 0; j < p; ++j) {
            const auto& K = cfg.obstacle(word[j]);
            q[j] = K.point(th[j]);
            qp[j] = K.velocity(th[j]);
            qpp[j] = K.acceleration(th[j]);
        }
    };
    auto total_length = [&](const std::vector<S>& th) {
        S L = S(0);
        for (size_t j = 0; j < p; ++j) {
            const auto& K = cfg.obstacle(word[j]);
            const auto& Kn = cfg.obstacle(word[(j + 1) % p]);
            L += (Kn.point(th[(j + 1) % p]) - K.point(th[j])).norm();
        }
        return L;
    };

    const S gtol = opts.grad_tol_factor * cfg.scale();
    S lambda = S(0);  // Levenberg shift, switched on only if a step fails
    int it = 0;
    for (; it < 200; ++it) {
        eval_points(orb.theta);
        for (size_t j = 0; j < p; ++j) {
            Vec2<S> delta = q[(j + 1) % p] - q[j];
            d[j] = delta.norm();
            e[j] = delta / d[j];
        }
        S gmax = S(0);
        for (size_t j = 0; j < p; ++j) {
            const size_t jm = (j + p - 1) % p;
            grad[j] = qp[j].dot(e[jm] - e[j]);
            gmax = std::max(gmax, abs(grad[j]));
        }
        if (gmax <= gtol) break;

        // Hessian of the cyclic length (symmetric tridiagonal + corner)
        std::fill(diag.begin(), diag.end(), S(0));
        std::fill(off.begin(), off.end(), S(0));
        S corner = S(0);
        for (size_t j = 0; j < p; ++j) {
            const size_t jn = (j + 1) % p;
            const S pj = qp[j].dot(e[j]), pn = qp[jn].dot(e[j]);
            diag[j] += (qp[j].squaredNorm() - pj * pj) / d[j] - qpp[j].dot(e[j]);
            diag[jn] += (qp[jn].squaredNorm() - pn * pn) / d[j] + qpp[jn].dot(e[j]);
            const S coup = -(qp[j].dot(qp[jn]) - pj * pn) / d[j];
            if (p == 2) {
                off[0] += coup;  // both segments couple the same pair
            } else if (jn == 0) {
                corner += coup;
            } else {
                off[j] += coup;
            }
        }

        bool accepted = false;
        const S L0 = total_length(orb.theta);
        // inside the quadratic basin the decrease of L falls below its own
        // roundoff; gate on the gradient only and take full Newton steps
        const bool endgame = gmax <= S(1e-4) * cfg.scale();
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            std::vector<S> dshift = diag;
            if (lambda > S(0))
                for (auto& v : dshift) v += lambda;
            std::vector<S> rhs(p);
            for (size_t j = 0; j < p; ++j) rhs[j] = -grad[j];
            if (p == 2) {
                // dense 2x2
                const S a11 = dshift[0], a22 = dshift[1], a12 = off[0];
                const S det = a11 * a22 - a12 * a12;
                if (abs(det) < S(1e-300)) {
                    lambda = (lambda == S(0)) ? S(1e-8) : lambda * S(10);
                    continue;
                }
                step[0] = (rhs[0] * a22 - rhs[1] * a12) / det;
                step[1] = (rhs[1] * a11 - rhs[0] * a12) / det;
            } else {
                detail::solve_cyclic_tridiag(dshift, off, corner, rhs, step);
            }
            // backtracking on the length itself
            S sfrac = S(1);
            for (int ls = 0; ls < 30; ++ls) {
                std::vector<S> th = orb.theta;
                for (size_t j = 0; j < p; ++j) th[j] += sfrac * step[j];
                const S L1 = total_length(th);
                bool finite = true;
                for (size_t j = 0; j < p && finite; ++j)
                    if (!(th[j] == th[j])) finite = false;
                if (finite && (endgame || L1 <= L0 + S(1e-12) * (S(1) + abs(L0)))) {
                    orb.theta = th;
                    accepted = true;
                    break;
                }
                sfrac /= S(2);
            }
            if (!accepted) lambda = (lambda == S(0)) ? S(1e-8) : lambda * S(10);
        }
        if (!accepted)
            throw MinimizationStalled("orbit length minimization failed to make progress");
        if (lambda > S(0)) lambda /= S(4);
    }
    eval_points(orb.theta);
    for (size_t j = 0; j < p; ++j) {
        Vec2<S> delta = q[(j + 1) % p] - q[j];
        d[j] = delta.norm();
        e[j] = delta / d[j];
    }
    S gmax = S(0);
    for (size_t j = 0; j < p; ++j) {
        const size_t jm = (j + p - 1) % p;
        gmax = std::max(gmax, abs(qp[j].dot(e[jm] - e[j])));
    }
    if (gmax > gtol)
        throw MinimizationStalled("orbit minimizer did not reach gradient tolerance");

    orb.newton_iters = it;
    orb.grad_norm = gmax;
    orb.q = q;
    orb.d = d;
    orb.out_dir = e;
    orb.total_length = std::accumulate(d.begin(), d.end(), S(0));
    orb.cos_phi.resize(p);
    orb.phi.resize(p);
    orb.phi_signed.resize(p);
    orb.curvature.resize(p);
    for (size_t j = 0; j < p; ++j) {
        const auto& K = cfg.obstacle(word[j]);
        const Vec2<S> nu = K.normal(orb.theta[j]);
        const Vec2<S> that = K.velocity(orb.theta[j]).normalized();
        const S c = e[j].dot(nu);
        if (c <= static_cast<S>(GeoTol::tangency))
            throw TangentHit("reconstructed orbit reflects tangentially");
        orb.cos_phi[j] = c;
        using std::acos;
        orb.phi[j] = acos(std::min(c, S(1)));
        orb.phi_signed[j] = atan2(e[j].dot(that), c);
        orb.curvature[j] = K.curvature(orb.theta[j]);
    }
    return orb;
}

/// Orbit segment for an admissible (not necessarily cyclic) word: periodic
/// extension, padding the seam with one extra symbol when needed. The first
/// word.size() reflections carry the requested itinerary.
template <typename S>
OrbitPolygon<S> find_orbit_for_word(const ObstacleConfiguration<S>& cfg, const SymbolWord& word,
                                    const OrbitSolveOptions<S>& opts = {}) {
    const int k0 = cfg.count();
    if (!word_admissible(word, k0)) throw NonAdmissibleWord("word is not admissible");
    SymbolWord period = word;
    bool padded = false;
    if (!word_cyclically_admissible(period, k0) || period.size() < 2) {
        int c = 0;
        while (c == word.back() || c == word.front()) ++c;
        if (c >= k0) throw NonAdmissibleWord("cannot pad word to an admissible cycle");
        period.push_back(c);
        padded = true;
    }
    OrbitPolygon<S> orb = solve_periodic_orbit(cfg, period, opts);
    orb.requested = word.size();
    orb.padded = padded;
    return orb;
}

/// Launch the flow from just after reflection `start` of the polygon and
/// trace `n_bounces` collisions; used by round-trip and shadowing checks.
template <typename S>
Trajectory<S> trace_polygon(const ObstacleConfiguration<S>& cfg, const OrbitPolygon<S>& orb,
                            long start, int n_bounces) {
    PhasePoint<S> x;
    x.q = orb.q_at(start);
    x.v = orb.dir_at(start);
    Trajectory<S> traj;
    traj.start = x;
    S t = S(0);
    for (int k = 0; k < n_bounces; ++k) {
        auto stepr = billiard_step(cfg, x);
        t += stepr.flight;
        ReflectionRecord<S> rec;
        rec.point = stepr.bp;
        rec.time = t;
        rec.out_dir = stepr.next.v;
        rec.cos_phi = stepr.cos_phi;
        rec.phi = stepr.phi;
        traj.reflections.push_back(rec);
        x = stepr.next;
    }
    return traj;
}

}  // namespace obl
