// Derivative cocycle of the planar collision map and log-stabilized products.
//
// The product A^n = A_{n-1} ... A_0 is kept as Q * diag(exp(l)) * W with Q
// orthogonal, l the per-row log scales and W unit upper triangular; one QR
// re-factorization per multiplication. Nothing is ever formed densely, so
// products run to arbitrary n without overflow and the log singular values
// carry O(n * eps) relative error.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "obl/common.hpp"
#include "obl/dynamics.hpp"

namespace obl {

/// Derivative of the collision map in (arclength, angle-from-normal)
/// coordinates across one flight: tau is the free path, K0/K1 the boundary
/// curvatures and phi0/phi1 the reflection angles at the two endpoints.
template <typename S>
Mat2<S> map_derivative(S tau, S K0, S K1, S cos_phi0, S cos_phi1) {
    if (cos_phi0 <= static_cast<S>(GeoTol::tangency) ||
        cos_phi1 <= static_cast<S>(GeoTol::tangency))
        throw TangentHit("map derivative at tangential collision");
    Mat2<S> m;
    m(0, 0) = tau * K0 + cos_phi0;
    m(0, 1) = tau;
    m(1, 0) = tau * K0 * K1 + K1 * cos_phi0 + K0 * cos_phi1;
    m(1, 1) = tau * K1 + cos_phi1;
    return -(S(1) / cos_phi1) * m;
}

/// Collision-map derivative along a reconstructed orbit, cyclic in the index.
template <typename S>
Mat2<S> orbit_map_derivative(const OrbitPolygon<S>& orb, long j) {
    return map_derivative(orb.d_at(j), orb.curvature_at(j), orb.curvature_at(j + 1),
                          orb.cos_phi_at(j), orb.cos_phi_at(j + 1));
}

/// Log-stabilized product of invertible D x D matrices (left multiplication).
template <typename S, int D = 2>
class StabilizedProduct {
  public:
    using Mat = Eigen::Matrix<S, D, D>;
    using Vec = Eigen::Matrix<S, D, 1>;

    StabilizedProduct() { reset(); }

    void reset() {
        q_ = Mat::Identity();
        w_ = Mat::Identity();
        logd_.setZero();
        n_ = 0;
    }

    int steps() const { return n_; }

    /// Multiply the accumulated product by A on the left.
    void push(const Mat& A) {
        Mat b = A * q_;
        Eigen::HouseholderQR<Mat> qr(b);
        Mat qn = qr.householderQ();
        Mat r = qn.transpose() * b;
        // normalize to a positive diagonal
        for (int i = 0; i < D; ++i) {
            if (r(i, i) < S(0)) {
                r.row(i) = -r.row(i);
                qn.col(i) = -qn.col(i);
            }
            if (r(i, i) == S(0)) throw NumericalError("singular cocycle factor");
        }
        // S * diag(exp(l)) = diag(exp(l')) * Ws,  l'_i = l_i + log S_ii
        Mat ws = Mat::Identity();
        for (int i = 0; i < D; ++i)
            for (int j = i + 1; j < D; ++j) {
                const S expo = logd_(j) - logd_(i);
                ws(i, j) = (r(i, j) / r(i, i)) * bounded_exp(expo);
            }
        for (int i = 0; i < D; ++i) logd_(i) += log(r(i, i));
        w_ = ws * w_;
        q_ = qn;
        ++n_;
    }

    /// Sum of log singular values (= log |det| of the product).
    S log_abs_det() const { return logd_.sum(); }

    /// All log singular values, descending. Exact for D = 2 (the smaller one
    /// comes from the determinant identity); general D uses the compensated
    /// triangular factor.
    Vec log_singular_values() const {
        const S lmax = logd_.maxCoeff();
        Mat m = compensated(lmax);
        Eigen::JacobiSVD<Mat> svd(m);
        Vec out;
        for (int i = 0; i < D; ++i) {
            const S sv = svd.singularValues()(i);
            out(i) = sv > S(0) ? lmax + log(sv) : -std::numeric_limits<S>::infinity();
        }
        if constexpr (D == 2) out(1) = log_abs_det() - out(0);
        return out;
    }

    S log_top_singular() const {
        const S lmax = logd_.maxCoeff();
        Mat m = compensated(lmax);
        Eigen::JacobiSVD<Mat> svd(m);
        return lmax + log(svd.singularValues()(0));
    }

    /// Right singular frame of the product (columns, descending).
    Mat right_singular_frame() const {
        Eigen::JacobiSVD<Mat> svd(compensated(logd_.maxCoeff()), Eigen::ComputeFullV);
        return svd.matrixV();
    }

    /// Left singular frame of the product (columns, descending).
    Mat left_singular_frame() const {
        Eigen::JacobiSVD<Mat> svd(compensated(logd_.maxCoeff()), Eigen::ComputeFullU);
        return q_ * svd.matrixU();
    }

    /// log |A^n x|.
    S log_norm_times(const Vec& x) const {
        const Vec y = w_ * x;
        return scaled_log_norm(logd_, y);
    }

    /// log of the operator norm of the product restricted to the span of the
    /// (orthonormal) columns of E.
    template <int K>
    S log_restricted_norm(const Eigen::Matrix<S, D, K>& E) const {
        const S lmax = logd_.maxCoeff();
        Eigen::Matrix<S, D, K> m = w_ * E;
        for (int i = 0; i < D; ++i) m.row(i) *= bounded_exp(logd_(i) - lmax);
        Eigen::JacobiSVD<Eigen::Matrix<S, D, K>> svd(m);
        return lmax + log(svd.singularValues()(0));
    }

    /// log |P^{-1} x| where P is the product accumulated TRANSPOSED, i.e. the
    /// caller pushed A_1^T, A_2^T, ... so that this object holds (A^n)^T.
    S log_norm_inverse_of_transposed(const Vec& x) const {
        // P = W^T D Q^T, so P^{-1} x = Q D^{-1} (W^{-T} x)
        Vec z;
        for (int i = 0; i < D; ++i) {
            S acc = x(i);
            for (int j = 0; j < i; ++j) acc -= w_(j, i) * z(j);
            z(i) = acc;
        }
        return scaled_log_norm(-logd_, z);
    }

    /// log |trace| of the product (top eigenvalue for strongly hyperbolic
    /// products); exact in the log representation.
    S log_abs_trace() const {
        const S lmax = logd_.maxCoeff();
        S tr = S(0);
        for (int i = 0; i < D; ++i) {
            S diag = S(0);
            for (int k = 0; k <= i; ++k) diag += q_(i, k) * bounded_exp(logd_(k) - lmax) * w_(k, i);
            tr += diag;
        }
        return lmax + log(abs(tr));
    }

    const Mat& orthogonal_factor() const { return q_; }

  private:
    static S bounded_exp(S x) {
        if (x > S(690)) throw NumericalError("stabilized product scale overflow");
        if (x < S(-690)) return S(0);
        return exp(x);
    }

    static S scaled_log_norm(const Vec& scales, const Vec& y) {
        S best = -std::numeric_limits<S>::infinity();
        Vec ly;
        for (int i = 0; i < D; ++i) {
            ly(i) = y(i) == S(0) ? -std::numeric_limits<S>::infinity() : scales(i) + log(abs(y(i)));
            if (ly(i) > best) best = ly(i);
        }
        if (best == -std::numeric_limits<S>::infinity())
            throw NumericalError("zero vector in log norm");
        S acc = S(0);
        for (int i = 0; i < D; ++i) {
            const S e = ly(i) - best;
            if (e > S(-300)) acc += exp(S(2) * e);
        }
        return best + log(acc) / S(2);
    }

    Mat compensated(S lmax) const {
        Mat m = w_;
        for (int i = 0; i < D; ++i) m.row(i) *= bounded_exp(logd_(i) - lmax);
        return m;
    }

    Mat q_;                       // orthogonal factor
    Mat w_;                       // unit upper triangular, bounded entries
    Eigen::Matrix<S, D, 1> logd_; // log of the triangular diagonal
    int n_ = 0;
};

template <typename S>
struct FiniteTimeSpectrum {
    int n = 0;
    Vec2<S> log_t;       // log singular values, descending
    Vec2<S> lambda;      // (1/n) log t_i
    Mat2<S> frame;       // right singular frame (columns)
    std::vector<std::vector<int>> clusters;  // exponent groups within gap tol
};

/// Finite-time spectrum from an accumulated product. Exponents closer than
/// `cluster_tol` are grouped into one multiplicity cluster.
template <typename S>
FiniteTimeSpectrum<S> singular_spectrum(const StabilizedProduct<S, 2>& prod,
                                        S cluster_tol = S(1e-3)) {
    FiniteTimeSpectrum<S> sp;
    sp.n = prod.steps();
    if (sp.n == 0) throw PreconditionError("empty product has no spectrum");
    sp.log_t = prod.log_singular_values();
    sp.lambda = sp.log_t / S(sp.n);
    sp.frame = prod.right_singular_frame();
    sp.clusters.clear();
    std::vector<int> cur{0};
    for (int i = 1; i < 2; ++i) {
        if (abs(sp.lambda(i) - sp.lambda(i - 1)) <= cluster_tol) {
            cur.push_back(i);
        } else {
            sp.clusters.push_back(cur);
            cur = {i};
        }
    }
    sp.clusters.push_back(cur);
    return sp;
}

/// Distance between equal-dimensional subspaces: sine of the largest
/// principal angle, via the projection onto the orthogonal complement.
template <typename S, int D, int K>
S grassmann_distance(const Eigen::Matrix<S, D, K>& U, const Eigen::Matrix<S, D, K>& V) {
    // orthonormalize defensively; inputs are usually already orthonormal
    Eigen::HouseholderQR<Eigen::Matrix<S, D, K>> qu(U), qv(V);
    Eigen::Matrix<S, D, K> Uo = qu.householderQ() * Eigen::Matrix<S, D, K>::Identity();
    Eigen::Matrix<S, D, K> Vo = qv.householderQ() * Eigen::Matrix<S, D, K>::Identity();
    Eigen::Matrix<S, D, K> resid = Uo - Vo * (Vo.transpose() * Uo);
    Eigen::JacobiSVD<Eigen::Matrix<S, D, K>> svd(resid);
    return svd.singularValues()(0);
}

/// Asymmetric gap: distance from a unit vector to a subspace.
template <typename S, int D, int K>
S vector_subspace_gap(const Eigen::Matrix<S, D, 1>& u, const Eigen::Matrix<S, D, K>& V) {
    Eigen::Matrix<S, D, 1> r = u - V * (V.transpose() * u);
    return r.norm();
}

/// log |Lambda^i A^n| = sum of the top i log singular values.
template <typename S>
S exterior_log_norm(const StabilizedProduct<S, 2>& prod, int i) {
    if (i < 1 || i > 2) throw PreconditionError("exterior power index out of range");
    const auto lt = prod.log_singular_values();
    S acc = S(0);
    for (int j = 0; j < i; ++j) acc += lt(j);
    return acc;
}

// ---------------------------------------------------------------------------
// Orbit-driven cocycle and subspace estimators.

/// Cocycle matrices along a periodic word orbit, with lazy cyclic access.
template <typename S>
class OrbitCocycle {
  public:
    explicit OrbitCocycle(const OrbitPolygon<S>& orb) : orb_(&orb) {}

    Mat2<S> matrix(long j) const { return orbit_map_derivative(*orb_, j); }
    Mat2<S> matrix_transposed(long j) const { return matrix(j).transpose().eval(); }

    /// Accumulate the forward product over [start, start+n).
    StabilizedProduct<S, 2> product(long start, int n) const {
        StabilizedProduct<S, 2> p;
        for (int k = 0; k < n; ++k) p.push(matrix(start + k));
        return p;
    }

    const OrbitPolygon<S>& polygon() const { return *orb_; }

  private:
    const OrbitPolygon<S>* orb_;
};

/// Cocycle defined by an arbitrary index-to-matrix map (synthetic ensembles,
/// user-supplied matrix cocycles).
template <typename S>
struct CallableCocycle {
    std::function<Mat2<S>(long)> fn;
    Mat2<S> matrix(long j) const { return fn(j); }
    Mat2<S> matrix_transposed(long j) const { return fn(j).transpose().eval(); }
};

template <typename S>
struct OseledetsEstimate {
    FiniteTimeSpectrum<S> spectrum;      // at the largest window
    Vec2<S> cauchy_gap;                  // sup over n' in [n/2, n] of d(E_i^{(n')}, E_i^{(n)})
    Vec2<S> invariant_unstable;          // splitting from the orbit's past
    Vec2<S> invariant_stable;            // splitting from the orbit's future
    S singular_vs_invariant_1 = S(0);    // d(E_1, unstable direction)
    S singular_vs_invariant_2 = S(0);    // d(E_2, stable direction)
};

/// Singular subspaces at window n with a Cauchy diagnostic over [n/2, n],
/// plus the dynamically invariant splitting (backward-past expanding
/// direction and forward slow direction) for comparison.
template <typename S, typename Cocycle>
OseledetsEstimate<S> oseledets_estimate(const Cocycle& coc, long start, int n,
                                        S cauchy_tol = S(0)) {
    if (n < 2) throw WindowTooShort("oseledets window must be >= 2");
    StabilizedProduct<S, 2> fwd;
    std::vector<Mat2<S>> frames;
    for (int k = 0; k < n; ++k) {
        fwd.push(coc.matrix(start + k));
        if (k + 1 >= n / 2) frames.push_back(fwd.right_singular_frame());
    }
    OseledetsEstimate<S> est;
    est.spectrum = singular_spectrum(fwd);
    const Mat2<S> last = frames.back();
    est.cauchy_gap.setZero();
    for (const auto& f : frames)
        for (int i = 0; i < 2; ++i) {
            Eigen::Matrix<S, 2, 1> a = f.col(i), b = last.col(i);
            const S g = grassmann_distance<S, 2, 1>(a, b);
            if (g > est.cauchy_gap(i)) est.cauchy_gap(i) = g;
        }
    if (cauchy_tol > S(0) && est.cauchy_gap.maxCoeff() > cauchy_tol)
        throw WindowTooShort("singular subspaces not Cauchy at requested tolerance");

    // invariant splitting: expanding direction carried from the past,
    // contracting direction as the forward slow singular subspace
    StabilizedProduct<S, 2> past;
    for (int k = 1; k <= n; ++k) past.push(coc.matrix_transposed(start - k));
    est.invariant_unstable = past.right_singular_frame().col(0);
    est.invariant_stable = last.col(1);
    est.singular_vs_invariant_1 =
        grassmann_distance<S, 2, 1>(last.col(0), est.invariant_unstable);
    est.singular_vs_invariant_2 =
        grassmann_distance<S, 2, 1>(last.col(1), est.invariant_stable);
    return est;
}

}  // namespace obl
