// Empirical estimators over the Gibbs-sampled symbolic dynamics: finite-time
// exponent tail curves, Lyapunov regularity and excursion (Pesin) tails,
// subadditivity checks, semicontinuity probes for the singular subspaces and
// exponential-rate fits.
#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <cmath>
#include <functional>
#include <vector>

#include "obl/cocycle.hpp"
#include "obl/common.hpp"
#include "obl/dynamics.hpp"
#include "obl/geometry.hpp"
#include "obl/symbolic.hpp"

namespace obl {

using quad = boost::multiprecision::cpp_bin_float_quad;

struct TailPoint {
    int n = 0;
    long samples = 0;
    long exceedances = 0;
    double p = 0;
    bool censored = false;  // fewer than 10 exceedances
};

struct ExpFit {
    double logC = 0;
    double c = 0;   // p_n ~ C exp(-c n)
    double r2 = 0;
    int n_min = 0;
    int n_max = 0;
    size_t points_used = 0;
    bool valid = false;
};

struct TailCurve {
    double epsilon = 0;
    int index = 1;  // which exponent
    std::vector<TailPoint> points;
    ExpFit fit;
};

/// Ordinary least squares of log p on n over uncensored points with p > 0,
/// restricted to the final decade of n. Needs at least 4 usable points.
inline ExpFit fit_exponential_rate(const std::vector<TailPoint>& pts) {
    std::vector<const TailPoint*> usable;
    int n_top = 0;
    for (const auto& p : pts)
        if (!p.censored && p.p > 0) n_top = std::max(n_top, p.n);
    for (const auto& p : pts)
        if (!p.censored && p.p > 0 && 10 * p.n >= n_top) usable.push_back(&p);
    if (usable.size() < 4) throw InsufficientData("need >= 4 uncensored tail points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double m = static_cast<double>(usable.size());
    for (const auto* p : usable) {
        const double x = p->n, y = std::log(p->p);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double vx = sxx - sx * sx / m;
    const double vy = syy - sy * sy / m;
    const double cxy = sxy - sx * sy / m;
    ExpFit fit;
    fit.valid = true;
    const double slope = cxy / vx;
    fit.c = -slope;
    fit.logC = (sy - slope * sx) / m;
    fit.r2 = vy > 0 ? (cxy * cxy) / (vx * vy) : 1.0;
    fit.n_min = usable.front()->n;
    fit.n_max = usable.back()->n;
    fit.points_used = usable.size();
    return fit;
}

/// Generic two-sided tail accumulator: `statistic(n, sample)` returns the
/// finite-time value whose deviation from `center` is tested against eps.
/// Deterministic under any thread count (per-sample streams, ordered sums).
struct TailPair {
    TailCurve upper;
    TailCurve lower;
};

inline TailPair build_tail_curves(const std::vector<int>& grid, long samples, double center,
                                  double eps, int index, unsigned threads,
                                  const std::function<double(int, long)>& statistic) {
    TailPair out;
    out.upper.epsilon = eps;
    out.upper.index = index;
    out.lower.epsilon = eps;
    out.lower.index = index;
    for (int n : grid) {
        std::vector<unsigned char> up(static_cast<size_t>(samples)), lo(static_cast<size_t>(samples));
        parallel_for(static_cast<size_t>(samples), threads, [&](size_t i) {
            const double v = statistic(n, static_cast<long>(i));
            up[i] = v >= center + eps ? 1 : 0;
            lo[i] = v <= center - eps ? 1 : 0;
        });
        long cu = 0, cl = 0;
        for (size_t i = 0; i < up.size(); ++i) {
            cu += up[i];
            cl += lo[i];
        }
        TailPoint pu{n, samples, cu, static_cast<double>(cu) / static_cast<double>(samples), cu < 10};
        TailPoint pl{n, samples, cl, static_cast<double>(cl) / static_cast<double>(samples), cl < 10};
        out.upper.points.push_back(pu);
        out.lower.points.push_back(pl);
    }
    try {
        out.upper.fit = fit_exponential_rate(out.upper.points);
    } catch (const InsufficientData&) {
        out.upper.fit.valid = false;
    }
    try {
        out.lower.fit = fit_exponential_rate(out.lower.points);
    } catch (const InsufficientData&) {
        out.lower.fit.valid = false;
    }
    return out;
}

/// Word source abstraction so experiments can run on the Gibbs chain or on
/// synthetic/degenerate ensembles.
using WordSource = std::function<SymbolWord(int length, Rng&)>;

inline WordSource chain_word_source(const GibbsChain& chain) {
    return [&chain](int length, Rng& rng) { return chain.sample_word(length, rng); };
}

struct LyapunovReference {
    double lambda1 = 0;  // per collision
    double lambda2 = 0;
    double cauchy_diag = 0;     // |lambda1^(n) - lambda1^(n/2)|
    double min_cos_phi = 1;     // empirical transversality margin
    double mean_free_path = 0;  // Gibbs average, for flow-time conversion
    long n = 0;
};

/// Long-run exponents of the collision-map cocycle under the sampled measure.
inline LyapunovReference reference_exponents(const ObstacleConfiguration<double>& cfg,
                                             const GibbsChain& chain, long n, std::uint64_t seed) {
    Rng rng(stream_seed(seed, 0xface));
    SymbolWord w = chain.sample_word(static_cast<int>(n) + 1, rng);
    OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
    OrbitCocycle<double> coc(orb);
    StabilizedProduct<double, 2> prod;
    double half_lambda1 = 0;
    LyapunovReference ref;
    ref.n = n;
    for (long k = 0; k < n; ++k) {
        prod.push(coc.matrix(k));
        if (k + 1 == n / 2) half_lambda1 = prod.log_top_singular() / static_cast<double>(n / 2);
    }
    const auto lt = prod.log_singular_values();
    ref.lambda1 = lt(0) / static_cast<double>(n);
    ref.lambda2 = lt(1) / static_cast<double>(n);
    ref.cauchy_diag = std::abs(ref.lambda1 - half_lambda1);
    for (size_t j = 0; j < orb.cos_phi.size(); ++j)
        ref.min_cos_phi = std::min(ref.min_cos_phi, static_cast<double>(orb.cos_phi[j]));
    ref.mean_free_path = mean_free_path(cfg, chain);
    return ref;
}

/// lambda_i^(n) of a freshly sampled orbit (statistic for the tail curves).
inline double finite_time_exponent(const ObstacleConfiguration<double>& cfg,
                                   const WordSource& words, int n, int index, std::uint64_t seed,
                                   long sample) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(sample) * 1315423911ULL +
                                   static_cast<std::uint64_t>(n)));
    SymbolWord w = words(n + 1, rng);
    OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
    OrbitCocycle<double> coc(orb);
    StabilizedProduct<double, 2> prod;
    for (int k = 0; k < n; ++k) prod.push(coc.matrix(k));
    const auto lt = prod.log_singular_values();
    return lt(index - 1) / static_cast<double>(n);
}

/// Exceedance curves for the i-th finite-time exponent around the reference
/// value (upper tail: lambda_i^(n) >= lambda_i + eps; lower symmetric).
inline TailPair exponent_tail(const ObstacleConfiguration<double>& cfg, const WordSource& words,
                              int index, double lambda_ref, double eps,
                              const std::vector<int>& grid, long samples, std::uint64_t seed,
                              unsigned threads) {
    return build_tail_curves(grid, samples, lambda_ref, eps, index, threads,
                             [&](int n, long sample) {
                                 return finite_time_exponent(cfg, words, n, index, seed, sample);
                             });
}

/// Same data path for the exterior power statistic log|Λ^i A^n|/n centered
/// at the sum of the top i exponents.
inline TailPair exterior_tail(const ObstacleConfiguration<double>& cfg, const WordSource& words,
                              int index, double chi_sum, double eps, const std::vector<int>& grid,
                              long samples, std::uint64_t seed, unsigned threads) {
    auto statistic = [&](int n, long sample) {
        Rng rng(stream_seed(seed, static_cast<std::uint64_t>(sample) * 2654435761ULL +
                                       static_cast<std::uint64_t>(n)));
        SymbolWord w = words(n + 1, rng);
        OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
        OrbitCocycle<double> coc(orb);
        StabilizedProduct<double, 2> prod;
        for (int k = 0; k < n; ++k) prod.push(coc.matrix(k));
        return exterior_log_norm(prod, index) / static_cast<double>(n);
    };
    return build_tail_curves(grid, samples, chi_sum, eps, index, threads, statistic);
}

// ---------------------------------------------------------------------------
// Lyapunov regularity and excursion tails.

struct PesinParameters {
    double eps = 0.1;      // regularity slack
    double log_cp = 0;     // log of the regularity cut defining the set P
    double delta = 0.2;    // excursion fraction
    int window = 15;       // truncation depth N of the regularity estimator
};

struct RegularityEstimate {
    double log_R = 0;          // log R_eps^(N) >= 0
    int arg_n = 0;             // |n| achieving the max
    int arg_index = 1;         // which exponent
};

/// Truncated regularity value at collision `center` of a word orbit: the
/// worst two-sided growth defect against the reference exponents with slack
/// eps per step. Growth is measured through the log singular values of the
/// window products (the extremal growth over each estimated subspace); a
/// fixed stable vector cannot be followed through the forward product in
/// finite precision, so the per-window singular system is the measurable
/// form of the defect.
template <typename Cocycle>
RegularityEstimate regularity_at(const Cocycle& coc, long center, int window, double eps,
                                 double lambda1, double lambda2) {
    const double lam[2] = {lambda1, lambda2};
    RegularityEstimate est;
    StabilizedProduct<double, 2> fwd, bwd;
    auto update = [&](double defect, int n, int i) {
        if (defect > est.log_R) {
            est.log_R = defect;
            est.arg_n = n;
            est.arg_index = i + 1;
        }
    };
    for (int nstep = 1; nstep <= window; ++nstep) {
        fwd.push(coc.matrix(center + nstep - 1));
        bwd.push(coc.matrix_transposed(center - nstep));
        const auto lf = fwd.log_singular_values();
        const auto lb = bwd.log_singular_values();
        const double n = nstep;
        for (int i = 0; i < 2; ++i) {
            // forward growth over the i-th direction, and backward growth
            // |A^{-n} v| = exp(-lb(i)) for v in the i-th direction (the
            // backward product expands it by exactly its i-th singular value)
            const double Lf = lf(i);
            const double Lb = -lb(i);
            update(std::abs(Lf - n * lam[i]) - n * eps, nstep, i);
            update(std::abs(Lb + n * lam[i]) - n * eps, nstep, i);
        }
    }
    return est;
}

/// log R along `count` consecutive collisions starting at `first`.
template <typename Cocycle>
std::vector<double> regularity_along(const Cocycle& coc, long first, int count, int window,
                                     double eps, double lambda1, double lambda2) {
    std::vector<double> out(static_cast<size_t>(count));
    for (int m = 0; m < count; ++m)
        out[static_cast<size_t>(m)] =
            regularity_at(coc, first + m, window, eps, lambda1, lambda2).log_R;
    return out;
}

/// Calibrate the regularity cut: the q-quantile of log R over sampled points.
inline double calibrate_regularity_cut(const ObstacleConfiguration<double>& cfg,
                                       const WordSource& words, int window, double eps,
                                       double lambda1, double lambda2, long samples,
                                       double quantile, std::uint64_t seed, unsigned threads) {
    std::vector<double> vals(static_cast<size_t>(samples));
    parallel_for(static_cast<size_t>(samples), threads, [&](size_t i) {
        Rng rng(stream_seed(seed, 0xca11b000ULL + i));
        SymbolWord w = words(2 * window + 1, rng);
        OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
        OrbitCocycle<double> coc(orb);
        vals[i] = regularity_at(coc, window, window, eps, lambda1, lambda2).log_R;
    });
    std::sort(vals.begin(), vals.end());
    size_t rank = static_cast<size_t>(quantile * static_cast<double>(vals.size() - 1) + 0.5);
    if (rank >= vals.size()) rank = vals.size() - 1;
    return vals[rank];
}

/// Excursion tail: frequency of orbits spending at least delta*n of their
/// first n collisions outside the regularity set {log R <= log_cp}.
inline TailCurve pesin_tail(const ObstacleConfiguration<double>& cfg, const WordSource& words,
                            const PesinParameters& par, double lambda1, double lambda2,
                            const std::vector<int>& grid, long samples, std::uint64_t seed,
                            unsigned threads) {
    TailCurve curve;
    curve.epsilon = par.eps;
    curve.index = 0;
    for (int n : grid) {
        std::vector<unsigned char> flag(static_cast<size_t>(samples));
        parallel_for(static_cast<size_t>(samples), threads, [&](size_t i) {
            Rng rng(stream_seed(seed, 0x9e51ULL * static_cast<std::uint64_t>(n) + i));
            SymbolWord w = words(n + 2 * par.window + 1, rng);
            OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
            OrbitCocycle<double> coc(orb);
            int excursions = 0;
            for (int m = 0; m < n; ++m) {
                const double lr =
                    regularity_at(coc, par.window + m, par.window, par.eps, lambda1, lambda2)
                        .log_R;
                if (lr > par.log_cp) ++excursions;
            }
            flag[i] = static_cast<double>(excursions) >= par.delta * static_cast<double>(n) ? 1 : 0;
        });
        long cnt = 0;
        for (auto f : flag) cnt += f;
        curve.points.push_back(
            {n, samples, cnt, static_cast<double>(cnt) / static_cast<double>(samples), cnt < 10});
    }
    try {
        curve.fit = fit_exponential_rate(curve.points);
    } catch (const InsufficientData&) {
        curve.fit.valid = false;
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Subadditivity of restricted log norms.

struct SubadditivityReport {
    double max_violation_invariant = 0;  // 1-dim invariant direction, exact transport
    double max_violation_full = 0;       // full-space operator norms
};

/// gamma_{n+s}(x) <= gamma_n(f^s x) + gamma_s(x) over the (n, s) grid, with
/// the 1-dimensional subspace transported invariantly along the orbit, and
/// with full-space operator norms.
template <typename Cocycle>
SubadditivityReport subadditivity_check(const Cocycle& coc, int grid_max) {
    SubadditivityReport rep;
    const int total = 2 * grid_max;
    // invariant expanding direction at index 0 from the orbit's past
    StabilizedProduct<double, 2> past;
    for (int k = 1; k <= 60; ++k) past.push(coc.matrix_transposed(-k));
    Eigen::Vector2d e = past.right_singular_frame().col(0);
    // transported units and per-step log growth
    std::vector<double> g(static_cast<size_t>(total));
    std::vector<Eigen::Vector2d> unit(static_cast<size_t>(total) + 1);
    unit[0] = e;
    for (int j = 0; j < total; ++j) {
        Eigen::Vector2d w = coc.matrix(j) * unit[static_cast<size_t>(j)];
        g[static_cast<size_t>(j)] = std::log(w.norm());
        unit[static_cast<size_t>(j) + 1] = w.normalized();
    }
    auto gamma1 = [&](int start, int len) {
        double acc = 0;
        for (int j = start; j < start + len; ++j) acc += g[static_cast<size_t>(j)];
        return acc;
    };
    for (int n = 1; n <= grid_max; ++n)
        for (int s = 1; s <= grid_max; ++s) {
            const double v1 = gamma1(0, n + s) - (gamma1(s, n) + gamma1(0, s));
            rep.max_violation_invariant = std::max(rep.max_violation_invariant, v1);
        }
    // full-space gamma = log t_1 over windows [s, s+n); gamma_{n+s}(x) itself
    // needs the run out to 2*grid_max
    std::vector<double> from0(static_cast<size_t>(total) + 1, 0.0);
    {
        StabilizedProduct<double, 2> p;
        for (int n = 1; n <= total; ++n) {
            p.push(coc.matrix(n - 1));
            from0[static_cast<size_t>(n)] = p.log_top_singular();
        }
    }
    for (int s = 1; s <= grid_max; ++s) {
        StabilizedProduct<double, 2> p;
        for (int n = 1; n <= grid_max; ++n) {
            p.push(coc.matrix(s + n - 1));
            const double lhs = from0[static_cast<size_t>(n + s)];
            const double rhs = p.log_top_singular() + from0[static_cast<size_t>(s)];
            rep.max_violation_full = std::max(rep.max_violation_full, lhs - rhs);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Semicontinuity probe (quad precision: cylinder-deep orbit differences fall
// far below double resolution).

struct SemicontinuityPoint {
    int depth = 0;
    double median_gap = 0;
    double max_gap = 0;
    double median_distance = 0;  // phase distance of the probe points to x
};

struct SemicontinuityCurve {
    std::vector<SemicontinuityPoint> points;
    double slope_log_gap_vs_depth = 0;  // should be < 0
    double alpha = 0;                   // from log gap vs log distance
    double r2 = 0;
};

namespace detail {

template <typename S, typename Cocycle>
Eigen::Matrix<S, 2, 1> singular_direction(const Cocycle& coc, long start, int window, int index) {
    StabilizedProduct<S, 2> p;
    for (int k = 0; k < window; ++k) p.push(coc.matrix(start + k));
    return p.right_singular_frame().col(index - 1);
}

}  // namespace detail

/// For each cylinder depth n, sample words agreeing with the base word on the
/// central 2n symbols, reconstruct their orbits and measure the gap between
/// the probe's i-th singular direction and the base one. Median gaps should
/// decay in n; the log gap vs log phase-distance slope estimates the Holder
/// exponent of the subspace field.
inline SemicontinuityCurve semicontinuity_probe(const ObstacleConfiguration<double>& cfg_d,
                                                const WordSource& words, int index,
                                                const std::vector<int>& depths, int samples,
                                                int window, std::uint64_t seed, unsigned threads) {
    using Q = quad;
    const int depth_max = *std::max_element(depths.begin(), depths.end());
    const int L = 2 * depth_max + 2 * window + 8;  // base word length
    const long center = L / 2;
    ObstacleConfiguration<Q> cfg = cfg_d.cast<Q>();

    Rng base_rng(stream_seed(seed, 0xbafeULL));
    SymbolWord base = words(L, base_rng);
    OrbitSolveOptions<Q> qopts;
    qopts.grad_tol_factor = Q(1e-30);
    OrbitPolygon<Q> base_orb = find_orbit_for_word(cfg, base, qopts);
    OrbitCocycle<Q> base_coc(base_orb);
    const Eigen::Matrix<Q, 2, 1> base_dir =
        detail::singular_direction<Q>(base_coc, center, window, index);
    const Eigen::Matrix<Q, 2, 1> base_q = base_orb.q_at(center);
    const Eigen::Matrix<Q, 2, 1> base_v = base_orb.dir_at(center);

    SemicontinuityCurve curve;
    std::vector<std::vector<double>> gaps(depths.size());
    std::vector<std::vector<double>> dists(depths.size());
    for (auto& v : gaps) v.resize(static_cast<size_t>(samples));
    for (auto& v : dists) v.resize(static_cast<size_t>(samples));

    std::vector<std::pair<size_t, int>> tasks;
    for (size_t di = 0; di < depths.size(); ++di)
        for (int s = 0; s < samples; ++s) tasks.emplace_back(di, s);

    parallel_for(tasks.size(), threads, [&](size_t ti) {
        const auto [di, s] = tasks[ti];
        const int n = depths[di];
        Rng rng(stream_seed(seed, 0x5eedULL + 7919ULL * static_cast<std::uint64_t>(n) +
                                      static_cast<std::uint64_t>(s)));
        // fresh word, central block overwritten by the base block
        SymbolWord w;
        for (int attempt = 0; attempt < 200; ++attempt) {
            w = words(L, rng);
            std::copy(base.begin() + (center - n), base.begin() + (center + n),
                      w.begin() + (center - n));
            if (word_admissible(w, cfg_d.count())) break;
            w.clear();
        }
        if (w.empty()) throw NumericalError("failed to sample an admissible probe word");
        OrbitPolygon<Q> orb = find_orbit_for_word(cfg, w, qopts);
        OrbitCocycle<Q> coc(orb);
        Eigen::Matrix<Q, 2, 1> dir = detail::singular_direction<Q>(coc, center, window, index);
        const Q gap = vector_subspace_gap<Q, 2, 1>(dir, base_dir);
        const Q dq = (orb.q_at(center) - base_q).norm();
        const Q dv = (orb.dir_at(center) - base_v).norm();
        gaps[di][static_cast<size_t>(s)] = static_cast<double>(gap);
        dists[di][static_cast<size_t>(s)] = static_cast<double>(dq + dv);
    });

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    double ax = 0, ay = 0, axx = 0, axy = 0;
    for (size_t di = 0; di < depths.size(); ++di) {
        SemicontinuityPoint pt;
        pt.depth = depths[di];
        pt.median_gap = median(gaps[di]);
        pt.max_gap = *std::max_element(gaps[di].begin(), gaps[di].end());
        pt.median_distance = median(dists[di]);
        curve.points.push_back(pt);
        const double x = pt.depth, y = std::log(pt.median_gap);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        const double lx = std::log(pt.median_distance);
        ax += lx;
        ay += y;
        axx += lx * lx;
        axy += lx * y;
    }
    const double m = static_cast<double>(depths.size());
    const double vx = sxx - sx * sx / m, cxy = sxy - sx * sy / m, vy = syy - sy * sy / m;
    curve.slope_log_gap_vs_depth = cxy / vx;
    curve.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    const double avx = axx - ax * ax / m, acxy = axy - ax * ay / m;
    curve.alpha = acxy / avx;  // gap ~ distance^alpha
    return curve;
}

// ---------------------------------------------------------------------------
// Growth-rate comparison for words sharing a long future block.

struct GrowthComparison {
    double median_difference = 0;
    double max_difference = 0;
};

/// Pairs of orbits sharing the future block [0, T]; compares the averaged
/// log growth of the estimated i-th direction over T collisions.
inline GrowthComparison stable_growth_comparison(const ObstacleConfiguration<double>& cfg,
                                                 const WordSource& words, int index, int T,
                                                 int pairs, std::uint64_t seed, unsigned threads) {
    const int past = 16;
    std::vector<double> diffs(static_cast<size_t>(pairs));
    parallel_for(static_cast<size_t>(pairs), threads, [&](size_t i) {
        Rng rng(stream_seed(seed, 0xf007ULL + i));
        SymbolWord future = words(T + 2, rng);
        auto make_word = [&](Rng& r) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                SymbolWord w = words(past + T + 2, r);
                std::copy(future.begin(), future.end(), w.begin() + past);
                if (word_admissible(w, cfg.count())) return w;
            }
            throw NumericalError("failed to build a shared-future word");
        };
        SymbolWord wa = make_word(rng), wb = make_word(rng);
        auto growth = [&](const SymbolWord& w) {
            OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
            OrbitCocycle<double> coc(orb);
            StabilizedProduct<double, 2> p;
            for (int k = 0; k < T; ++k) p.push(coc.matrix(past + k));
            // extremal growth over the estimated direction = the singular value
            return p.log_singular_values()(index - 1) / static_cast<double>(T);
        };
        diffs[i] = std::abs(growth(wa) - growth(wb));
    });
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    GrowthComparison out;
    out.median_difference = sorted[sorted.size() / 2];
    out.max_difference = sorted.back();
    return out;
}

/// Shadowing contraction rate: reflection-point distances of two orbits
/// sharing their first `shared` symbols, fitted log-linearly over the first
/// half of the shared block.
inline double shadowing_rate(const ObstacleConfiguration<double>& cfg, const WordSource& words,
                             int shared, std::uint64_t seed) {
    Rng rng(stream_seed(seed, 0x5add0e5ULL));
    SymbolWord w1 = words(shared + 12, rng);
    SymbolWord w2;
    for (int attempt = 0; attempt < 200; ++attempt) {
        w2 = words(shared + 12, rng);
        std::copy(w1.begin(), w1.begin() + shared, w2.begin());
        if (word_admissible(w2, cfg.count()) && w2 != w1) break;
    }
    OrbitPolygon<double> o1 = find_orbit_for_word(cfg, w1);
    OrbitPolygon<double> o2 = find_orbit_for_word(cfg, w2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int j = 0; j <= shared / 2; ++j) {
        const double d = static_cast<double>((o1.q_at(j) - o2.q_at(j)).norm());
        if (d <= 1e-14) continue;
        const double x = j, y = std::log(d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 4) throw InsufficientData("not enough shadowing points");
    const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
    return std::exp(slope);  // rho < 1
}

}  // namespace obl
