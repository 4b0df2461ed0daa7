// The coded subshift (k0 symbols, no immediate repeats), locally constant
// potentials, transfer-matrix pressure and exact Gibbs sampling as a
// stationary Markov chain on memory-m words.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "obl/common.hpp"
#include "obl/dynamics.hpp"
#include "obl/fronts.hpp"

namespace obl {

/// Admissible words of a fixed length over k0 symbols, densely indexed.
/// The first symbol ranges over k0 values, each later one over the k0-1
/// symbols different from its predecessor.
class WordIndexer {
  public:
    WordIndexer(int k0, int length) : k0_(k0), len_(length) {
        count_ = static_cast<size_t>(k0_);
        for (int i = 1; i < len_; ++i) count_ *= static_cast<size_t>(k0_ - 1);
    }

    int k0() const { return k0_; }
    int length() const { return len_; }
    size_t count() const { return count_; }

    size_t encode(const SymbolWord& w) const {
        size_t idx = static_cast<size_t>(w[0]);
        for (int i = 1; i < len_; ++i) {
            int r = w[static_cast<size_t>(i)];
            if (r > w[static_cast<size_t>(i - 1)]) --r;  // rank among symbols != prev
            idx = idx * static_cast<size_t>(k0_ - 1) + static_cast<size_t>(r);
        }
        return idx;
    }

    SymbolWord decode(size_t idx) const {
        SymbolWord w(static_cast<size_t>(len_));
        for (int i = len_ - 1; i >= 1; --i) {
            w[static_cast<size_t>(i)] = static_cast<int>(idx % static_cast<size_t>(k0_ - 1));
            idx /= static_cast<size_t>(k0_ - 1);
        }
        w[0] = static_cast<int>(idx);
        for (int i = 1; i < len_; ++i)
            if (w[static_cast<size_t>(i)] >= w[static_cast<size_t>(i - 1)])
                ++w[static_cast<size_t>(i)];
        return w;
    }

  private:
    int k0_;
    int len_;
    size_t count_;
};

/// Locally constant potential: one value per admissible (memory+1)-word.
struct Potential {
    int k0 = 3;
    int memory = 1;
    std::vector<double> table;  // indexed by WordIndexer(k0, memory+1)
    std::vector<double> var_profile;  // value spread grouped by central windows
    std::string provenance = "explicit";

    static Potential zero(int k0, int memory) {
        Potential p;
        p.k0 = k0;
        p.memory = memory;
        p.table.assign(WordIndexer(k0, memory + 1).count(), 0.0);
        return p;
    }

    double value(const SymbolWord& block) const {
        WordIndexer ix(k0, memory + 1);
        return table[ix.encode(block)];
    }

    Potential shifted(double c) const {
        Potential p = *this;
        for (auto& v : p.table) v += c;
        return p;
    }

    Potential scaled(double t) const {
        Potential p = *this;
        for (auto& v : p.table) v *= t;
        return p;
    }
};

struct TransferData {
    double pressure = 0;
    Eigen::VectorXd right;  // positive Perron vectors on memory-m states
    Eigen::VectorXd left;
    double spectral_radius = 0;
};

namespace detail {

struct Transition {
    size_t to;
    int symbol;
    double weight;  // exp(potential on the (m+1)-block)
};

inline std::vector<std::vector<Transition>> transition_table(const Potential& pot) {
    const int k0 = pot.k0, m = pot.memory;
    WordIndexer states(k0, m), blocks(k0, m + 1);
    std::vector<std::vector<Transition>> out(states.count());
    for (size_t s = 0; s < states.count(); ++s) {
        SymbolWord w = states.decode(s);
        for (int a = 0; a < k0; ++a) {
            if (a == w.back()) continue;
            SymbolWord block = w;
            block.push_back(a);
            SymbolWord next(block.begin() + 1, block.end());
            out[s].push_back({states.encode(next), a, std::exp(pot.table[blocks.encode(block)])});
        }
    }
    return out;
}

}  // namespace detail

/// Perron data of the weighted transfer matrix; pressure is the log of the
/// spectral radius. Power iteration to sup-norm tolerance 1e-14.
inline TransferData transfer_pressure(const Potential& pot) {
    auto trans = detail::transition_table(pot);
    const size_t ns = trans.size();
    auto iterate = [&](bool transpose) {
        Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<long>(ns));
        double rho = 0;
        for (int it = 0; it < 200000; ++it) {
            Eigen::VectorXd nv = Eigen::VectorXd::Zero(static_cast<long>(ns));
            for (size_t s = 0; s < ns; ++s)
                for (const auto& tr : trans[s]) {
                    if (transpose)
                        nv(static_cast<long>(tr.to)) += tr.weight * v(static_cast<long>(s));
                    else
                        nv(static_cast<long>(s)) += tr.weight * v(static_cast<long>(tr.to));
                }
            const double nrm = nv.sum();
            nv /= nrm;
            const double change = (nv - v).cwiseAbs().maxCoeff();
            v = nv;
            rho = nrm;
            if (change < 1e-14 && it > 3) break;
        }
        return std::make_pair(v, rho);
    };
    auto [right, rho_r] = iterate(false);
    auto [left, rho_l] = iterate(true);
    if (!(right.minCoeff() > 0) || !(left.minCoeff() > 0))
        throw NumericalError("transfer matrix is not irreducible");
    TransferData td;
    td.spectral_radius = 0.5 * (rho_r + rho_l);
    td.pressure = std::log(td.spectral_radius);
    td.right = right;
    td.left = left;
    return td;
}

/// Exact Gibbs realization of a memory-m potential: stationary Markov chain
/// on admissible m-words with P(w -> w') = M h(w') / (rho h(w)).
class GibbsChain {
  public:
    GibbsChain(const Potential& pot, const TransferData& td)
        : k0_(pot.k0), memory_(pot.memory), pressure_(td.pressure) {
        auto trans = detail::transition_table(pot);
        const size_t ns = trans.size();
        rows_.resize(ns);
        for (size_t s = 0; s < ns; ++s) {
            double acc = 0;
            for (const auto& tr : trans[s]) {
                const double p = tr.weight * td.right(static_cast<long>(tr.to)) /
                                 (td.spectral_radius * td.right(static_cast<long>(s)));
                acc += p;
                rows_[s].push_back({tr.to, tr.symbol, p, acc});
            }
            // the eigenvector identity makes acc = 1 up to Perron tolerance;
            // renormalize so each row is exactly stochastic
            for (auto& e : rows_[s]) {
                e.p /= acc;
                e.cum /= acc;
            }
        }
        stationary_.resize(ns);
        double tot = 0;
        for (size_t s = 0; s < ns; ++s) {
            stationary_[s] = td.left(static_cast<long>(s)) * td.right(static_cast<long>(s));
            tot += stationary_[s];
        }
        for (auto& v : stationary_) v /= tot;
        cum_stationary_.resize(ns);
        double acc = 0;
        for (size_t s = 0; s < ns; ++s) {
            acc += stationary_[s];
            cum_stationary_[s] = acc;
        }
    }

    static GibbsChain build(const Potential& pot) { return GibbsChain(pot, transfer_pressure(pot)); }

    int k0() const { return k0_; }
    int memory() const { return memory_; }
    double pressure() const { return pressure_; }
    size_t states() const { return rows_.size(); }
    double stationary(size_t s) const { return stationary_[s]; }

    double transition_prob(size_t s, size_t to) const {
        for (const auto& e : rows_[s])
            if (e.to == to) return e.p;
        return 0.0;
    }

    size_t sample_state(Rng& rng) const {
        const double u = rng.uniform();
        size_t lo = 0, hi = cum_stationary_.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi) / 2;
            if (cum_stationary_[mid] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    size_t step(size_t s, int& emitted, Rng& rng) const {
        const double u = rng.uniform();
        for (const auto& e : rows_[s]) {
            if (u <= e.cum) {
                emitted = e.symbol;
                return e.to;
            }
        }
        emitted = rows_[s].back().symbol;
        return rows_[s].back().to;
    }

    /// Stationary sample of length n (deterministic in the generator state).
    SymbolWord sample_word(int n, Rng& rng) const {
        if (n < 1) throw PreconditionError("word length must be >= 1");
        WordIndexer states(k0_, memory_);
        size_t s = sample_state(rng);
        SymbolWord w = states.decode(s);
        if (static_cast<int>(w.size()) >= n) {
            w.resize(static_cast<size_t>(n));
            return w;
        }
        while (static_cast<int>(w.size()) < n) {
            int a = 0;
            s = step(s, a, rng);
            w.push_back(a);
        }
        return w;
    }

    /// Exact measure of the cylinder of an admissible word (length >= memory).
    double cylinder_measure(const SymbolWord& w) const {
        WordIndexer states(k0_, memory_);
        if (static_cast<int>(w.size()) < memory_)
            throw PreconditionError("cylinder word shorter than the chain memory");
        SymbolWord head(w.begin(), w.begin() + memory_);
        size_t s = states.encode(head);
        double mu = stationary_[s];
        for (size_t i = static_cast<size_t>(memory_); i < w.size(); ++i) {
            SymbolWord nxt(w.begin() + static_cast<long>(i) - memory_ + 1,
                           w.begin() + static_cast<long>(i) + 1);
            const size_t to = states.encode(nxt);
            mu *= transition_prob(s, to);
            s = to;
        }
        return mu;
    }

    /// Expectation of a (memory+1)-block table under the chain.
    double expected_block_value(const std::vector<double>& table) const {
        WordIndexer states(k0_, memory_), blocks(k0_, memory_ + 1);
        double acc = 0;
        for (size_t s = 0; s < rows_.size(); ++s) {
            SymbolWord w = states.decode(s);
            for (const auto& e : rows_[s]) {
                SymbolWord block = w;
                block.push_back(e.symbol);
                acc += stationary_[s] * e.p * table[blocks.encode(block)];
            }
        }
        return acc;
    }

  private:
    struct Row {
        size_t to;
        int symbol;
        double p;
        double cum;
    };
    int k0_;
    int memory_;
    double pressure_;
    std::vector<std::vector<Row>> rows_;
    std::vector<double> stationary_;
    std::vector<double> cum_stationary_;
};

/// Orbit observable evaluated at one collision (the word-cell's center).
using OrbitObservable = std::function<double(const ObstacleConfiguration<double>&,
                                             const OrbitPolygon<double>&, long center)>;

/// Tabulate an orbit observable over all admissible (m+1)-words, evaluating
/// each at the central collision of the word's periodic extension. The
/// variation profile var[j] records the value spread among words sharing the
/// same j-symbol window around the center.
inline Potential induce_potential(const ObstacleConfiguration<double>& cfg,
                                  const OrbitObservable& observable, int memory,
                                  const std::string& name = "induced") {
    Potential pot;
    pot.k0 = cfg.count();
    pot.memory = memory;
    pot.provenance = name;
    WordIndexer blocks(pot.k0, memory + 1);
    pot.table.assign(blocks.count(), 0.0);
    const int center = (memory + 1) / 2;
    for (size_t i = 0; i < blocks.count(); ++i) {
        SymbolWord w = blocks.decode(i);
        OrbitPolygon<double> orb = find_orbit_for_word(cfg, w);
        pot.table[i] = observable(cfg, orb, center);
    }
    pot.var_profile.assign(static_cast<size_t>(memory) + 1, 0.0);
    for (int j = 1; j <= memory; ++j) {
        int start = center - j / 2;
        start = std::max(0, std::min(start, memory + 1 - j));
        WordIndexer wins(pot.k0, j);
        std::vector<double> lo(wins.count(), std::numeric_limits<double>::infinity());
        std::vector<double> hi(wins.count(), -std::numeric_limits<double>::infinity());
        for (size_t i = 0; i < blocks.count(); ++i) {
            SymbolWord w = blocks.decode(i);
            SymbolWord win(w.begin() + start, w.begin() + start + j);
            const size_t g = wins.encode(win);
            lo[g] = std::min(lo[g], pot.table[i]);
            hi[g] = std::max(hi[g], pot.table[i]);
        }
        double worst = 0;
        for (size_t g = 0; g < wins.count(); ++g) worst = std::max(worst, hi[g] - lo[g]);
        pot.var_profile[static_cast<size_t>(j)] = worst;
    }
    return pot;
}

/// Free path leaving the given collision of the word orbit.
inline double free_path_observable(const ObstacleConfiguration<double>&,
                                   const OrbitPolygon<double>& orb, long center) {
    return static_cast<double>(orb.d_at(center));
}

/// Per-bounce log expansion at the given collision, with the front at its
/// orbit-invariant curvature (iterated around the cycle to fixed point).
inline double log_expansion_observable(const ObstacleConfiguration<double>&,
                                       const OrbitPolygon<double>& orb, long center) {
    const auto pf = periodic_front_fixed_point(orb);
    return std::log(1.0 + static_cast<double>(orb.d_at(center)) *
                              pf.B_plus[static_cast<size_t>(orb.mod(center))]);
}

/// Gibbs-average free path (used for collision-to-flow time conversion).
inline double mean_free_path(const ObstacleConfiguration<double>& cfg, const GibbsChain& chain) {
    Potential fp = induce_potential(cfg, free_path_observable, chain.memory(), "free-path");
    return chain.expected_block_value(fp.table);
}

}  // namespace obl
