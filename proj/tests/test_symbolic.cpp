#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "obl/statistics.hpp"
#include "obl/symbolic.hpp"
#include "oracles.hpp"

using namespace obl;

TEST_CASE("word indexing round trip") {
    for (int k0 : {3, 4}) {
        for (int len : {1, 2, 4, 6}) {
            WordIndexer ix(k0, len);
            size_t expect = static_cast<size_t>(k0);
            for (int i = 1; i < len; ++i) expect *= static_cast<size_t>(k0 - 1);
            CHECK(ix.count() == expect);
            for (size_t i = 0; i < ix.count(); ++i) {
                SymbolWord w = ix.decode(i);
                CHECK(word_admissible(w, k0));
                CHECK(ix.encode(w) == i);
            }
        }
    }
}

TEST_CASE("pressure of the maximal-entropy shift") {
    auto td3 = transfer_pressure(Potential::zero(3, 1));
    CHECK(td3.pressure == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    auto td4 = transfer_pressure(Potential::zero(4, 1));
    CHECK(td4.pressure == doctest::Approx(std::log(3.0)).epsilon(1e-13));

    // dense eigenvalue oracle on the 3-state adjacency
    Eigen::Matrix3d M;
    M << 0, 1, 1, 1, 0, 1, 1, 1, 0;
    const double rho = M.eigenvalues().real().maxCoeff();
    CHECK(td3.spectral_radius == doctest::Approx(rho).epsilon(1e-12));

    // higher memory does not change the pressure of a memory-1 potential
    auto td3m3 = transfer_pressure(Potential::zero(3, 3));
    CHECK(td3m3.pressure == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // constant shift moves the pressure by exactly that constant
    auto cfg = three_disc_config<double>();
    Potential fp = induce_potential(cfg, free_path_observable, 2, "free-path");
    const double p0 = transfer_pressure(fp).pressure;
    const double p1 = transfer_pressure(fp.shifted(0.37)).pressure;
    CHECK(p1 - p0 == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("stationary chain: stochastic rows, stationarity, uniform case") {
    auto chain = GibbsChain::build(Potential::zero(3, 1));
    CHECK(chain.states() == 3);
    for (size_t s = 0; s < 3; ++s) {
        CHECK(chain.stationary(s) == doctest::Approx(1.0 / 3).epsilon(1e-12));
        double rowsum = 0;
        for (size_t t = 0; t < 3; ++t) {
            const double p = chain.transition_prob(s, t);
            rowsum += p;
            if (t != s) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
        }
        CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
    }

    // a nontrivial induced chain: rows stochastic, pi P = pi, entries positive
    auto cfg = three_disc_config<double>();
    Potential fp = induce_potential(cfg, log_expansion_observable, 2, "log-expansion").scaled(-0.5);
    auto chain2 = GibbsChain::build(fp);
    const size_t ns = chain2.states();
    std::vector<double> next(ns, 0.0);
    for (size_t s = 0; s < ns; ++s) {
        CHECK(chain2.stationary(s) > 0);
        double rowsum = 0;
        for (size_t t = 0; t < ns; ++t) {
            const double p = chain2.transition_prob(s, t);
            rowsum += p;
            next[t] += chain2.stationary(s) * p;
        }
        CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (size_t t = 0; t < ns; ++t)
        CHECK(next[t] == doctest::Approx(chain2.stationary(t)).epsilon(1e-11));
}

TEST_CASE("sampling: determinism, frequencies, admissibility, cylinders") {
    auto chain = GibbsChain::build(Potential::zero(3, 1));
    Rng r1(42), r2(42);
    const SymbolWord w1 = chain.sample_word(500, r1);
    const SymbolWord w2 = chain.sample_word(500, r2);
    CHECK(w1 == w2);

    const long n = 1000000;
    Rng rng(2024);
    SymbolWord w = chain.sample_word(static_cast<int>(n), rng);
    long counts[3] = {0, 0, 0};
    long pair01 = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        ++counts[w[i]];
        if (i > 0) {
            CHECK(w[i] != w[i - 1]);
            if (w[i - 1] == 0 && w[i] == 1) ++pair01;
        }
    }
    const double se = 4 * std::sqrt((1.0 / 3) * (2.0 / 3) / static_cast<double>(n));
    for (long c : counts)
        CHECK(std::abs(static_cast<double>(c) / static_cast<double>(n) - 1.0 / 3) <= se);

    // cylinder measure of the 2-word (0,1) vs empirical pair frequency
    const double mu01 = chain.cylinder_measure({0, 1});
    CHECK(mu01 == doctest::Approx(1.0 / 6).epsilon(1e-12));
    const double emp = static_cast<double>(pair01) / static_cast<double>(n - 1);
    const double se2 = 4 * std::sqrt(mu01 * (1 - mu01) / static_cast<double>(n - 1));
    CHECK(std::abs(emp - mu01) <= se2);
}

TEST_CASE("induced potentials and variation decay") {
    auto cfg = three_disc_config<double>();

    Potential fp = induce_potential(cfg, free_path_observable, 1, "free-path");
    WordIndexer blocks(3, 2);
    CHECK(fp.table[blocks.encode({0, 1})] == doctest::Approx(4.0).epsilon(1e-10));

    auto constant = [](const ObstacleConfiguration<double>&, const OrbitPolygon<double>&, long) {
        return 0.625;
    };
    Potential cp = induce_potential(cfg, constant, 3, "constant");
    for (double v : cp.table) CHECK(v == doctest::Approx(0.625).epsilon(1e-15));
    for (size_t j = 1; j < cp.var_profile.size(); ++j) CHECK(cp.var_profile[j] <= 1e-15);

    // geometric decay of the variation profile for the log-expansion observable
    Potential le = induce_potential(cfg, log_expansion_observable, 7, "log-expansion");
    std::vector<double> xs, ys;
    for (int j = 1; j <= 7; ++j) {
        CHECK(le.var_profile[static_cast<size_t>(j)] > 0);
        xs.push_back(j);
        ys.push_back(std::log(le.var_profile[static_cast<size_t>(j)]));
    }
    // nonincreasing with a parity plateau, strongly decaying overall
    for (int j = 2; j <= 7; ++j)
        CHECK(le.var_profile[static_cast<size_t>(j)] <=
              le.var_profile[static_cast<size_t>(j - 1)] * (1 + 1e-12));
    CHECK(le.var_profile[7] < 0.01 * le.var_profile[1]);
    const double ratio = std::exp(oracles::slope(xs, ys));
    CHECK(ratio < 0.6);
    // consistency with the shadowing rate: two flanking symbols pin the
    // geometry, so the per-symbol ratio is about sqrt(rho)
    auto chain = GibbsChain::build(Potential::zero(3, 1));
    const double rho = shadowing_rate(cfg, chain_word_source(chain), 20, 99);
    CHECK(rho < 0.3);
    CHECK(ratio < 3.0 * std::sqrt(rho));
}

TEST_CASE("finite-memory Gibbs property on cylinders") {
    auto cfg = three_disc_config<double>();
    Potential pot = induce_potential(cfg, log_expansion_observable, 2, "log-expansion").scaled(-1.0);
    auto td = transfer_pressure(pot);
    GibbsChain chain(pot, td);
    const int m = pot.memory;
    WordIndexer blocks(3, m + 1);

    // a-priori bound for the log Gibbs ratio of a memory-m chain
    double max_log_h = -1e300, min_log_h = 1e300, min_log_pi = 1e300;
    for (long s = 0; s < static_cast<long>(chain.states()); ++s) {
        max_log_h = std::max(max_log_h, std::log(td.right(s)));
        min_log_h = std::min(min_log_h, std::log(td.right(s)));
        min_log_pi = std::min(min_log_pi, std::log(chain.stationary(static_cast<size_t>(s))));
    }
    double max_abs_phi = 0;
    for (double v : pot.table) max_abs_phi = std::max(max_abs_phi, std::abs(v));
    const double apriori = -min_log_pi + m * (std::abs(td.pressure) + max_abs_phi) +
                           (max_log_h - min_log_h) + 1.0;

    for (int len = m + 1; len <= m + 5; ++len) {
        WordIndexer words(3, len);
        for (size_t i = 0; i < words.count(); ++i) {
            SymbolWord w = words.decode(i);
            double sum_phi = 0;
            for (int b = 0; b + m < len; ++b) {
                SymbolWord block(w.begin() + b, w.begin() + b + m + 1);
                sum_phi += pot.table[blocks.encode(block)];
            }
            const double log_ratio =
                std::log(chain.cylinder_measure(w)) - (sum_phi - len * td.pressure);
            CHECK(std::abs(log_ratio) <= apriori);
        }
    }
}

TEST_CASE("pressure is convex in the potential scale") {
    auto cfg = three_disc_config<double>();
    Potential le = induce_potential(cfg, log_expansion_observable, 2, "log-expansion");
    std::vector<double> ts = {-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<double> ps;
    for (double t : ts) ps.push_back(transfer_pressure(le.scaled(t)).pressure);
    for (size_t i = 1; i + 1 < ps.size(); ++i)
        CHECK(ps[i + 1] - 2 * ps[i] + ps[i - 1] >= -1e-9);
}

TEST_CASE("ergodic averages converge at the Monte-Carlo rate") {
    // memory-2 free paths genuinely vary on the equilateral configuration
    auto cfg = three_disc_config<double>();
    Potential fp = induce_potential(cfg, free_path_observable, 2, "free-path");
    auto chain = GibbsChain::build(Potential::zero(3, 2));
    const double expect = chain.expected_block_value(fp.table);
    CHECK(expect > 4.0);

    const int n = 100000;
    Rng rng(77);
    SymbolWord w = chain.sample_word(n + 2, rng);
    WordIndexer blocks(3, 3);
    // batch means to absorb the chain autocorrelation
    const int batches = 20, blen = n / batches;
    std::vector<double> bm(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        double acc = 0;
        for (int i = 0; i < blen; ++i) {
            const size_t at = static_cast<size_t>(b * blen + i);
            SymbolWord blk{w[at], w[at + 1], w[at + 2]};
            acc += fp.table[blocks.encode(blk)];
        }
        bm[static_cast<size_t>(b)] = acc / blen;
    }
    double mean = 0;
    for (double v : bm) mean += v;
    mean /= batches;
    double var = 0;
    for (double v : bm) var += (v - mean) * (v - mean);
    var /= (batches - 1);
    const double se = std::sqrt(var / batches);
    CHECK(se > 0);
    CHECK(std::abs(mean - expect) <= 5 * se);
}

TEST_CASE("large deviations of symbolic Birkhoff sums decay exponentially") {
    auto cfg = three_disc_config<double>();
    Potential fp = induce_potential(cfg, free_path_observable, 2, "free-path");
    auto chain = GibbsChain::build(Potential::zero(3, 2));
    const double mean = chain.expected_block_value(fp.table);
    WordIndexer blocks(3, 3);

    const double eps = 0.045;
    std::vector<int> grid = {4, 8, 16, 32, 48};
    const long samples = 40000;
    std::vector<TailPoint> pts;
    for (int n : grid) {
        long exceed = 0;
        for (long s = 0; s < samples; ++s) {
            Rng rng(stream_seed(31415, static_cast<std::uint64_t>(s) * 100 +
                                            static_cast<std::uint64_t>(n)));
            SymbolWord w = chain.sample_word(n + 2, rng);
            double acc = 0;
            for (int i = 0; i < n; ++i)
                acc += fp.table[blocks.encode({w[static_cast<size_t>(i)],
                                               w[static_cast<size_t>(i) + 1],
                                               w[static_cast<size_t>(i) + 2]})];
            if (std::abs(acc / n - mean) >= eps) ++exceed;
        }
        pts.push_back({n, samples, exceed, static_cast<double>(exceed) / samples, exceed < 10});
    }
    auto fit = fit_exponential_rate(pts);
    CHECK(fit.valid);
    CHECK(fit.c > 0);
    CHECK(fit.r2 >= 0.8);
}
