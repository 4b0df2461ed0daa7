#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "obl/fronts.hpp"
#include "oracles.hpp"

using namespace obl;
using Vec = Vec2<double>;

namespace {
const double kFixedB = 1.0 + std::sqrt(6.0) / 2.0;        // 2x^2 - 4x - 1 = 0
const double kBounce = 5.0 + 2.0 * std::sqrt(6.0);        // per-bounce expansion
}  // namespace

TEST_CASE("free propagation of the front curvature") {
    FrontState<double> flat{{Vec(0, 0), Vec(1, 0)}, 0.0};
    CHECK(propagate_free(flat, 3.7).B == 0.0);

    FrontState<double> f{{Vec(0, 0), Vec(1, 0)}, 2.0};
    CHECK(propagate_free(f, 4.0).B == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(propagate_free(f, 4.0).base.q.isApprox(Vec(4, 0), 1e-15));

    double prev = 1.0;
    FrontState<double> g{{Vec(0, 0), Vec(1, 0)}, 1.0};
    for (double t : {1.0, 5.0, 50.0, 5000.0}) {
        const double bt = propagate_free(g, t).B;
        CHECK(bt < prev);
        prev = bt;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("dispersing reflection jump") {
    // flat front, head-on bounce off a unit disc doubles the curvature gain
    FrontState<double> flat{{Vec(1, 0), Vec(-1, 0)}, 0.0};
    auto out = reflect_front(flat, Vec(1, 0), 1.0, 1.0);
    CHECK(out.B == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out.base.v.isApprox(Vec(1, 0), 1e-15));

    // the period-2 curvature fixed point solves B = B/(1+4B) + 2
    const double mapped = kFixedB / (1.0 + 4.0 * kFixedB) + 2.0;
    CHECK(mapped == doctest::Approx(kFixedB).epsilon(1e-15));

    CHECK_THROWS_AS(reflect_front(flat, Vec(1, 0), 1.0, 1e-12), TangentHit);
}

TEST_CASE("delta factor") {
    auto e0 = expansion_delta(3.0, 0.0, 0.0);
    CHECK(e0.ell == 0.0);
    CHECK(e0.delta == 1.0);

    // planar perfect square: k = |Be| = B gives ell = B
    for (double B : {0.3, 1.0, kFixedB}) {
        auto e = expansion_delta(4.0, B, B);
        CHECK(e.ell == doctest::Approx(B).epsilon(1e-14));
        CHECK(e.delta == doctest::Approx(1.0 / (1.0 + 4.0 * B)).epsilon(1e-14));
    }
    auto efix = expansion_delta(4.0, kFixedB, kFixedB);
    CHECK(efix.delta == doctest::Approx(1.0 / kBounce).epsilon(1e-14));

    // monotone decreasing in each argument
    const double d0 = expansion_delta(4.0, 1.0, 1.2).delta;
    CHECK(expansion_delta(4.5, 1.0, 1.2).delta < d0);
    CHECK(expansion_delta(4.0, 1.1, 1.2).delta < d0);
    CHECK(expansion_delta(4.0, 1.0, 1.4).delta < d0);

    CHECK_THROWS_AS(expansion_delta(0.0, 1.0, 1.0), PreconditionError);
    CHECK_THROWS_AS(expansion_delta(4.0, 1.2, 1.0), NumericalError);  // k > |Be|
}

TEST_CASE("expansion along the period-2 orbit at its fixed curvature") {
    auto cfg = three_disc_config<double>();
    auto orb = solve_periodic_orbit(cfg, {0, 1});

    auto pf = periodic_front_fixed_point(orb);
    CHECK(pf.B_plus[0] == doctest::Approx(kFixedB).epsilon(1e-13));
    CHECK(pf.log_multiplier == doctest::Approx(2 * std::log(kBounce)).epsilon(1e-13));

    for (int m : {1, 3, 5}) {
        const double Bminus = kFixedB / (1.0 + 4.0 * kFixedB);
        auto res = expansion_along(cfg, orb, 0, m, Bminus, 0.0, 4.0);
        CHECK(res.product == doctest::Approx(std::pow(kBounce, -m)).epsilon(1e-12));
        // scalar consistency: ell equals the post-reflection curvature entry by entry
        for (const auto& en : res.entries) CHECK(en.ell == doctest::Approx(en.k).epsilon(1e-12));
    }

    // single free flight, m = 0: delta = 1/(1 + t B0)
    auto free0 = expansion_along(cfg, orb, 0, 0, 0.7, 2.5, 0.0);
    CHECK(free0.product == doctest::Approx(1.0 / (1.0 + 2.5 * 0.7)).epsilon(1e-14));

    // products lie in (0,1] and decrease with the bounce count
    double prev = 1.0;
    for (int m = 1; m <= 8; ++m) {
        auto r = expansion_midflight(cfg, orb, 0, m);
        CHECK(r.product > 0.0);
        CHECK(r.product <= 1.0);
        CHECK(r.product < prev);
        prev = r.product;
    }
}

TEST_CASE("finite differences confirm the delta product (period-2 closed form)") {
    auto cfgd = three_disc_config<long double>();
    auto orb = solve_periodic_orbit(cfgd, {0, 1});
    const long double Bp = 1.0L + sqrtl(6.0L) / 2.0L;
    const long double Bmid = Bp / (1.0L + 2.0L * Bp);
    const int m = 5;
    const long double closed = powl(5.0L + 2.0L * sqrtl(6.0L), m);

    const long double fd = fd_expansion(cfgd, orb, 0, m, 1e-7L, Bmid);
    CHECK(static_cast<double>(fabsl(fd - closed) / closed) <= 1e-8);

    // the front-product route agrees with the same closed form
    auto res = expansion_along(cfgd, orb, 0, m, Bmid, 2.0L, 2.0L);
    CHECK(static_cast<double>(fabsl(1.0L / res.product - closed) / closed) <= 1e-12);
}

TEST_CASE("finite differences vs delta products on generic words") {
    auto cfg = three_disc_config<long double>();
    for (const SymbolWord& w :
         {SymbolWord{0, 1, 2}, SymbolWord{0, 2, 1, 2}, SymbolWord{0, 1, 0, 2, 1},
          SymbolWord{1, 2, 0, 1, 0, 2}}) {
        auto orb = find_orbit_for_word(cfg, w);
        const int L = static_cast<int>(w.size());
        auto prod = expansion_midflight(cfg, orb, 0, L);
        const long double expansion = 1.0L / prod.product;
        const long double fd = fd_expansion(cfg, orb, 0, L, 1e-7L);
        CHECK(static_cast<double>(fabsl(fd - expansion) / expansion) <= 1e-7);
    }
}

TEST_CASE("fd expansion error handling") {
    auto cfg = three_disc_config<double>();
    auto orb = solve_periodic_orbit(cfg, {0, 1});
    CHECK_THROWS_AS(fd_expansion_once(cfg, orb, 0, 3, 0.0), PreconditionError);
    CHECK_THROWS_AS(fd_expansion_once(cfg, orb, 0, 9, 1.2), ItineraryChanged);
}

TEST_CASE("time reversal reciprocity of periodic multipliers") {
    auto cfg = three_disc_config<double>();
    for (SymbolWord w : {SymbolWord{0, 1, 2}, SymbolWord{0, 1, 0, 2}, SymbolWord{0, 2, 1, 0, 1, 2}}) {
        auto fwd = solve_periodic_orbit(cfg, w);
        SymbolWord rev(w.rbegin(), w.rend());
        auto bwd = solve_periodic_orbit(cfg, rev);
        const double mf = periodic_front_fixed_point(fwd).log_multiplier;
        const double mb = periodic_front_fixed_point(bwd).log_multiplier;
        // expansion(word) * delta-product(reversed word) = 1
        CHECK(std::abs(std::exp(mf - mb) - 1.0) <= 1e-9);
    }
}

TEST_CASE("reflection residual: linear coefficient on the axis instance") {
    // head-on circle-to-disc: tau = 4, ell0 = k0 = 1, coefficient 1 + tau ell0 = 5
    auto Y = ConvexObstacle<double>::disc(Vec(0, 0), 1);
    auto Z = ConvexObstacle<double>::disc(Vec(6.5, 0), 1.5);
    auto res = reflection_residual_sweep(Y, Z, 0.0, {1e-4});
    CHECK(res.tau == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(res.ell0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(1.0 + res.tau * res.ell0 == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("reflection residual is quadratic in the displacement") {
    // off-axis instance (a symmetric one has a vanishing quadratic term);
    // slow curve parametrization keeps the cubic correction negligible over
    // the swept decades
    auto Y = ConvexObstacle<double>::disc(Vec(0, 0), 1);
    auto Z = ConvexObstacle<double>::disc(Vec(6.2, 1.3), 1.2);
    const double speed = 0.05;
    std::vector<double> sweep;
    for (double s = 1e-5; s <= 1.001e-2; s *= 1.6) sweep.push_back(s);
    auto res = reflection_residual_sweep(Y, Z, 0.2, sweep, speed);
    CHECK(res.cos_phi > 0.25);

    std::vector<double> lx, ly;
    for (const auto& pt : res.points) {
        REQUIRE(pt.residual > 0);
        lx.push_back(std::log(pt.displacement));
        ly.push_back(std::log(pt.residual));
    }
    CHECK(oracles::slope(lx, ly) >= 1.95);

    // halving s quarters the residual (within 10%)
    auto pair = reflection_residual_sweep(Y, Z, 0.2, {1e-3, 5e-4}, speed);
    const double ratio = pair.points[1].residual / pair.points[0].residual;
    CHECK(ratio == doctest::Approx(0.25).epsilon(0.10));
}
