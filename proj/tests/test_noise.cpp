#include <doctest.h>

#include <cmath>
#include <vector>

#include "smsim/heat.hpp"
#include "smsim/noise.hpp"

using namespace smsim;

TEST_CASE("white noise is deterministic in the seed") {
    const GridSpec g(32);
    NoiseSample a = sample_white_noise(42, g);
    NoiseSample b = sample_white_noise(42, g);
    CHECK(a.xi.max_coef_error(b.xi) == 0.0);
    NoiseSample c = sample_white_noise(43, g);
    CHECK(c.xi.max_coef_error(a.xi) > 1e-3);
    CHECK(a.xi.conjugate_symmetry_defect() < 1e-15);
}

TEST_CASE("white noise per-mode variance matches (2pi)^-2") {
    const GridSpec g(16);
    const int trials = 10000;
    const double target = 1.0 / (two_pi * two_pi);

    std::vector<double> acc(static_cast<size_t>(g.size()), 0.0);
    for (int t = 0; t < trials; ++t) {
        NoiseSample xi = sample_white_noise(1000 + t, g);
        auto blk = xi.xi.component(0);
        for (int i = 0; i < g.size(); ++i) acc[i] += std::norm(blk[i]);
    }
    // a few individual modes at the 3-sigma level, and the tight all-mode mean
    for (auto [k1, k2] : {std::pair{0, 0}, {1, 0}, {3, 5}, {-7, 2}, {8, 8}}) {
        const double v = acc[static_cast<size_t>(g.index_of(k2)) * g.n + g.index_of(k1)] / trials;
        CHECK(std::abs(v - target) < 0.03 * target);
    }
    double mean = 0.0;
    for (double v : acc) mean += v;
    mean /= trials * g.size();
    CHECK(std::abs(mean - target) < 0.01 * target);
}

TEST_CASE("white noise holds the paper's holder regularity discretely") {
    // besov(-1.1, inf, inf) stays within a factor 2 across grids
    std::vector<double> means;
    for (int n : {64, 128, 256}) {
        const GridSpec g(n);
        const HeatCalculus calc(g);
        double acc = 0.0;
        const int seeds = 20;
        for (int s = 1; s <= seeds; ++s)
            acc += besov_value(sample_white_noise(s, g).xi, -1.1, p_inf, p_inf, calc);
        means.push_back(acc / seeds);
        CHECK(std::isfinite(means.back()));
    }
    for (double m : means) {
        CHECK(m < 2.0 * means[0]);
        CHECK(m > 0.5 * means[0]);
    }
}

TEST_CASE("mollifiers") {
    CHECK_THROWS(Mollifier(MollifierKind::Heat, 0.0));
    CHECK_THROWS(Mollifier(MollifierKind::Heat, 1.5));
    Mollifier heat(MollifierKind::Heat, 0.25);
    CHECK(heat.weight(0, 0) == 1.0);
    CHECK(heat.weight(4, 0) == doctest::Approx(std::exp(-1.0)));
    CHECK(heat.weight(-4, 0) == heat.weight(4, 0));
    Mollifier sharp(MollifierKind::SharpCutoff, 0.25);
    CHECK(sharp.weight(4, 0) == 1.0);
    CHECK(sharp.weight(5, 0) == 0.0);
}

TEST_CASE("potential from a deterministic single-mode stand-in") {
    const GridSpec g(32);
    // xi = cos(x1): phi = -cos(x1), A = (0, sin(x1)), d2A1 - d1A2 = -cos(x1)
    TorusField xi(g, 1);
    xi.at(0, 1, 0) = xi.at(0, -1, 0) = Complex(0.5, 0.0);
    TorusField a = build_potential_from(xi);
    CHECK(std::abs(a.at(1, 1, 0) - Complex(0.0, -0.5)) < 1e-14);  // sin(x1)
    CHECK(std::abs(a.at(1, -1, 0) - Complex(0.0, 0.5)) < 1e-14);
    CHECK(extract_component(a, 0).l2_norm() < 1e-14);

    TorusField curl = curl2d(a);
    TorusField minus_xi = -1.0 * xi;
    CHECK(curl.max_coef_error(minus_xi) < 1e-14);  // recorded sign: curl A = -xi
}

TEST_CASE("potential is lorentz-gauge and mollification kills it for large eps") {
    const GridSpec g(64);
    NoiseSample xi = sample_white_noise(7, g);
    Mollifier moll(MollifierKind::Heat, 1.0 / 8.0);
    TorusField a = build_potential(xi, moll);
    CHECK(divergence(a).l2_norm() < 1e-10 * a.l2_norm());
    CHECK(a.conjugate_symmetry_defect() < 1e-12);

    TorusField curl = curl2d(a);
    TorusField target = -1.0 * mollify(xi.xi, moll);
    target.component(0)[0] = Complex(0.0, 0.0);  // zero mode is lost through Delta^{-1}
    CHECK(curl.max_coef_error(target) < 1e-10);

    TorusField tiny = build_potential(xi, Mollifier(MollifierKind::Heat, 1.0));
    CHECK(tiny.l2_norm() < 1e-3 * a.l2_norm());
}

TEST_CASE("renormalization constant: exact small cases and log growth") {
    const GridSpec g(256);
    // SharpCutoff with eps = 1: only |k| <= 1 survives, c = 4/(2pi)^2 = 1/pi^2
    CHECK(renorm_constant(Mollifier(MollifierKind::SharpCutoff, 1.0), g) ==
          doctest::Approx(1.0 / (pi * pi)).epsilon(1e-12));

    // slope against ln(1/eps) matches the continuum integral oracle 1/(2pi)
    std::vector<double> eps_ladder;
    for (double e = 0.25; e >= 16.0 / g.n - 1e-12; e /= std::sqrt(2.0)) eps_ladder.push_back(e);
    std::vector<double> xs, ys;
    for (double e : eps_ladder) {
        xs.push_back(std::log(1.0 / e));
        ys.push_back(renorm_constant(Mollifier(MollifierKind::SharpCutoff, e), g));
    }
    const double slope = (ys.back() - ys.front()) / (xs.back() - xs.front());
    CHECK(std::abs(slope - 1.0 / two_pi) < 0.05 / two_pi);

    // heat vs sharp at matched eps differ by a bounded eps-independent offset
    double lo = 1e300, hi = -1e300;
    for (double e : eps_ladder) {
        const double d = renorm_constant(Mollifier(MollifierKind::Heat, e), g) -
                         renorm_constant(Mollifier(MollifierKind::SharpCutoff, e), g);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    CHECK(hi - lo < 0.02);  // drifts by far less than one dyadic step of c_eps
}

TEST_CASE("wick square: degenerate inputs and unbiasedness") {
    const GridSpec g(32);
    TorusField zero_a(g, 2);
    TorusField w0 = wick_square(zero_a, 0.0);
    CHECK(w0.l2_norm() == 0.0);

    Mollifier moll(MollifierKind::Heat, 0.25);
    const double c = renorm_constant(moll, g);
    const int seeds = 1000;
    double mean = 0.0, sq = 0.0;
    for (int s = 1; s <= seeds; ++s) {
        TorusField a = build_potential(sample_white_noise(s, g), moll);
        const double m = wick_square(a, c).mean().real();
        mean += m;
        sq += m * m;
    }
    mean /= seeds;
    const double se = std::sqrt((sq / seeds - mean * mean) / seeds);
    CHECK(std::abs(mean) < 3.0 * se + 1e-12);

    // raw square has mean about c
    double raw = 0.0;
    for (int s = 1; s <= 50; ++s)
        raw += wick_square(build_potential(sample_white_noise(s, g), moll), 0.0).mean().real();
    raw /= 50;
    CHECK(std::abs(raw - c) < 0.2 * c);
}

TEST_CASE("enhanced potential bundle") {
    const GridSpec g(64);
    const HeatCalculus calc(g);

    // zero noise: A = 0 and the square is the constant -c_eps
    NoiseSample null{0, g, TorusField(g, 1)};
    Mollifier moll(MollifierKind::Heat, 0.25);
    EnhancedPotential pot0 = enhance(null, moll, 0.9, calc);
    CHECK(pot0.A.l2_norm() == 0.0);
    CHECK(std::abs(pot0.A2.mean().real() + pot0.c_eps) < 1e-14);
    CHECK(pot0.norm_A == 0.0);
    CHECK(pot0.x_alpha_norm == pot0.norm_A + pot0.norm_A2);

    // deterministic single mode: A = (0, sin x1), A^2 = sin^2(x1) - c
    NoiseSample mono{1, g, TorusField(g, 1)};
    mono.xi.at(0, 1, 0) = mono.xi.at(0, -1, 0) = Complex(0.5, 0.0);
    Mollifier sharp(MollifierKind::SharpCutoff, 0.5);
    EnhancedPotential pot1 = enhance(mono, sharp, 0.9, calc);
    const double c = pot1.c_eps;
    // sin^2 = 1/2 - cos(2 x1)/2
    CHECK(std::abs(pot1.A2.at(0, 0, 0) - Complex(0.5 - c, 0.0)) < 1e-13);
    CHECK(std::abs(pot1.A2.at(0, 2, 0) - Complex(-0.25, 0.0)) < 1e-13);
    CHECK(divergence(pot1.A).l2_norm() < 1e-12);

    CHECK_THROWS(enhance(mono, sharp, 0.5, calc));
    CHECK_THROWS(enhance(mono, sharp, 1.0, calc));
}

TEST_CASE("x_alpha norm is grid-stable for the mollified potential") {
    std::vector<double> means;
    for (int n : {64, 128, 256}) {
        const GridSpec g(n);
        const HeatCalculus calc(g);
        double acc = 0.0;
        const int seeds = 10;
        for (int s = 1; s <= seeds; ++s)
            acc += enhance(sample_white_noise(s, g), Mollifier(MollifierKind::Heat, 0.25), 0.9,
                           calc)
                       .x_alpha_norm;
        means.push_back(acc / seeds);
    }
    for (double m : means) {
        CHECK(m < 2.0 * means[0]);
        CHECK(m > 0.5 * means[0]);
    }
}

TEST_CASE("gauge shift algebra") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    NoiseSample xi = sample_white_noise(5, g);
    EnhancedPotential pot = enhance(xi, Mollifier(MollifierKind::Heat, 0.25), 0.9, calc);

    TorusField zero(g, 1);
    EnhancedPotential same = gauge_shift(pot, zero, calc);
    CHECK(same.A.max_coef_error(pot.A) == 0.0);
    CHECK(same.A2.max_coef_error(pot.A2) == 0.0);

    // A = 0, f = cos(x1): A~ = (-sin x1, 0), A~^2 = sin^2 x1 - c
    NoiseSample null{0, g, TorusField(g, 1)};
    EnhancedPotential pot0 = enhance(null, Mollifier(MollifierKind::Heat, 0.25), 0.9, calc);
    TorusField f(g, 1);
    f.at(0, 1, 0) = f.at(0, -1, 0) = Complex(0.5, 0.0);
    EnhancedPotential shifted = gauge_shift(pot0, f, calc);
    CHECK(std::abs(shifted.A.at(0, 1, 0) - Complex(0.0, 0.5)) < 1e-14);   // -sin(x1)
    CHECK(extract_component(shifted.A, 1).l2_norm() < 1e-14);
    CHECK(std::abs(shifted.A2.at(0, 0, 0) - Complex(0.5 - pot0.c_eps, 0.0)) < 1e-13);
    CHECK(std::abs(shifted.A2.at(0, 2, 0) - Complex(-0.25, 0.0)) < 1e-13);

    // band limit enforcement
    TorusField rough(g, 1);
    rough.at(0, g.n / 4, 0) = Complex(1.0, 0.0);
    CHECK_THROWS(gauge_shift(pot, rough, calc));
}

TEST_CASE("wick square differences shrink along the epsilon ladder") {
    const GridSpec g(128);
    const HeatCalculus calc(g);
    const double alpha = 0.9;
    NoiseSample xi = sample_white_noise(1, g);
    std::vector<double> diffs;
    std::vector<double> ladder = {0.25, 0.125, 0.0625, 0.03125};
    for (size_t j = 0; j + 1 < ladder.size(); ++j) {
        Mollifier m1(MollifierKind::Heat, ladder[j]), m2(MollifierKind::Heat, ladder[j + 1]);
        TorusField w1 = wick_square(build_potential(xi, m1), renorm_constant(m1, g));
        TorusField w2 = wick_square(build_potential(xi, m2), renorm_constant(m2, g));
        diffs.push_back(besov_value(w1 - w2, 2.0 * alpha - 2.0, p_inf, p_inf, calc));
    }
    CHECK(diffs.back() < diffs.front());
}
