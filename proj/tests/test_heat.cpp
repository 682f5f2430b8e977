#include <doctest.h>

#include <cmath>
#include <vector>

#include "smsim/heat.hpp"
#include "smsim/noise.hpp"

using namespace smsim;

namespace {

TorusField harmonic(const GridSpec& g, int k1, int k2) {
    TorusField f(g, 1);
    f.at(0, k1, k2) = Complex(1.0, 0.0);
    return f;
}

TorusField cosine(const GridSpec& g, int k1, int k2) {
    TorusField f(g, 1);
    f.at(0, k1, k2) = Complex(0.5, 0.0);
    f.at(0, -k1, -k2) = Complex(0.5, 0.0);
    f.real_valued = true;
    return f;
}

TorusField band_noise(const GridSpec& g, uint64_t salt, int band) {
    TorusField f(g, 1);
    for (int k2 = -band; k2 <= band; ++k2)
        for (int k1 = -band; k1 <= band; ++k1) {
            if (std::pair(k2, k1) < std::pair(-k2, -k1)) continue;
            const double re = gaussian_of_mode(salt, k1, k2, 4);
            const double im = (k1 == 0 && k2 == 0) ? 0.0 : gaussian_of_mode(salt, k1, k2, 5);
            f.at(0, k1, k2) = Complex(re, im);
            f.at(0, -k1, -k2) = Complex(re, -im);
        }
    f.real_valued = true;
    return f;
}

// independent oracle for the single-harmonic paraproduct coefficient
// gamma = int_tmin^1 q(t,ko) p(t,kf) q(t,kg) dt/t by composite Simpson in log t
double simpson_paraproduct_weight(double ko, double kf, double kg, int b, double t_min) {
    auto qm = [b](double t, double kap) {
        const double x = t * kap;
        double fact = 1.0;
        for (int j = 2; j < b; ++j) fact *= j;
        return x > 700.0 ? 0.0 : std::pow(x, b) * std::exp(-x) / fact;
    };
    auto pm = [b](double t, double kap) {
        const double x = t * kap;
        if (x > 700.0) return 0.0;
        double poly = 1.0, term = 1.0;
        for (int j = 1; j < b; ++j) {
            term *= x / j;
            poly += term;
        }
        return poly * std::exp(-x);
    };
    const int pieces = 40000;  // even
    const double ua = std::log(t_min), ub = 0.0, h = (ub - ua) / pieces;
    double acc = 0.0;
    for (int i = 0; i <= pieces; ++i) {
        const double t = std::exp(ua + h * i);
        const double v = qm(t, ko) * pm(t, kf) * qm(t, kg);
        acc += v * (i == 0 || i == pieces ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("q_apply and p_apply examples") {
    const GridSpec g(32);
    const HeatCalculus calc(g);

    TorusField one(g, 1);
    one.at(0, 0, 0) = Complex(1.0, 0.0);
    CHECK(q_apply(one, 0.3, 2).l2_norm() == 0.0);
    CHECK(q_apply(one, 1.0, 4).l2_norm() == 0.0);

    TorusField c = cosine(g, 1, 0);
    TorusField q1 = q_apply(c, 1.0, 1);
    CHECK(std::abs(q1.at(0, 1, 0) - Complex(0.5 * std::exp(-1.0), 0.0)) < 1e-14);

    CHECK(p_apply(c, 0.0, 2).max_coef_error(c) == 0.0);
    TorusField p2 = p_apply(c, 1.0, 2);
    CHECK(std::abs(p2.at(0, 1, 0) - Complex(0.5 * 2.0 * std::exp(-1.0), 0.0)) < 1e-14);

    CHECK_THROWS(q_apply(c, 0.0, 2));
    CHECK_THROWS(q_apply(c, 1.5, 2));
    CHECK_THROWS(p_apply(c, -0.1, 2));
}

TEST_CASE("q_t energy peaks near t = b/kappa") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField f = harmonic(g, 4, 0);  // kappa = 16
    double best_t = 0.0, best = -1.0;
    for (const QuadNode& nd : calc.nodes) {
        const double nrm = q_apply(f, nd.t, calc.b).l2_norm();
        if (nrm > best) {
            best = nrm;
            best_t = nd.t;
        }
    }
    // analytic argmax of (16 t)^b e^{-16 t} is t = b/16
    const double t_star = calc.b / 16.0;
    CHECK(std::abs(std::log(best_t / t_star)) < 0.25);  // within node spacing
}

TEST_CASE("quadrature calibration: int Q_t dt/t + P_1 = id") {
    for (int n : {32, 64, 256}) {
        const GridSpec g(n);
        const HeatCalculus calc(g);
        TorusField f = band_noise(g, 77, n / 4);
        TorusField acc = p_apply(f, 1.0, calc.b);
        for (const QuadNode& nd : calc.nodes) {
            TorusField qf = q_apply(f, nd.t, calc.b);
            qf *= nd.w;
            acc += qf;
        }
        CHECK(l2_distance(acc, f) / f.l2_norm() < 1e-8);
    }
}

TEST_CASE("product decomposition with a constant factor") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField one(g, 1);
    one.at(0, 0, 0) = Complex(1.0, 0.0);
    TorusField f = band_noise(g, 5, 6);

    BonyParts parts = bony_decompose(one, f, calc);
    TorusField sum = parts.para_fg + parts.para_gf + parts.resonant + parts.remainder;
    CHECK(l2_distance(sum, f) / f.l2_norm() < 1e-8);
    CHECK(parts.para_gf.l2_norm() < 1e-12);  // P_f 1 vanishes: Q_t kills constants
    CHECK(parts.resonant.l2_norm() < 1e-12);

    // f = g = 1: remainder carries the boundary term, everything else vanishes
    BonyParts ones = bony_decompose(one, one, calc);
    CHECK(std::abs(ones.remainder.at(0, 0, 0) - Complex(1.0, 0.0)) < 1e-12);
    CHECK(ones.para_fg.l2_norm() < 1e-13);
    CHECK(ones.para_gf.l2_norm() < 1e-13);
    CHECK(ones.resonant.l2_norm() < 1e-13);
}

TEST_CASE("low-frequency f against high-frequency g: paraproduct dominates") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    TorusField f = cosine(g, 1, 0);
    TorusField h = cosine(g, 0, 8);
    TorusField fg = pointwise_product(f, h);
    TorusField p_fg = paraproduct(f, h, calc);
    TorusField p_gf = paraproduct(h, f, calc);
    // the low-high channel approximates the product, the symmetric one does not
    const double err_fg = l2_distance(p_fg, fg) / fg.l2_norm();
    const double err_gf = l2_distance(p_gf, fg) / fg.l2_norm();
    CHECK(err_fg < 0.8);
    CHECK(err_fg < 0.7 * err_gf);
    CHECK(p_gf.l2_norm() < 1e-2 * p_fg.l2_norm());
}

TEST_CASE("bilinearity and resonant symmetry") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField f = band_noise(g, 21, 6), h = band_noise(g, 22, 6);

    TorusField p2 = paraproduct(2.0 * f, h, calc);
    TorusField p1 = paraproduct(f, h, calc);
    CHECK(l2_distance(p2, 2.0 * p1) < 1e-12 * p2.l2_norm());

    TorusField rfg = resonant(f, h, calc);
    TorusField rgf = resonant(h, f, calc);
    CHECK(rfg.max_coef_error(rgf) == 0.0);  // symmetric by construction
}

TEST_CASE("resonant mean recovers the mean of the square") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField f = cosine(g, 1, 0);
    BonyParts parts = bony_decompose(f, f, calc);
    const Complex mean = parts.para_fg.mean() + parts.para_gf.mean() + parts.resonant.mean() +
                         parts.remainder.mean();
    CHECK(std::abs(mean - Complex(0.5, 0.0)) < 1e-8);  // mean of cos^2 = 1/2
}

TEST_CASE("bony reconstruction on band-limited pairs") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    double worst = 0.0;
    for (uint64_t s = 1; s <= 3; ++s) {
        TorusField f = band_noise(g, 100 + s, 16);
        TorusField h = band_noise(g, 200 + s, 16);
        BonyParts parts = bony_decompose(f, h, calc);
        TorusField sum = parts.para_fg + parts.para_gf + parts.resonant + parts.remainder;
        TorusField fg = pointwise_product(f, h);
        worst = std::max(worst, linf_norm(fg - sum) / (linf_norm(f) * linf_norm(h)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("reconstruction error shrinks under quadrature refinement") {
    const GridSpec g(32);
    TorusField f = cosine(g, 1, 0);          // smooth
    TorusField h = band_noise(g, 300, 8);    // rough
    double err[2];
    int idx = 0;
    for (int nodes : {24, 96}) {
        const HeatCalculus calc(g, 2, nodes);
        BonyParts parts = bony_decompose(f, h, calc);
        TorusField sum = parts.para_fg + parts.para_gf + parts.resonant + parts.remainder;
        err[idx++] = linf_norm(pointwise_product(f, h) - sum);
    }
    CHECK(err[1] < err[0]);
    CHECK(err[1] < 1e-9);
}

TEST_CASE("intertwined paraproduct: single-harmonic oracle and identity") {
    const GridSpec g(32);
    const HeatCalculus calc(g);

    // single harmonics: P_f g sits at k_f + k_g with an explicit dt/t weight
    const int kf1 = 1, kf2 = 0, kg1 = 3, kg2 = 2;
    TorusField f = harmonic(g, kf1, kf2), h = harmonic(g, kg1, kg2);
    const double ko = (kf1 + kg1) * (kf1 + kg1) + (kf2 + kg2) * (kf2 + kg2);
    const double kf = kf1 * kf1 + kf2 * kf2, kg = kg1 * kg1 + kg2 * kg2;
    const double gamma_oracle = simpson_paraproduct_weight(ko, kf, kg, calc.b, calc.t_min);

    TorusField p = paraproduct(f, h, calc);
    CHECK(std::abs(p.at(0, kf1 + kg1, kf2 + kg2) - Complex(gamma_oracle, 0.0)) <
          1e-9 * std::abs(gamma_oracle));

    TorusField pt = intertwined_paraproduct(f, h, calc);
    const double expected = gamma_oracle * kg / ko;
    CHECK(std::abs(pt.at(0, kf1 + kg1, kf2 + kg2) - Complex(expected, 0.0)) <
          1e-9 * std::abs(expected));

    // zero cases
    TorusField zero(g, 1);
    CHECK(intertwined_paraproduct(zero, h, calc).l2_norm() == 0.0);
}

TEST_CASE("intertwining identity Delta PT = P Delta on nonzero modes") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    double worst = 0.0;
    for (uint64_t s = 1; s <= 3; ++s) {
        TorusField f = band_noise(g, 400 + s, 16);
        TorusField h = band_noise(g, 500 + s, 16);
        TorusField lhs = laplacian(intertwined_paraproduct(f, h, calc));
        TorusField rhs = paraproduct(f, laplacian(h), calc);
        rhs.component(0)[0] = lhs.component(0)[0];  // identity claimed off the zero mode
        worst = std::max(worst, l2_distance(lhs, rhs) / rhs.l2_norm());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("truncated paraproduct: recovery, smallness, additivity") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField f = band_noise(g, 600, 8);
    TorusField h = band_noise(g, 601, 8);

    TorusField full = intertwined_paraproduct(f, h, calc);
    TorusField at1 = truncated_paraproduct(f, h, 1.0, calc);
    CHECK(l2_distance(full, at1) < 1e-10 * full.l2_norm());

    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.5, 0.1, 0.02, 0.004, 0.0008}) {
        const double nrm = truncated_paraproduct(f, h, s, calc).l2_norm();
        CHECK(nrm <= prev * (1.0 + 1e-9));
        prev = nrm;
    }
    CHECK(prev < 0.05 * full.l2_norm());  // s near the node floor: almost nothing left

    // quadrature additivity is plain algebra
    TorusField s1 = truncated_paraproduct(f, h, 0.01, calc);
    TorusField s2 = truncated_paraproduct(f, h, 0.3, calc);
    TorusField recomposed = s1 + (s2 - s1);
    CHECK(recomposed.max_coef_error(s2) < 1e-14);

    CHECK_THROWS(truncated_paraproduct(f, h, 1e-12, calc));
}

TEST_CASE("truncated paraproduct scaling exponent") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    const double alpha = 0.9;
    // f in H^0, g of regularity C^{2 alpha} (an X1-type field)
    NoiseSample xi = sample_white_noise(31, g);
    EnhancedPotential pot = enhance(xi, Mollifier(MollifierKind::Heat, 0.25), alpha, calc);
    TorusField gfield = inverse_laplacian(pot.A2);
    TorusField f = band_noise(g, 700, 16);

    std::vector<double> ls, ln;
    for (double s : {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125}) {
        ls.push_back(std::log(s));
        ln.push_back(std::log(truncated_paraproduct(f, gfield, s, calc).l2_norm()));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < ls.size(); ++i) {
        sx += ls[i];
        sy += ln[i];
        sxx += ls[i] * ls[i];
        sxy += ls[i] * ln[i];
    }
    const double m = static_cast<double>(ls.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope >= (2.0 * alpha) / 4.0 - 0.1);
}

TEST_CASE("corrector: zero input, trilinearity, grid stability") {
    const HeatCalculus calc32{GridSpec(32)};
    TorusField zero(GridSpec(32), 1);
    TorusField b = band_noise(GridSpec(32), 801, 6);
    TorusField c = band_noise(GridSpec(32), 802, 6);
    CHECK(std::abs(corrector_f(zero, b, c, calc32)) == 0.0);

    TorusField a = band_noise(GridSpec(32), 803, 6);
    const Complex one = corrector_f(a, b, c, calc32);
    const Complex two = corrector_f(2.0 * a, b, c, calc32);
    CHECK(std::abs(two - 2.0 * one) < 1e-12 * std::abs(two));

    // |F| against the product of norms, stable across grids for mollified inputs
    const double alpha = 0.9, eta = 0.25;
    std::vector<double> ratios;
    for (int n : {32, 64, 128}) {
        const GridSpec g(n);
        const HeatCalculus calc(g);
        NoiseSample xi = sample_white_noise(99, g);
        TorusField am = mollify(xi.xi, Mollifier(MollifierKind::Heat, 0.25));
        TorusField pot = build_potential_from(am);
        TorusField bb = extract_component(pot, 0);
        TorusField cc = extract_component(pot, 1);
        TorusField aa = inverse_laplacian(mollify(xi.xi, Mollifier(MollifierKind::Heat, 0.5)));
        const double denom = h_norm(aa, 1.0 - eta, calc) *
                             besov_value(bb, alpha - 1.0, p_inf, p_inf, calc) *
                             besov_value(cc, alpha - 1.0, p_inf, p_inf, calc);
        ratios.push_back(std::abs(corrector_f(aa, bb, cc, calc)) / denom);
    }
    const double lo = std::min({ratios[0], ratios[1], ratios[2]});
    const double hi = std::max({ratios[0], ratios[1], ratios[2]});
    CHECK(hi < 1e3);           // bounded constant
    CHECK(hi / std::max(lo, 1e-12) < 100.0);  // no blow-up trend across grids
}

TEST_CASE("commutator: constant weight, divergence-free input, bilinearity") {
    const GridSpec g(32);
    const HeatCalculus calc(g);

    TorusField cst(g, 1);
    cst.at(0, 0, 0) = Complex(0.7, 0.0);
    NoiseSample xi = sample_white_noise(41, g);
    TorusField v = make_vector_field(band_noise(g, 811, 6), band_noise(g, 812, 6));
    CHECK(commutator_b(cst, v, calc).l2_norm() < 1e-6);

    // divergence-free second argument: B = div(P_a b)
    TorusField a = band_noise(g, 813, 6);
    TorusField vfree = perp_gradient(xi.xi);
    TorusField lhs = commutator_b(a, vfree, calc);
    TorusField p1 = paraproduct(a, extract_component(vfree, 0), calc);
    TorusField p2 = paraproduct(a, extract_component(vfree, 1), calc);
    TorusField rhs = divergence(make_vector_field(p1, p2));
    CHECK(l2_distance(lhs, rhs) < 1e-10 * std::max(1.0, rhs.l2_norm()));

    TorusField b1 = commutator_b(a, v, calc);
    TorusField b2 = commutator_b(2.0 * a, v, calc);
    CHECK(l2_distance(b2, 2.0 * b1) < 1e-12 * b2.l2_norm());
}

TEST_CASE("besov norm: zero field, argument validation, sobolev comparison") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    TorusField zero(g, 1);
    CHECK(besov_value(zero, -1.1, p_inf, p_inf, calc) == 0.0);
    CHECK_THROWS(besov_norm(zero, 0.5, 2.0, p_inf, calc));
    CHECK_THROWS(besov_norm(zero, 4.5, 2.0, 2.0, calc));

    TorusField f = cosine(g, 8, 0);
    for (double a : {0.0, 1.0, 2.0}) {
        const double sobolev = two_pi * std::sqrt(2.0 * 0.25 * std::pow(1.0 + 64.0, a));
        const double ratio = besov_value(f, a, 2.0, 2.0, calc) / sobolev;
        CHECK(ratio > 0.25);
        CHECK(ratio < 4.0);
    }
}

TEST_CASE("besov norm monotonicity in alpha for q = inf") {
    const GridSpec g(64);
    const HeatCalculus calc(g);
    NoiseSample xi = sample_white_noise(51, g);
    const double lo = besov_value(xi.xi, -1.5, p_inf, p_inf, calc);
    const double hi = besov_value(xi.xi, -1.1, p_inf, p_inf, calc);
    CHECK(lo <= hi * 1.0000001);
    const double l2lo = besov_value(xi.xi, 0.5, 2.0, 2.0, calc);
    const double l2hi = besov_value(xi.xi, 1.0, 2.0, 2.0, calc);
    CHECK(l2lo <= l2hi * 1.0000001);
}

TEST_CASE("besov report carries per-scale profile") {
    const GridSpec g(32);
    const HeatCalculus calc(g);
    TorusField f = cosine(g, 4, 0);
    BesovNormReport rep = besov_norm(f, -0.1, p_inf, p_inf, calc);
    CHECK(rep.per_scale.size() == calc.nodes.size());
    double peak = 0.0;
    for (const auto& [t, v] : rep.per_scale) peak = std::max(peak, v);
    CHECK(peak > 0.0);
    CHECK(rep.value >= peak);
}
