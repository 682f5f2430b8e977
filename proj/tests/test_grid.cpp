#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "smsim/grid.hpp"
#include "smsim/noise.hpp"

using namespace smsim;

namespace {

std::vector<double> sample_scalar(const GridSpec& g, double (*fn)(double, double)) {
    std::vector<double> s(static_cast<size_t>(g.size()));
    for (int i2 = 0; i2 < g.n; ++i2)
        for (int i1 = 0; i1 < g.n; ++i1)
            s[static_cast<size_t>(i2) * g.n + i1] = fn(g.dx() * i1, g.dx() * i2);
    return s;
}

double max_sample_error(const TorusField& f, double (*fn)(double, double)) {
    std::vector<double> got = fft_inverse(f);
    const GridSpec& g = f.grid;
    double m = 0.0;
    for (int i2 = 0; i2 < g.n; ++i2)
        for (int i1 = 0; i1 < g.n; ++i1)
            m = std::max(m, std::abs(got[static_cast<size_t>(i2) * g.n + i1] -
                                     fn(g.dx() * i1, g.dx() * i2)));
    return m;
}

}  // namespace

TEST_CASE("grid spec validation") {
    CHECK_THROWS(GridSpec(12));
    CHECK_THROWS(GridSpec(48));  // not a power of two
    CHECK_THROWS(GridSpec(8));
    const GridSpec g(32);
    CHECK(g.mode_of(0) == 0);
    CHECK(g.mode_of(16) == 16);
    CHECK(g.mode_of(17) == -15);
    CHECK(g.index_of(-15) == 17);
    CHECK(g.contains_mode(16, 16));
    CHECK(!g.contains_mode(-16, 0));
}

TEST_CASE("fft forward: dc mode and single harmonic") {
    const GridSpec g(32);
    TorusField one = fft_forward(g, sample_scalar(g, [](double, double) { return 1.0; }));
    CHECK(std::abs(one.at(0, 0, 0) - Complex(1.0, 0.0)) < 1e-13);
    double rest = 0.0;
    for (int i = 1; i < g.size(); ++i) rest = std::max(rest, std::abs(one.coef[i]));
    CHECK(rest < 1e-13);

    TorusField c =
        fft_forward(g, sample_scalar(g, [](double x1, double) { return std::cos(x1); }));
    CHECK(std::abs(c.at(0, 1, 0) - Complex(0.5, 0.0)) < 1e-13);
    CHECK(std::abs(c.at(0, -1, 0) - Complex(0.5, 0.0)) < 1e-13);
    CHECK(std::abs(c.at(0, 0, 1)) < 1e-13);
}

TEST_CASE("fft round trip on random real fields") {
    const GridSpec g(64);
    NoiseSample xi = sample_white_noise(7, g);
    std::vector<double> samples = fft_inverse(xi.xi);
    TorusField back = fft_forward(g, samples);
    CHECK(back.max_coef_error(xi.xi) < 1e-12 * linf_norm(xi.xi));
    CHECK_THROWS(fft_forward(g, std::span<const double>(samples.data(), 17)));
}

TEST_CASE("parseval: physical L2 equals coefficient l2") {
    const GridSpec g(64);
    NoiseSample xi = sample_white_noise(3, g);
    std::vector<double> samples = fft_inverse(xi.xi);
    double quad = 0.0;
    for (double v : samples) quad += v * v;
    quad *= g.dx() * g.dx();
    CHECK(std::abs(std::sqrt(quad) - xi.xi.l2_norm()) < 1e-12 * xi.xi.l2_norm());
}

TEST_CASE("derivative examples") {
    const GridSpec g(32);
    TorusField c =
        fft_forward(g, sample_scalar(g, [](double x1, double) { return std::cos(x1); }));
    TorusField d = derivative(c, 1);
    CHECK(max_sample_error(d, [](double x1, double) { return -std::sin(x1); }) < 1e-12);

    // field constant in x2
    TorusField f =
        fft_forward(g, sample_scalar(g, [](double x1, double) { return std::sin(2 * x1); }));
    CHECK(derivative(f, 2).l2_norm() < 1e-13);

    // mixed partials commute exactly
    NoiseSample xi = sample_white_noise(11, g);
    TorusField ab = derivative(derivative(xi.xi, 1), 2);
    TorusField ba = derivative(derivative(xi.xi, 2), 1);
    CHECK(ab.max_coef_error(ba) < 1e-13 * linf_norm(xi.xi));
}

TEST_CASE("multiplier operations commute on random fields") {
    const GridSpec g(32);
    NoiseSample xi = sample_white_noise(5, g);
    TorusField a = inverse_laplacian(derivative(xi.xi, 1));
    TorusField b = derivative(inverse_laplacian(xi.xi), 1);
    CHECK(a.max_coef_error(b) < 1e-12 * linf_norm(xi.xi));
}

TEST_CASE("derivative maps real fields to real fields") {
    const GridSpec g(32);
    NoiseSample xi = sample_white_noise(13, g);
    CHECK(derivative(xi.xi, 1).conjugate_symmetry_defect() < 1e-12);
    CHECK(derivative(xi.xi, 2).conjugate_symmetry_defect() < 1e-12);
    CHECK(inverse_laplacian(xi.xi).conjugate_symmetry_defect() < 1e-12);
}

TEST_CASE("perp gradient examples") {
    const GridSpec g(32);
    TorusField phi =
        fft_forward(g, sample_scalar(g, [](double, double x2) { return std::cos(x2); }));
    TorusField a = perp_gradient(phi);
    TorusField a1 = extract_component(a, 0);
    CHECK(max_sample_error(a1, [](double, double x2) { return std::sin(x2); }) < 1e-12);
    CHECK(extract_component(a, 1).l2_norm() < 1e-13);

    // div(perp_gradient) = 0 for any phi
    NoiseSample xi = sample_white_noise(17, g);
    CHECK(divergence(perp_gradient(xi.xi)).l2_norm() < 1e-12 * xi.xi.l2_norm());

    TorusField zero(g, 1);
    CHECK(perp_gradient(zero).l2_norm() == 0.0);
}

TEST_CASE("inverse laplacian variants") {
    const GridSpec g(32);
    TorusField c =
        fft_forward(g, sample_scalar(g, [](double x1, double) { return std::cos(x1); }));

    TorusField exact = inverse_laplacian(c, InverseLaplacianMode::ExactFourier);
    CHECK(max_sample_error(exact, [](double x1, double) { return -std::cos(x1); }) < 1e-12);

    TorusField one = fft_forward(g, sample_scalar(g, [](double, double) { return 1.0; }));
    CHECK(inverse_laplacian(one, InverseLaplacianMode::ExactFourier).l2_norm() < 1e-13);
    TorusField hq = inverse_laplacian(one, InverseLaplacianMode::HeatQuasi);
    CHECK(std::abs(hq.at(0, 0, 0) - Complex(-1.0, 0.0)) < 1e-13);

    TorusField hqc = inverse_laplacian(c, InverseLaplacianMode::HeatQuasi);
    const double w = -(1.0 - std::exp(-1.0));
    CHECK(std::abs(hqc.at(0, 1, 0) - Complex(0.5 * w, 0.0)) < 1e-13);

    // Delta(Delta^{-1} f) = f - mean(f)
    NoiseSample xi = sample_white_noise(19, g);
    TorusField back = laplacian(inverse_laplacian(xi.xi));
    TorusField expect = xi.xi;
    expect.component(0)[0] = Complex(0.0, 0.0);
    CHECK(back.max_coef_error(expect) < 1e-12 * linf_norm(xi.xi));
}

TEST_CASE("dealiased product matches exact convolution on band-limited fields") {
    const GridSpec g(32);
    TorusField f = fft_forward(
        g, sample_scalar(g, [](double x1, double x2) { return std::cos(3 * x1) + std::sin(x2); }));
    TorusField h = fft_forward(
        g, sample_scalar(g, [](double x1, double x2) { return std::sin(2 * x1 + x2); }));
    TorusField plain = pointwise_product(f, h);
    TorusField deal = dealiased_product(f, h);
    CHECK(plain.max_coef_error(deal) < 1e-13);

    // high bands alias on the plain grid but not through the 3/2 rule
    TorusField hi(g, 1);
    hi.at(0, 12, 0) = hi.at(0, -12, 0) = Complex(0.5, 0.0);
    TorusField sq_deal = dealiased_product(hi, hi);
    // true square: 1/2 + cos(24 x1)/2; mode 24 is outside the grid
    CHECK(std::abs(sq_deal.at(0, 0, 0) - Complex(0.5, 0.0)) < 1e-13);
    CHECK(std::abs(sq_deal.at(0, 8, 0)) < 1e-13);  // no aliased image
    TorusField sq_plain = pointwise_product(hi, hi);
    CHECK(std::abs(sq_plain.at(0, -8, 0)) > 0.1);  // collocation aliases 24 onto -8
}

TEST_CASE("tfld snapshot round trip") {
    const GridSpec g(32);
    NoiseSample xi = sample_white_noise(23, g);
    TorusField a = perp_gradient(inverse_laplacian(xi.xi));
    const std::string path = "test_snapshot.tfld";
    write_tfld(path, a);
    TorusField back = read_tfld(path);
    CHECK(back.grid.n == 32);
    CHECK(back.components == 2);
    CHECK(back.max_coef_error(a) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("inner product and norms") {
    const GridSpec g(32);
    TorusField f(g, 1);
    f.at(0, 0, 0) = Complex(2.0, 0.0);  // constant 2
    CHECK(std::abs(f.l2_norm() - 2.0 * two_pi) < 1e-13);
    TorusField h(g, 1);
    h.at(0, 1, 0) = h.at(0, -1, 0) = Complex(0.5, 0.0);  // cos(x1)
    CHECK(std::abs(inner(f, h)) < 1e-13);
    CHECK(std::abs(inner(h, h).real() - two_pi * two_pi * 0.5) < 1e-12);
}
