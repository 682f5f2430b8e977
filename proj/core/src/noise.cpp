#include "smsim/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace smsim {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double to_unit_open(uint64_t v) {
    // (0,1]: avoids log(0) in Box-Muller
    return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double gaussian_of_mode(uint64_t seed, int k1, int k2, uint32_t slot) {
    uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ (static_cast<uint64_t>(static_cast<uint32_t>(k1)) << 32 |
                            static_cast<uint32_t>(k2)));
    key = splitmix64(key ^ (0xA076'1D64'78BD'642Full + slot));
    const double u1 = to_unit_open(splitmix64(key));
    const double u2 = to_unit_open(splitmix64(key + 0x632B'E593'7689'35ABull));
    const double r = std::sqrt(-2.0 * std::log(u1));
    return (slot % 2 == 0) ? r * std::cos(two_pi * u2) : r * std::sin(two_pi * u2);
}

NoiseSample sample_white_noise(uint64_t seed, const GridSpec& grid) {
    NoiseSample out{seed, grid, TorusField(grid, 1)};
    const int n = grid.n;
    const double sigma = 1.0 / two_pi;  // E|xi_hat|^2 = (2pi)^{-2}
    auto blk = out.xi.component(0);
    for (int i2 = 0; i2 < n; ++i2) {
        const int k2 = grid.mode_of(i2);
        const int p2 = grid.mode_of((n - i2) % n);
        for (int i1 = 0; i1 < n; ++i1) {
            const int k1 = grid.mode_of(i1);
            const int p1 = grid.mode_of((n - i1) % n);
            const size_t idx = static_cast<size_t>(i2) * n + i1;
            if (k1 == p1 && k2 == p2) {
                // self-conjugate mode (both axes in {0, n/2}): real Gaussian
                blk[idx] = Complex(sigma * gaussian_of_mode(seed, k1, k2, 0), 0.0);
            } else if (std::pair(k2, k1) > std::pair(p2, p1)) {
                // pair leader draws; the partner slot gets the conjugate below
                const double g0 = gaussian_of_mode(seed, k1, k2, 0);
                const double g1 = gaussian_of_mode(seed, k1, k2, 1);
                blk[idx] = sigma / std::sqrt(2.0) * Complex(g0, g1);
            }
        }
    }
    for (int i2 = 0; i2 < n; ++i2) {
        const int j2 = (n - i2) % n;
        for (int i1 = 0; i1 < n; ++i1) {
            const int j1 = (n - i1) % n;
            const int k1 = grid.mode_of(i1), k2 = grid.mode_of(i2);
            const int p1 = grid.mode_of(j1), p2 = grid.mode_of(j2);
            if (std::pair(k2, k1) < std::pair(p2, p1))
                blk[static_cast<size_t>(i2) * n + i1] =
                    std::conj(blk[static_cast<size_t>(j2) * n + j1]);
        }
    }
    out.xi.real_valued = true;
    return out;
}

Mollifier::Mollifier(MollifierKind k, double eps) : kind(k), epsilon(eps) {
    if (!(eps > 0.0) || eps > 1.0)
        throw std::invalid_argument("Mollifier: epsilon must be in (0,1]");
}

double Mollifier::weight(int k1, int k2) const {
    const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    if (kind == MollifierKind::Heat) return std::exp(-epsilon * epsilon * kk);
    return kk <= 1.0 / (epsilon * epsilon) ? 1.0 : 0.0;
}

TorusField mollify(const TorusField& xi, const Mollifier& moll) {
    return apply_real_multiplier(xi, [&moll](int k1, int k2) { return moll.weight(k1, k2); });
}

TorusField build_potential_from(const TorusField& xi_eps) {
    TorusField phi = inverse_laplacian(xi_eps, InverseLaplacianMode::ExactFourier);
    return perp_gradient(phi);
}

TorusField build_potential(const NoiseSample& xi, const Mollifier& moll) {
    return build_potential_from(mollify(xi.xi, moll));
}

double renorm_constant(const Mollifier& moll, const GridSpec& grid) {
    double sum = 0.0;
    for (int i2 = 0; i2 < grid.n; ++i2) {
        const int k2 = grid.mode_of(i2);
        for (int i1 = 0; i1 < grid.n; ++i1) {
            const int k1 = grid.mode_of(i1);
            const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (kk == 0.0) continue;
            const double rho = moll.weight(k1, k2);
            sum += rho * rho / kk;
        }
    }
    return sum / (two_pi * two_pi);
}

TorusField wick_square(const TorusField& a_eps, double c_eps) {
    if (a_eps.components != 2)
        throw std::invalid_argument("wick_square: 2-component potential expected");
    TorusField w = pointwise_product(a_eps, a_eps);
    w.component(0)[0] -= c_eps;
    return w;
}

namespace {

void fill_norms(EnhancedPotential& pot, const HeatCalculus& calc) {
    pot.norm_A = besov_value(pot.A, pot.alpha - 1.0, p_inf, p_inf, calc);
    pot.norm_A2 = besov_value(pot.A2, 2.0 * pot.alpha - 2.0, p_inf, p_inf, calc);
    pot.x_alpha_norm = pot.norm_A + pot.norm_A2;
}

}  // namespace

EnhancedPotential enhance(const NoiseSample& xi, const Mollifier& moll, double alpha,
                          const HeatCalculus& calc) {
    if (!(alpha > 2.0 / 3.0) || !(alpha < 1.0))
        throw std::invalid_argument("enhance: alpha must be in (2/3, 1)");
    if (!(xi.grid == calc.grid)) throw std::invalid_argument("enhance: grid mismatch with calculus");
    EnhancedPotential pot;
    pot.A = build_potential(xi, moll);
    pot.c_eps = renorm_constant(moll, xi.grid);
    pot.A2 = wick_square(pot.A, pot.c_eps);
    pot.alpha = alpha;
    pot.provenance = {xi.seed, xi.grid.n, moll.kind, moll.epsilon};
    fill_norms(pot, calc);
    return pot;
}

EnhancedPotential make_enhanced(const TorusField& A, const TorusField& A2, double alpha,
                                const HeatCalculus& calc, double c_eps) {
    if (A.components != 2 || !A2.is_scalar())
        throw std::invalid_argument("make_enhanced: expected vector A and scalar A2");
    if (!(alpha > 2.0 / 3.0) || !(alpha < 1.0))
        throw std::invalid_argument("make_enhanced: alpha must be in (2/3, 1)");
    EnhancedPotential pot;
    pot.A = A;
    pot.A2 = A2;
    pot.alpha = alpha;
    pot.c_eps = c_eps;
    pot.provenance.n = A.grid.n;
    fill_norms(pot, calc);
    return pot;
}

EnhancedPotential gauge_shift(const EnhancedPotential& pot, const TorusField& f,
                              const HeatCalculus& calc) {
    if (!f.is_scalar() || !(f.grid == pot.A.grid))
        throw std::invalid_argument("gauge_shift: scalar f on the potential's grid expected");
    const int band = pot.A.grid.n / 8;
    for (int i2 = 0; i2 < f.grid.n; ++i2)
        for (int i1 = 0; i1 < f.grid.n; ++i1) {
            const int k1 = f.grid.mode_of(i1), k2 = f.grid.mode_of(i2);
            if ((std::abs(k1) > band || std::abs(k2) > band) &&
                std::abs(f.component(0)[static_cast<size_t>(i2) * f.grid.n + i1]) > 1e-14)
                throw std::invalid_argument("gauge_shift: f must be band-limited to |k| <= n/8");
        }

    TorusField grad_f = gradient(f);
    EnhancedPotential out;
    out.A = pot.A + grad_f;
    // (A + grad f)^2 - c_eps = A^2_wick + 2 A.grad f + |grad f|^2; the cross
    // terms are classical products since grad f is smooth
    out.A2 = pot.A2;
    out.A2 += 2.0 * dealiased_product(pot.A, grad_f);
    out.A2 += dealiased_product(grad_f, grad_f);
    out.alpha = pot.alpha;
    out.c_eps = pot.c_eps;
    out.provenance = pot.provenance;
    fill_norms(out, calc);
    return out;
}

}  // namespace smsim
