#pragma once

#include <cstdint>
#include <string>

#include "smsim/grid.hpp"
#include "smsim/heat.hpp"

namespace smsim {

/** Spatial white noise on the torus, E[<xi,phi><xi,psi>] = <phi,psi>, i.e.
 *  independent Gaussian Fourier modes with E|xi_hat(k)|^2 = (2pi)^{-2} up to
 *  conjugate symmetry.  Deterministic in the seed. */
struct NoiseSample {
    uint64_t seed = 0;
    GridSpec grid;
    TorusField xi;
};

enum class MollifierKind { Heat, SharpCutoff };

/** Fourier mollifier rho_eps: Heat is e^{-eps^2 |k|^2}, SharpCutoff keeps
 *  |k| <= 1/eps.  rho(0) = 1, 0 <= rho <= 1, even. */
struct Mollifier {
    MollifierKind kind = MollifierKind::Heat;
    double epsilon = 0.25;

    Mollifier() = default;
    Mollifier(MollifierKind k, double eps);

    double weight(int k1, int k2) const;
    std::string name() const { return kind == MollifierKind::Heat ? "heat" : "sharp"; }
};

/** The enhanced potential bold-A = (A, A^2): the Lorentz-gauge vector
 *  potential and its Wick square, with the X^alpha norms
 *  ||A||_{C^{alpha-1}} + ||A^2||_{C^{2alpha-2}}. */
struct EnhancedPotential {
    TorusField A;   // 2 real components, div A = 0 for Lorentz-gauge construction
    TorusField A2;  // renormalized square (scalar)
    double alpha = 0.9;
    double norm_A = 0.0;
    double norm_A2 = 0.0;
    double x_alpha_norm = 0.0;
    double c_eps = 0.0;  // renormalization constant used; 0 for external limits

    struct Provenance {
        uint64_t seed = 0;
        int n = 0;
        MollifierKind mollifier = MollifierKind::Heat;
        double epsilon = 0.0;
    } provenance;
};

NoiseSample sample_white_noise(uint64_t seed, const GridSpec& grid);

// xi * rho_eps in Fourier
TorusField mollify(const TorusField& xi, const Mollifier& moll);

/** Lorentz-gauge potential A_eps = perp_grad(Delta^{-1}(rho_eps * xi)); exact
 *  Fourier inverse, so mean(A_eps) = 0 and div A_eps = 0.  With the
 *  convention perp_grad = (-d2, d1) the curl satisfies
 *  d2 A1 - d1 A2 = -xi_eps (sign recorded here once and asserted in tests). */
TorusField build_potential(const NoiseSample& xi, const Mollifier& moll);
TorusField build_potential_from(const TorusField& xi_eps);

/** Exact renormalization constant, the mode sum
 *  c_eps = (2pi)^{-2} sum_{k != 0} rho_eps(k)^2 / |k|^2 over the grid's modes. */
double renorm_constant(const Mollifier& moll, const GridSpec& grid);

/** Pointwise Wick square A.A - c_eps, computed in real space.  The grid must
 *  resolve the mollifier (n >= 4/eps) for the square to be alias-free. */
TorusField wick_square(const TorusField& a_eps, double c_eps);

EnhancedPotential enhance(const NoiseSample& xi, const Mollifier& moll, double alpha,
                          const HeatCalculus& calc);

// assemble an EnhancedPotential from explicit fields (tests, constant potentials)
EnhancedPotential make_enhanced(const TorusField& A, const TorusField& A2, double alpha,
                                const HeatCalculus& calc, double c_eps = 0.0);

/** Gauge change A -> A + grad f for band-limited smooth f (|k| <= n/8): the
 *  shifted square is A^2 + 2 A.grad f + |grad f|^2 (classical products), the
 *  renormalization constant is carried over unchanged. */
EnhancedPotential gauge_shift(const EnhancedPotential& pot, const TorusField& f,
                              const HeatCalculus& calc);

// per-worker RNG stream splitting (documented): gaussian draws are pure
// functions of (seed, k1, k2, slot) through splitmix64
double gaussian_of_mode(uint64_t seed, int k1, int k2, uint32_t slot);

}  // namespace smsim
