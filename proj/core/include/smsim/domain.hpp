#pragma once

#include <array>
#include <optional>
#include <vector>

#include "smsim/heat.hpp"
#include "smsim/noise.hpp"

namespace smsim {

struct SBetaEntry {
    double beta = 0.0;
    double threshold = 0.0;  // s_beta(A); +inf when the potential vanishes
};

/** Scale threshold s_beta(A) = (beta* / (m ||A||_X))^{4/(2 alpha - beta)} with
 *  beta* = 1-beta on [0,1) and 2 alpha - beta on [1, 2 alpha). */
double s_beta_threshold(double beta, double alpha, double m, double x_alpha_norm);

/** The paracontrolled domain machinery for one enhanced potential:
 *  X1 = Delta^{-1}(A^2), X2 = Delta^{-1}(2iA), the truncated decomposition map
 *  Phi^s(u) = u - PT^s_u X1 - PT^s_{grad u}.X2 and its fixed-point inverse. */
class DomainMap {
  public:
    DomainMap(EnhancedPotential pot_, HeatCalculus calc_)
        : pot(std::move(pot_)), calc(std::move(calc_)) {}

    EnhancedPotential pot;
    HeatCalculus calc;
    TorusField X1;    // scalar
    TorusField X2;    // 2 components, purely imaginary (2i A convention)
    TorusField dX1;   // A^2 - mean(A^2) = Delta X1 on nonzero modes
    TorusField dX2;   // 2i A
    double s = 0.0;
    double alpha = 0.9;
    double m_calibrated = 0.0;
    std::vector<SBetaEntry> s_beta_table;
    std::vector<QuadNode> s_nodes;

    /** T(u) = PT^s_u X1 + PT^s_{grad u}.X2 over the given node set; the fused
     *  evaluation behind Phi^s and the Gamma iteration. */
    TorusField rough_part(const TorusField& u, const std::vector<QuadNode>& nodes) const;

    bool has_cache() const { return !q_cache_.empty(); }
    void build_cache();

  private:
    // per node: real samples of Q_t(dX1), and of the two components of
    // Q_t(2A) (the factor i is applied when combining)
    std::vector<std::array<std::vector<double>, 3>> q_cache_;
};

/** Builds the map; pass s <= 0 to use the default scale
 *  min_beta s_beta(A)/2 over serve_betas, clamped to [8 t_min, 1/2].
 *  Construction is refused when s is at or above a served threshold. */
DomainMap build_domain_map(const EnhancedPotential& pot, double s, const HeatCalculus& calc,
                           std::vector<double> serve_betas = {});

// Phi^s(u) = u - T(u)
TorusField phi_s(const TorusField& u, const DomainMap& dm);

struct ParacontrolledFunction {
    TorusField u;
    TorusField u_sharp;  // the H^2 image Phi^s(u)
    double s = 0.0;
    double residual = 0.0;  // ||Phi^s(u) - u_sharp||_{L^2}
    int iterations = 0;
};

/** Gamma: inverse of Phi^s by the Neumann iteration u <- u# + T(u), run until
 *  ||Phi^s(u) - u#||_{L2} < tol (relative to ||u#||).  Throws on
 *  non-convergence, which signals s above the contraction threshold. */
ParacontrolledFunction gamma(const TorusField& u_sharp, const DomainMap& dm, double tol = 1e-10,
                             int max_iter = 100);

/** H u = -Delta u_s# + R(u) + Psi^s(u) with
 *  R(u) = P_{2iA}.grad u + Pi(grad u, 2iA) + P_{A^2} u + Pi(u, A^2)
 *  (resonant terms taken with their remainder part so that H coincides with
 *  the classical operator on smooth data).  The value is independent of the
 *  scale s. */
TorusField apply_h(const ParacontrolledFunction& u, const DomainMap& dm,
                   const EnhancedPotential& pot);

/** Constants of the graph-norm/form displays evaluated with the calibrated
 *  m and k; infinities indicate that dm.s is above the relevant s_beta. */
struct EstimateConstants {
    double m_delta1 = 0.0;  // form comparison
    double m_delta2 = 0.0;  // graph norm
    double m_plus = 0.0;    // eigenvalue upper factor
    double m_minus = 0.0;   // eigenvalue lower factor
    double upper_shift = 0.0;  // 2 + 2 m s^{alpha/2} ||A||
    bool valid1 = false;
    bool valid2 = false;
    bool valid0 = false;  // s < s_0
};

EstimateConstants estimate_constants(const DomainMap& dm, double delta);

struct GraphNormReport {
    double sharp_h2 = 0.0;
    double hu_l2 = 0.0;
    double u_l2 = 0.0;
    double m2 = 0.0;
    double lower_margin = 0.0;  // ||Hu|| + m2||u|| - (1-delta)||u#||_{H2}
    double upper_margin = 0.0;  // (1+delta)||u#||_{H2} + m2||u|| - ||Hu||
    bool lower_ok = false, upper_ok = false, constant_valid = false;
};

GraphNormReport graph_norm_check(const ParacontrolledFunction& u, const DomainMap& dm,
                                 const EnhancedPotential& pot, double delta);

struct FormReport {
    double grad_sharp_sq = 0.0;  // ||grad u_s#||^2
    double form_value = 0.0;     // Re<u, Hu>
    double u_l2 = 0.0;
    double m1 = 0.0;
    double margin = 0.0;  // form_value + m1 ||u||^2 - (1-delta) ||grad u#||^2
    bool ok = false, constant_valid = false;
    // section-1.3 diagnostics: resonant pairing via corrector and commutator
    Complex resonant_pairing;   // <u, Pi(2iA, grad u)>
    Complex corrector_value;    // F(u, 2iA, grad u)
    Complex commutator_pairing; // <B(u, 2iA), u>
    double ibp_residual = 0.0;  // |<P_u 2iA, grad u> + <div P_u 2iA, u>|
};

FormReport form_check(const ParacontrolledFunction& u, const DomainMap& dm,
                      const EnhancedPotential& pot, double delta);

// ||A - A_eps||_{X^alpha} between two potentials on one grid
double x_alpha_distance(const EnhancedPotential& a, const EnhancedPotential& b,
                        const HeatCalculus& calc);

struct GammaDistance {
    double norm_estimate = 0.0;   // sup over probes of ||(Gamma - Gamma_eps) e_k|| / ||e_k||
    double xnorm_distance = 0.0;  // ||A - A_eps||_{X^alpha}
    double ratio = 0.0;
};

/** Empirical estimate of ||Gamma - Gamma_eps|| over the lowest `probes`
 *  Fourier modes. */
GammaDistance gamma_eps_distance(const DomainMap& dm, const DomainMap& dm_eps, int probes = 64);

}  // namespace smsim
