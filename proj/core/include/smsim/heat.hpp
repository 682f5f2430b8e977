#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "smsim/grid.hpp"

namespace smsim {

struct QuadNode {
    double t;  // time in (0,1]
    double w;  // weight for integrals against dt/t
};

/** Quadrature and multiplier machinery for the heat-semigroup projectors
 *
 *      Q_t = (t L)^b e^{-tL} / (b-1)!,   P_t = p_b(t L) e^{-tL},   L = -Laplacian,
 *
 *  with p_b(x) = sum_{j<b} x^j/j!, so that -t d/dt P_t = Q_t and
 *  f = int_0^1 Q_t f dt/t + P_1 f.  Integrals in dt/t are evaluated by
 *  Gauss-Legendre quadrature in log t on [t_min, 1]; node placement is
 *  deterministic so runs are bit-reproducible. */
class HeatCalculus {
  public:
    HeatCalculus(GridSpec grid, int b = 2, int node_count = 96, double t_min = 1e-8);

    GridSpec grid;
    int b = 2;
    int node_count = 96;
    double t_min = 1e-8;
    std::vector<QuadNode> nodes;  // full interval [t_min, 1]

    // multipliers as functions of kappa = |k|^2
    double q_hat(double t, double kappa) const;
    double p_hat(double t, double kappa) const;

    /** Nodes for the sub-interval [t_min, s]; the count shrinks with the
     *  log-length so node density is preserved. */
    std::vector<QuadNode> nodes_upto(double s) const;
};

// gauss-legendre nodes in u = log t for int_{t_lo}^{t_hi} . dt/t
std::vector<QuadNode> log_gauss_nodes(double t_lo, double t_hi, int count);

// Q_t^{(b)} f and P_t^{(b)} f; t in (0,1] resp. [0,1]
TorusField q_apply(const TorusField& f, double t, int b);
TorusField p_apply(const TorusField& f, double t, int b);

/** All four pieces of the product decomposition
 *      f g = P_f g + P_g f + Pi(f,g) + remainder(f,g),
  *  with the canonical representatives
 *      P_f g   = int_0^1 Q_t(P_t f . Q_t g) dt/t,
 *      Pi(f,g) = int_0^1 P_t(Q_t f . Q_t g) dt/t,
 *  and the remainder holding the t=1 boundary term P_1(P_1 f . P_1 g) plus
 *  the regrouping corrections that make the identity exact. */
struct BonyParts {
    TorusField para_fg;    // P_f g
    TorusField para_gf;    // P_g f
    TorusField resonant;   // Pi(f,g), symmetric
    TorusField remainder;
};

BonyParts bony_decompose(const TorusField& f, const TorusField& g, const HeatCalculus& calc);

TorusField paraproduct(const TorusField& f, const TorusField& g, const HeatCalculus& calc);
TorusField resonant(const TorusField& f, const TorusField& g, const HeatCalculus& calc);
TorusField bony_remainder(const TorusField& f, const TorusField& g, const HeatCalculus& calc);

// resonant + remainder: completes P_f g + P_g f to the full product
TorusField resonant_full(const TorusField& f, const TorusField& g, const HeatCalculus& calc);

// plain paraproduct truncated to scales t in (0, s]
TorusField paraproduct_truncated(const TorusField& f, const TorusField& g, double s,
                                 const HeatCalculus& calc);

/** Intertwined paraproduct PT_f g = Delta^{-1}(P_f(Delta g)) (exact-Fourier
 *  inverse), so Delta(PT_f g) = P_f(Delta g) on nonzero modes. */
TorusField intertwined_paraproduct(const TorusField& f, const TorusField& g,
                                   const HeatCalculus& calc);

// truncated intertwined paraproduct PT^s_f g; s in (0,1), s >= smallest node
TorusField truncated_paraproduct(const TorusField& f, const TorusField& g, double s,
                                 const HeatCalculus& calc);

// corrector F(a,b,c) = <a, Pi(b,c)> - <P_a b, c>; real for real inputs
Complex corrector_f(const TorusField& a, const TorusField& b, const TorusField& c,
                    const HeatCalculus& calc);

// commutator B(a,(b1,b2)) = div(P_a(b1,b2)) - P_a div(b1,b2)
TorusField commutator_b(const TorusField& a, const TorusField& b_vec, const HeatCalculus& calc);

// ---- besov norms ------------------------------------------------------------

constexpr double p_inf = std::numeric_limits<double>::infinity();

struct BesovNormReport {
    double alpha = 0.0;
    double p = 2.0, q = 2.0;
    double value = 0.0;
    std::vector<std::pair<double, double>> per_scale;  // (t_j, t_j^{-a/2} ||Q_t f||_p)
};

/** Discrete Besov norm ||e^{Delta} f||_p + ||t^{-a/2}||Q_t f||_p||_{q, dt/t};
 *  supported (p,q): (2,2) Sobolev-type and (inf,inf) Hoelder-type.
 *  Requires |alpha| < 2b.  Vector fields take the max over components. */
BesovNormReport besov_norm(const TorusField& f, double alpha, double p, double q,
                           const HeatCalculus& calc);

double besov_value(const TorusField& f, double alpha, double p, double q,
                   const HeatCalculus& calc);

inline double holder_norm(const TorusField& f, double alpha, const HeatCalculus& calc) {
    return besov_value(f, alpha, p_inf, p_inf, calc);
}
inline double h_norm(const TorusField& f, double beta, const HeatCalculus& calc) {
    return besov_value(f, beta, 2.0, 2.0, calc);
}

}  // namespace smsim
