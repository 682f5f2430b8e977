#include "smsim/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "smsim/calibration.hpp"

namespace smsim {

double s_beta_threshold(double beta, double alpha, double m, double x_alpha_norm) {
    if (beta < 0.0 || beta >= 2.0 * alpha)
        throw std::invalid_argument("s_beta_threshold: beta must lie in [0, 2 alpha)");
    const double beta_star = beta < 1.0 ? 1.0 - beta : 2.0 * alpha - beta;
    const double denom = m * x_alpha_norm;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(beta_star / denom, 4.0 / (2.0 * alpha - beta));
}

namespace {

double q_mult_of(const HeatCalculus& calc, double t, double kappa) { return calc.q_hat(t, kappa); }

// multiplier-filtered phys samples of a scalar coefficient block
std::vector<Complex> filtered_phys_block(std::span<const Complex> coef, const GridSpec& g,
                                         const HeatCalculus& calc, double t, bool q_side) {
    std::vector<Complex> buf(coef.size());
    for (int i2 = 0; i2 < g.n; ++i2) {
        const double k2 = g.mode_of(i2);
        for (int i1 = 0; i1 < g.n; ++i1) {
            const double k1 = g.mode_of(i1);
            const double kappa = k1 * k1 + k2 * k2;
            const double m = q_side ? calc.q_hat(t, kappa) : calc.p_hat(t, kappa);
            buf[static_cast<size_t>(i2) * g.n + i1] = m * coef[static_cast<size_t>(i2) * g.n + i1];
        }
    }
    std::vector<Complex> phys(buf.size());
    coef_to_phys(buf, g, phys);
    return phys;
}

}  // namespace

void DomainMap::build_cache() {
    const GridSpec& g = calc.grid;
    q_cache_.clear();
    q_cache_.reserve(s_nodes.size());
    for (const QuadNode& nd : s_nodes) {
        std::array<std::vector<double>, 3> entry;
        std::vector<Complex> p1 = filtered_phys_block(dX1.component(0), g, calc, nd.t, true);
        entry[0].resize(p1.size());
        for (size_t i = 0; i < p1.size(); ++i) entry[0][i] = p1[i].real();
        for (int c = 0; c < 2; ++c) {
            std::vector<Complex> pv = filtered_phys_block(dX2.component(c), g, calc, nd.t, true);
            entry[c + 1].resize(pv.size());
            // dX2 = 2iA is purely imaginary; keep Im and reapply i when combining
            for (size_t i = 0; i < pv.size(); ++i) entry[c + 1][i] = pv[i].imag();
        }
        q_cache_.push_back(std::move(entry));
    }
}

TorusField DomainMap::rough_part(const TorusField& u, const std::vector<QuadNode>& nodes) const {
    if (!u.is_scalar() || !(u.grid == calc.grid))
        throw std::invalid_argument("rough_part: scalar field on the map's grid expected");
    const GridSpec& g = calc.grid;
    const size_t sz = static_cast<size_t>(g.size());

    TorusField du1 = derivative(u, 1);
    TorusField du2 = derivative(u, 2);

    std::vector<Complex> acc(sz, Complex(0.0, 0.0));
    std::vector<Complex> prod(sz);
    const bool cached = !q_cache_.empty() && nodes.size() == s_nodes.size() &&
                        (nodes.empty() || nodes[0].t == s_nodes[0].t);
    for (size_t j = 0; j < nodes.size(); ++j) {
        const double t = nodes[j].t;
        std::vector<Complex> pu = filtered_phys_block(u.component(0), g, calc, t, false);
        std::vector<Complex> p1 = filtered_phys_block(du1.component(0), g, calc, t, false);
        std::vector<Complex> p2 = filtered_phys_block(du2.component(0), g, calc, t, false);
        if (cached) {
            const auto& e = q_cache_[j];
            for (size_t i = 0; i < sz; ++i) {
                const Complex vec = Complex(0.0, 1.0) * (p1[i] * e[1][i] + p2[i] * e[2][i]);
                prod[i] = pu[i] * e[0][i] + vec;
            }
        } else {
            std::vector<Complex> g0 = filtered_phys_block(dX1.component(0), g, calc, t, true);
            std::vector<Complex> g1 = filtered_phys_block(dX2.component(0), g, calc, t, true);
            std::vector<Complex> g2 = filtered_phys_block(dX2.component(1), g, calc, t, true);
            for (size_t i = 0; i < sz; ++i) prod[i] = pu[i] * g0[i] + p1[i] * g1[i] + p2[i] * g2[i];
        }
        std::vector<Complex> coef(sz);
        phys_to_coef(prod, g, coef);
        for (int i2 = 0; i2 < g.n; ++i2) {
            const double k2 = g.mode_of(i2);
            for (int i1 = 0; i1 < g.n; ++i1) {
                const double k1 = g.mode_of(i1);
                const double kappa = k1 * k1 + k2 * k2;
                acc[static_cast<size_t>(i2) * g.n + i1] +=
                    (nodes[j].w * q_mult_of(calc, t, kappa)) *
                    coef[static_cast<size_t>(i2) * g.n + i1];
            }
        }
    }
    TorusField para(g, 1);
    para.coef = std::move(acc);
    // conjugation by the Laplacian: PT = Delta^{-1} P Delta, the dX fields
    // already carry Delta
    return inverse_laplacian(para, InverseLaplacianMode::ExactFourier);
}

DomainMap build_domain_map(const EnhancedPotential& pot, double s, const HeatCalculus& calc,
                           std::vector<double> serve_betas) {
    if (!(pot.A.grid == calc.grid))
        throw std::invalid_argument("build_domain_map: potential and calculus grids differ");
    DomainMap dm(pot, calc);
    dm.alpha = pot.alpha;
    dm.m_calibrated = universal_m;

    dm.X1 = inverse_laplacian(pot.A2, InverseLaplacianMode::ExactFourier);
    dm.dX1 = pot.A2;
    dm.dX1.component(0)[0] = Complex(0.0, 0.0);  // Delta X1 = A^2 - mean
    dm.dX2 = Complex(0.0, 2.0) * pot.A;
    dm.X2 = inverse_laplacian(dm.dX2, InverseLaplacianMode::ExactFourier);

    if (serve_betas.empty()) serve_betas = {0.0, 1.0 - pot.alpha / 4.0};
    double s_min = std::numeric_limits<double>::infinity();
    for (double beta : serve_betas) {
        const double thr = s_beta_threshold(beta, pot.alpha, dm.m_calibrated, pot.x_alpha_norm);
        dm.s_beta_table.push_back({beta, thr});
        s_min = std::min(s_min, thr);
    }

    if (s <= 0.0) {
        s = std::isinf(s_min) ? 0.5 : s_min / 2.0;
        s = std::clamp(s, 8.0 * calc.t_min, 0.5);
    }
    if (!(s > 0.0) || s >= 1.0) throw std::invalid_argument("build_domain_map: s must be in (0,1)");
    for (const SBetaEntry& e : dm.s_beta_table) {
        if (s >= e.threshold) {
            std::ostringstream msg;
            msg << "build_domain_map: s = " << s << " is not below s_beta(A) = " << e.threshold
                << " for beta = " << e.beta;
            throw std::invalid_argument(msg.str());
        }
    }
    if (s < calc.t_min)
        throw std::invalid_argument("build_domain_map: s below the quadrature floor t_min");
    dm.s = s;
    dm.s_nodes = calc.nodes_upto(s);
    if (calc.grid.n <= 128) dm.build_cache();
    return dm;
}

TorusField phi_s(const TorusField& u, const DomainMap& dm) {
    TorusField out = u;
    out -= dm.rough_part(u, dm.s_nodes);
    return out;
}

ParacontrolledFunction gamma(const TorusField& u_sharp, const DomainMap& dm, double tol,
                             int max_iter) {
    if (!u_sharp.is_scalar() || !(u_sharp.grid == dm.calc.grid))
        throw std::invalid_argument("gamma: scalar field on the map's grid expected");
    const double scale = std::max(u_sharp.l2_norm(), 1e-300);
    ParacontrolledFunction pf;
    pf.s = dm.s;
    TorusField u = u_sharp;
    for (int it = 1; it <= max_iter; ++it) {
        TorusField t_u = dm.rough_part(u, dm.s_nodes);
        TorusField residual_field = u;
        residual_field -= t_u;
        residual_field -= u_sharp;  // Phi^s(u) - u#
        const double res = residual_field.l2_norm();
        if (res < tol * scale) {
            pf.u = std::move(u);
            pf.u_sharp = u_sharp;
            pf.residual = res;
            pf.iterations = it - 1;
            return pf;
        }
        u = u_sharp;
        u += t_u;
        pf.iterations = it;
    }
    throw std::runtime_error(
        "gamma: Neumann iteration did not converge; s is too close to the contraction "
        "threshold or the calibrated m underestimates the ratios");
}

TorusField apply_h(const ParacontrolledFunction& pf, const DomainMap& dm,
                   const EnhancedPotential& pot) {
    const double rel = pf.u.l2_norm();
    if (pf.residual > 1e-6 * std::max(rel, 1e-300))
        throw std::invalid_argument("apply_h: input is not paracontrolled (residual too large)");

    const TorusField& u = pf.u;
    TorusField u_sharp_s = phi_s(u, dm);

    // -Delta u_s#
    TorusField out = laplacian(u_sharp_s);
    out *= -1.0;

    // Psi^s(u): smooth correction Delta[(PT - PT^s)_u X1 + (PT - PT^s)_{grad u}.X2];
    // together with -Delta u_s# this reproduces -Delta Phi(u) for every
    // admissible s, which is what makes the result s-independent
    TorusField t_full = dm.rough_part(u, dm.calc.nodes);
    TorusField t_s = dm.rough_part(u, dm.s_nodes);
    out += laplacian(t_full - t_s);

    // R(u): the four paraproduct/resonant blocks
    TorusField du1 = derivative(u, 1);
    TorusField du2 = derivative(u, 2);
    TorusField a1 = Complex(0.0, 2.0) * extract_component(pot.A, 0);
    TorusField a2 = Complex(0.0, 2.0) * extract_component(pot.A, 1);
    out += paraproduct(a1, du1, dm.calc);
    out += paraproduct(a2, du2, dm.calc);
    out += resonant_full(du1, a1, dm.calc);
    out += resonant_full(du2, a2, dm.calc);
    out += paraproduct(pot.A2, u, dm.calc);
    out += resonant_full(u, pot.A2, dm.calc);
    return out;
}

EstimateConstants estimate_constants(const DomainMap& dm, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("estimate_constants: delta must be positive");
    const double alpha = dm.alpha;
    const double s = dm.s;
    const double x = dm.pot.x_alpha_norm;
    const double m = dm.m_calibrated;
    const double k = constant_k;
    const double inf = std::numeric_limits<double>::infinity();

    EstimateConstants c;
    const double contraction0 = m * std::pow(s, alpha / 2.0) * x;
    c.valid0 = contraction0 < 1.0;
    c.m_plus = (1.0 + delta) * (1.0 + contraction0);
    c.m_minus = c.valid0 ? (1.0 - delta) / (1.0 - contraction0) : 0.0;
    c.upper_shift = 2.0 + 2.0 * contraction0;

    // graph norm: beta = (2/3 + alpha), beta* = 2 alpha - beta
    {
        const double beta = 2.0 / 3.0 + alpha;
        const double beta_star = 2.0 * alpha - beta;
        const double d = m * std::pow(s, (2.0 * alpha - beta) / 4.0) / beta_star * x;
        c.valid2 = d < 1.0;
        if (c.valid2) {
            // the constant-free part covers the A = 0 elliptic comparison
            c.m_delta2 = k * (1.0 + std::pow(s, (alpha - 2.0) / 2.0) * x) +
                         k * std::pow(delta, -beta / (2.0 - beta)) *
                             std::pow(x / (1.0 - d), 2.0 / (2.0 - beta)) *
                             (1.0 + std::pow(s, alpha / 2.0) * x);
        } else {
            c.m_delta2 = inf;
        }
    }

    // form comparison: eta = alpha/4, threshold s_{1-eta}
    {
        const double eta = alpha / 4.0;
        const double d = (m / eta) * std::pow(s, (2.0 * alpha + eta - 1.0) / 4.0) * x;
        c.valid1 = d < 1.0;
        if (c.valid1) {
            c.m_delta1 = k * (1.0 + (1.0 + std::pow(s, (alpha - 2.0) / 2.0)) * x) +
                         k * std::pow(delta, -(1.0 - eta) / eta) *
                             std::pow(x / ((1.0 - d) * (1.0 - d)), 1.0 / eta) *
                             (1.0 + std::pow(s, alpha / 2.0) * x);
        } else {
            c.m_delta1 = inf;
        }
    }
    return c;
}

GraphNormReport graph_norm_check(const ParacontrolledFunction& u, const DomainMap& dm,
                                 const EnhancedPotential& pot, double delta) {
    GraphNormReport rep;
    const EstimateConstants c = estimate_constants(dm, delta);
    rep.constant_valid = c.valid2;
    rep.m2 = c.m_delta2;

    TorusField hu = apply_h(u, dm, pot);
    TorusField sharp = phi_s(u.u, dm);
    rep.sharp_h2 = h_norm(sharp, 2.0, dm.calc);
    rep.hu_l2 = hu.l2_norm();
    rep.u_l2 = u.u.l2_norm();
    rep.lower_margin = rep.hu_l2 + rep.m2 * rep.u_l2 - (1.0 - delta) * rep.sharp_h2;
    rep.upper_margin = (1.0 + delta) * rep.sharp_h2 + rep.m2 * rep.u_l2 - rep.hu_l2;
    rep.lower_ok = rep.lower_margin >= 0.0;
    rep.upper_ok = rep.upper_margin >= 0.0;
    return rep;
}

FormReport form_check(const ParacontrolledFunction& u, const DomainMap& dm,
                      const EnhancedPotential& pot, double delta) {
    FormReport rep;
    const EstimateConstants c = estimate_constants(dm, delta);
    rep.constant_valid = c.valid1;
    rep.m1 = c.m_delta1;

    TorusField hu = apply_h(u, dm, pot);
    TorusField sharp = phi_s(u.u, dm);
    TorusField grad_sharp = gradient(sharp);
    rep.grad_sharp_sq = grad_sharp.l2_norm() * grad_sharp.l2_norm();
    rep.form_value = inner(u.u, hu).real();
    rep.u_l2 = u.u.l2_norm();
    rep.margin = rep.form_value + rep.m1 * rep.u_l2 * rep.u_l2 -
                 (1.0 - delta) * rep.grad_sharp_sq;
    rep.ok = rep.margin >= 0.0;

    // section-1.3 decomposition diagnostics with the actual corrector and
    // commutator operators
    TorusField du = gradient(u.u);
    TorusField two_i_a = Complex(0.0, 2.0) * pot.A;
    Complex pairing(0.0, 0.0), corr(0.0, 0.0);
    for (int comp = 0; comp < 2; ++comp) {
        TorusField ai = extract_component(two_i_a, comp);
        TorusField dui = extract_component(du, comp);
        pairing += inner(u.u, resonant(ai, dui, dm.calc));
        corr += corrector_f(u.u, ai, dui, dm.calc);
    }
    rep.resonant_pairing = pairing;
    rep.corrector_value = corr;
    TorusField b_term = commutator_b(u.u, two_i_a, dm.calc);
    rep.commutator_pairing = inner(b_term, u.u);
    TorusField p_u_a1 = paraproduct(u.u, extract_component(two_i_a, 0), dm.calc);
    TorusField p_u_a2 = paraproduct(u.u, extract_component(two_i_a, 1), dm.calc);
    const Complex lhs = inner(p_u_a1, extract_component(du, 0)) +
                        inner(p_u_a2, extract_component(du, 1));
    const Complex rhs = -inner(divergence(make_vector_field(p_u_a1, p_u_a2)), u.u);
    rep.ibp_residual = std::abs(lhs - std::conj(rhs));
    return rep;
}

double x_alpha_distance(const EnhancedPotential& a, const EnhancedPotential& b,
                        const HeatCalculus& calc) {
    if (a.alpha != b.alpha) throw std::invalid_argument("x_alpha_distance: alpha mismatch");
    TorusField da = a.A - b.A;
    TorusField dw = a.A2 - b.A2;
    return besov_value(da, a.alpha - 1.0, p_inf, p_inf, calc) +
           besov_value(dw, 2.0 * a.alpha - 2.0, p_inf, p_inf, calc);
}

GammaDistance gamma_eps_distance(const DomainMap& dm, const DomainMap& dm_eps, int probes) {
    if (!(dm.calc.grid == dm_eps.calc.grid) || dm.s != dm_eps.s)
        throw std::invalid_argument("gamma_eps_distance: maps must share grid and scale");
    const GridSpec g = dm.calc.grid;

    // lowest modes by |k|^2, deterministic order
    std::vector<std::pair<double, std::pair<int, int>>> modes;
    for (int k2 = -g.n / 2 + 1; k2 <= g.n / 2; ++k2)
        for (int k1 = -g.n / 2 + 1; k1 <= g.n / 2; ++k1)
            modes.push_back({static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2,
                             {k1, k2}});
    std::stable_sort(modes.begin(), modes.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    GammaDistance out;
    const int count = std::min<int>(probes, static_cast<int>(modes.size()));
    for (int i = 0; i < count; ++i) {
        TorusField e(g, 1);
        e.at(0, modes[i].second.first, modes[i].second.second) = Complex(1.0, 0.0);
        ParacontrolledFunction a = gamma(e, dm);
        ParacontrolledFunction b = gamma(e, dm_eps);
        out.norm_estimate = std::max(out.norm_estimate, l2_distance(a.u, b.u) / e.l2_norm());
    }
    out.xnorm_distance = x_alpha_distance(dm.pot, dm_eps.pot, dm.calc);
    out.ratio = out.xnorm_distance > 0.0 ? out.norm_estimate / out.xnorm_distance : 0.0;
    return out;
}

}  // namespace smsim
