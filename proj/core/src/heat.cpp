#include "smsim/heat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smsim {

namespace {

double legendre_newton_root(int g, int i) {
    double x = std::cos(pi * (i + 0.75) / (g + 0.5));
    for (int it = 0; it < 100; ++it) {
        // evaluate P_g and P_g' by recurrence
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= g; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        const double dp = g * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
    }
    return x;
}

}  // namespace

std::vector<QuadNode> log_gauss_nodes(double t_lo, double t_hi, int count) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || count < 1)
        throw std::invalid_argument("log_gauss_nodes: need 0 < t_lo < t_hi and count >= 1");
    const double ua = std::log(t_lo), ub = std::log(t_hi);
    const double c = 0.5 * (ua + ub), h = 0.5 * (ub - ua);
    std::vector<QuadNode> nodes(count);
    for (int i = 0; i < count; ++i) {
        const double x = legendre_newton_root(count, i);
        // recompute derivative for the weight
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= count; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        const double dp = count * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = {std::exp(c + h * x), w * h};
    }
    std::sort(nodes.begin(), nodes.end(), [](const QuadNode& a, const QuadNode& b) { return a.t < b.t; });
    return nodes;
}

HeatCalculus::HeatCalculus(GridSpec grid_, int b_, int node_count_, double t_min_)
    : grid(grid_), b(b_), node_count(node_count_), t_min(t_min_) {
    if (b < 2 || b > 6) throw std::invalid_argument("HeatCalculus: b must be in [2,6]");
    if (node_count < 8) throw std::invalid_argument("HeatCalculus: need at least 8 nodes");
    if (!(t_min > 0.0) || t_min > 0.1)
        throw std::invalid_argument("HeatCalculus: t_min must be in (0, 0.1]");
    nodes = log_gauss_nodes(t_min, 1.0, node_count);
}

namespace {

double factorial(int m) {
    double r = 1.0;
    for (int j = 2; j <= m; ++j) r *= j;
    return r;
}

double q_mult(double t, double kappa, int b) {
    const double x = t * kappa;
    if (x > 750.0) return 0.0;
    return std::pow(x, b) * std::exp(-x) / factorial(b - 1);
}

double p_mult(double t, double kappa, int b) {
    const double x = t * kappa;
    if (x > 750.0) return 0.0;
    double poly = 1.0, term = 1.0;
    for (int j = 1; j < b; ++j) {
        term *= x / j;
        poly += term;
    }
    return poly * std::exp(-x);
}

}  // namespace

double HeatCalculus::q_hat(double t, double kappa) const { return q_mult(t, kappa, b); }
double HeatCalculus::p_hat(double t, double kappa) const { return p_mult(t, kappa, b); }

std::vector<QuadNode> HeatCalculus::nodes_upto(double s) const {
    if (s >= 1.0) return nodes;
    if (s < t_min)
        throw std::invalid_argument("nodes_upto: scale s below the smallest quadrature node");
    const double ratio = (std::log(s) - std::log(t_min)) / (-std::log(t_min));
    const int count = std::clamp(static_cast<int>(std::lround(node_count * ratio)), 16, node_count);
    return log_gauss_nodes(t_min, s, count);
}

TorusField q_apply(const TorusField& f, double t, int b) {
    if (!(t > 0.0) || t > 1.0) throw std::invalid_argument("q_apply: t must be in (0,1]");
    if (b < 1) throw std::invalid_argument("q_apply: b must be >= 1");
    return apply_real_multiplier(f, [t, b](int k1, int k2) {
        return q_mult(t, static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2, b);
    });
}

TorusField p_apply(const TorusField& f, double t, int b) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("p_apply: t must be in [0,1]");
    if (b < 1) throw std::invalid_argument("p_apply: b must be >= 1");
    if (t == 0.0) return f;
    return apply_real_multiplier(f, [t, b](int k1, int k2) {
        return p_mult(t, static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2, b);
    });
}

// ---- bony engine -------------------------------------------------------------

namespace {

struct Channels {
    bool fg = false;   // P_f g
    bool gf = false;   // P_g f
    bool res = false;  // Pi(f,g)
    bool rem = false;  // remainder
};

void require_scalar_pair(const TorusField& f, const TorusField& g) {
    if (!(f.grid == g.grid)) throw std::invalid_argument("paraproduct: grid mismatch");
    if (!f.is_scalar() || !g.is_scalar())
        throw std::invalid_argument("paraproduct: scalar fields expected");
}

// phys samples of (multiplier in kappa) f
std::vector<Complex> filtered_phys(const TorusField& f, double t, int b, bool q_side) {
    const GridSpec& g = f.grid;
    std::vector<Complex> buf(static_cast<size_t>(g.size()));
    auto src = f.component(0);
    for (int i2 = 0; i2 < g.n; ++i2) {
        const double k2 = g.mode_of(i2);
        for (int i1 = 0; i1 < g.n; ++i1) {
            const double k1 = g.mode_of(i1);
            const double kappa = k1 * k1 + k2 * k2;
            const double m = q_side ? q_mult(t, kappa, b) : p_mult(t, kappa, b);
            buf[static_cast<size_t>(i2) * g.n + i1] = m * src[static_cast<size_t>(i2) * g.n + i1];
        }
    }
    std::vector<Complex> phys(buf.size());
    coef_to_phys(buf, g, phys);
    return phys;
}

void accumulate_filtered(std::vector<Complex>& acc, std::span<const Complex> phys,
                         const GridSpec& g, double t, int b, bool q_side, double w) {
    std::vector<Complex> coef(phys.size());
    phys_to_coef(phys, g, coef);
    for (int i2 = 0; i2 < g.n; ++i2) {
        const double k2 = g.mode_of(i2);
        for (int i1 = 0; i1 < g.n; ++i1) {
            const double k1 = g.mode_of(i1);
            const double kappa = k1 * k1 + k2 * k2;
            const double m = q_side ? q_mult(t, kappa, b) : p_mult(t, kappa, b);
            acc[static_cast<size_t>(i2) * g.n + i1] += (w * m) * coef[static_cast<size_t>(i2) * g.n + i1];
        }
    }
}

BonyParts bony_engine(const TorusField& f, const TorusField& g, const HeatCalculus& calc,
                      const std::vector<QuadNode>& nodes, Channels ch) {
    require_scalar_pair(f, g);
    const GridSpec grid = f.grid;
    const size_t sz = static_cast<size_t>(grid.size());
    const int b = calc.b;

    std::vector<Complex> acc_fg, acc_gf, acc_res, acc_rem;
    if (ch.fg) acc_fg.assign(sz, Complex(0.0, 0.0));
    if (ch.gf) acc_gf.assign(sz, Complex(0.0, 0.0));
    if (ch.res) acc_res.assign(sz, Complex(0.0, 0.0));
    if (ch.rem) acc_rem.assign(sz, Complex(0.0, 0.0));

    std::vector<Complex> prod(sz);
    for (const QuadNode& nd : nodes) {
        const bool need_fp = ch.fg || ch.rem;
        const bool need_gq = ch.fg || ch.res || ch.rem;
        const bool need_fq = ch.gf || ch.res || ch.rem;
        const bool need_gp = ch.gf || ch.rem;
        std::vector<Complex> fp, fq, gp, gq;
        if (need_fp) fp = filtered_phys(f, nd.t, b, false);
        if (need_fq) fq = filtered_phys(f, nd.t, b, true);
        if (need_gp) gp = filtered_phys(g, nd.t, b, false);
        if (need_gq) gq = filtered_phys(g, nd.t, b, true);

        if (ch.fg) {
            for (size_t i = 0; i < sz; ++i) prod[i] = fp[i] * gq[i];
            accumulate_filtered(acc_fg, prod, grid, nd.t, b, true, nd.w);
        }
        if (ch.gf) {
            for (size_t i = 0; i < sz; ++i) prod[i] = fq[i] * gp[i];
            accumulate_filtered(acc_gf, prod, grid, nd.t, b, true, nd.w);
        }
        if (ch.res) {
            for (size_t i = 0; i < sz; ++i) prod[i] = fq[i] * gq[i];
            accumulate_filtered(acc_res, prod, grid, nd.t, b, false, nd.w);
        }
        if (ch.rem) {
            // regrouping corrections: the raw product formula integrand minus
            // the three representatives above
            for (size_t i = 0; i < sz; ++i) prod[i] = fp[i] * gp[i] - fp[i] * gq[i] - fq[i] * gp[i];
            accumulate_filtered(acc_rem, prod, grid, nd.t, b, true, nd.w);
            for (size_t i = 0; i < sz; ++i) prod[i] = fq[i] * gp[i] + fp[i] * gq[i] - fq[i] * gq[i];
            accumulate_filtered(acc_rem, prod, grid, nd.t, b, false, nd.w);
        }
    }

    BonyParts out;
    auto take = [&](std::vector<Complex>& acc) {
        TorusField h(grid, 1);
        h.coef = std::move(acc);
        h.real_valued = f.real_valued && g.real_valued;
        return h;
    };
    if (ch.fg) out.para_fg = take(acc_fg);
    if (ch.gf) out.para_gf = take(acc_gf);
    if (ch.res) out.resonant = take(acc_res);
    if (ch.rem) {
        out.remainder = take(acc_rem);
        // t = 1 boundary term P_1(P_1 f . P_1 g)
        out.remainder += p_apply(pointwise_product(p_apply(f, 1.0, b), p_apply(g, 1.0, b)), 1.0, b);
    }
    return out;
}

}  // namespace

BonyParts bony_decompose(const TorusField& f, const TorusField& g, const HeatCalculus& calc) {
    return bony_engine(f, g, calc, calc.nodes, {true, true, true, true});
}

TorusField paraproduct(const TorusField& f, const TorusField& g, const HeatCalculus& calc) {
    return bony_engine(f, g, calc, calc.nodes, {true, false, false, false}).para_fg;
}

TorusField resonant(const TorusField& f, const TorusField& g, const HeatCalculus& calc) {
    return bony_engine(f, g, calc, calc.nodes, {false, false, true, false}).resonant;
}

TorusField bony_remainder(const TorusField& f, const TorusField& g, const HeatCalculus& calc) {
    return bony_engine(f, g, calc, calc.nodes, {false, false, false, true}).remainder;
}

TorusField resonant_full(const TorusField& f, const TorusField& g, const HeatCalculus& calc) {
    BonyParts parts = bony_engine(f, g, calc, calc.nodes, {false, false, true, true});
    parts.resonant += parts.remainder;
    return parts.resonant;
}

TorusField paraproduct_truncated(const TorusField& f, const TorusField& g, double s,
                                 const HeatCalculus& calc) {
    if (!(s > 0.0) || s > 1.0)
        throw std::invalid_argument("paraproduct_truncated: s must be in (0,1]");
    return bony_engine(f, g, calc, calc.nodes_upto(s), {true, false, false, false}).para_fg;
}

TorusField intertwined_paraproduct(const TorusField& f, const TorusField& g,
                                   const HeatCalculus& calc) {
    return inverse_laplacian(paraproduct(f, laplacian(g), calc),
                             InverseLaplacianMode::ExactFourier);
}

TorusField truncated_paraproduct(const TorusField& f, const TorusField& g, double s,
                                 const HeatCalculus& calc) {
    return inverse_laplacian(paraproduct_truncated(f, laplacian(g), s, calc),
                             InverseLaplacianMode::ExactFourier);
}

Complex corrector_f(const TorusField& a, const TorusField& b, const TorusField& c,
                    const HeatCalculus& calc) {
    return inner(a, resonant(b, c, calc)) - inner(paraproduct(a, b, calc), c);
}

TorusField commutator_b(const TorusField& a, const TorusField& b_vec, const HeatCalculus& calc) {
    if (b_vec.components != 2)
        throw std::invalid_argument("commutator_b: 2-component field expected");
    TorusField pb1 = paraproduct(a, extract_component(b_vec, 0), calc);
    TorusField pb2 = paraproduct(a, extract_component(b_vec, 1), calc);
    TorusField out = divergence(make_vector_field(pb1, pb2));
    out -= paraproduct(a, divergence(b_vec), calc);
    return out;
}

// ---- besov norms --------------------------------------------------------------

namespace {

void validate_besov_args(double alpha, double p, double q, int b) {
    const bool sobolev = (p == 2.0 && q == 2.0);
    const bool holder = (std::isinf(p) && std::isinf(q));
    if (!sobolev && !holder)
        throw std::invalid_argument("besov_norm: supported (p,q) are (2,2) and (inf,inf)");
    if (std::abs(alpha) >= 2.0 * b)
        throw std::invalid_argument("besov_norm: need |alpha| < 2b");
}

double lp_norm_component(const TorusField& f, int comp, double p) {
    if (p == 2.0) {
        double s = 0.0;
        for (const Complex& c : f.component(comp)) s += std::norm(c);
        return two_pi * std::sqrt(s);
    }
    std::vector<Complex> phys = to_phys(f, comp);
    double m = 0.0;
    for (const Complex& v : phys) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

BesovNormReport besov_norm(const TorusField& f, double alpha, double p, double q,
                           const HeatCalculus& calc) {
    validate_besov_args(alpha, p, q, calc.b);
    BesovNormReport rep;
    rep.alpha = alpha;
    rep.p = p;
    rep.q = q;
    rep.per_scale.assign(calc.nodes.size(), {0.0, 0.0});

    const GridSpec& g = f.grid;
    double value = 0.0;
    for (int comp = 0; comp < f.components; ++comp) {
        // base term ||e^{Delta} f||_p
        TorusField base(g, 1);
        {
            auto src = f.component(comp);
            auto dst = base.component(0);
            for (int i2 = 0; i2 < g.n; ++i2) {
                const double k2 = g.mode_of(i2);
                for (int i1 = 0; i1 < g.n; ++i1) {
                    const double k1 = g.mode_of(i1);
                    const double kappa = k1 * k1 + k2 * k2;
                    dst[static_cast<size_t>(i2) * g.n + i1] =
                        std::exp(-std::min(kappa, 750.0)) * src[static_cast<size_t>(i2) * g.n + i1];
                }
            }
        }
        const double base_norm = lp_norm_component(base, 0, p);

        double agg = 0.0;  // q = 2: sum of w_j x_j^2;  q = inf: max x_j
        TorusField scratch(g, 1);
        for (size_t j = 0; j < calc.nodes.size(); ++j) {
            const double t = calc.nodes[j].t;
            auto src = f.component(comp);
            auto dst = scratch.component(0);
            for (int i2 = 0; i2 < g.n; ++i2) {
                const double k2 = g.mode_of(i2);
                for (int i1 = 0; i1 < g.n; ++i1) {
                    const double k1 = g.mode_of(i1);
                    const double kappa = k1 * k1 + k2 * k2;
                    dst[static_cast<size_t>(i2) * g.n + i1] =
                        calc.q_hat(t, kappa) * src[static_cast<size_t>(i2) * g.n + i1];
                }
            }
            const double x = std::pow(t, -alpha / 2.0) * lp_norm_component(scratch, 0, p);
            rep.per_scale[j].first = t;
            rep.per_scale[j].second = std::max(rep.per_scale[j].second, x);
            if (q == 2.0)
                agg += calc.nodes[j].w * x * x;
            else
                agg = std::max(agg, x);
        }
        const double comp_value = (q == 2.0) ? std::sqrt(base_norm * base_norm + agg)
                                             : base_norm + agg;
        value = std::max(value, comp_value);
    }
    rep.value = value;
    return rep;
}

double besov_value(const TorusField& f, double alpha, double p, double q,
                   const HeatCalculus& calc) {
    return besov_norm(f, alpha, p, q, calc).value;
}

}  // namespace smsim
