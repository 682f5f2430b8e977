#include "smsim/spectra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "smsim/calibration.hpp"

namespace smsim {

namespace {

std::vector<double> padded_real_samples(const TorusField& f, int comp, int m) {
    std::vector<Complex> phys = padded_phys_samples(f, comp, m);
    std::vector<double> out(phys.size());
    for (size_t i = 0; i < phys.size(); ++i) out[i] = phys[i].real();
    return out;
}

// deterministic band-limited probe for Hermiticity and power iterations
TorusField probe_field(const GridSpec& grid, uint64_t salt, int band) {
    TorusField f(grid, 1);
    for (int k2 = -band; k2 <= band; ++k2)
        for (int k1 = -band; k1 <= band; ++k1) {
            const double re = gaussian_of_mode(salt, k1, k2, 2);
            const double im = gaussian_of_mode(salt, k1, k2, 3);
            f.at(0, k1, k2) = Complex(re, im);
        }
    return f;
}

}  // namespace

void OperatorHandle::matvec(std::span<const Complex> u, std::span<Complex> out,
                            double shift) const {
    const int n = grid.n;
    if (u.size() != static_cast<size_t>(grid.size()) || out.size() != u.size())
        throw std::invalid_argument("matvec: size mismatch with grid");

    // -Delta + shift part
    for (int i2 = 0; i2 < n; ++i2) {
        const double k2 = grid.mode_of(i2);
        for (int i1 = 0; i1 < n; ++i1) {
            const double k1 = grid.mode_of(i1);
            out[static_cast<size_t>(i2) * n + i1] =
                (k1 * k1 + k2 * k2 + shift) * u[static_cast<size_t>(i2) * n + i1];
        }
    }
    if (is_flat()) return;

    const int m = padded_n;
    const GridSpec padded(m);
    const int nyq = n / 2;

    // pad u and its gradient, transform to the 3/2 grid
    std::vector<Complex> pu(static_cast<size_t>(m) * m, Complex(0.0, 0.0));
    std::vector<Complex> pd1(pu.size(), Complex(0.0, 0.0)), pd2(pu.size(), Complex(0.0, 0.0));
    for (int i2 = 0; i2 < n; ++i2) {
        const int k2 = grid.mode_of(i2);
        const int j2 = k2 >= 0 ? k2 : k2 + m;
        for (int i1 = 0; i1 < n; ++i1) {
            const int k1 = grid.mode_of(i1);
            const int j1 = k1 >= 0 ? k1 : k1 + m;
            const Complex v = u[static_cast<size_t>(i2) * n + i1];
            const size_t dst = static_cast<size_t>(j2) * m + j1;
            pu[dst] = v;
            pd1[dst] = Complex(0.0, k1 == nyq ? 0.0 : k1) * v;
            pd2[dst] = Complex(0.0, k2 == nyq ? 0.0 : k2) * v;
        }
    }
    std::vector<Complex> xu(pu.size()), xd1(pu.size()), xd2(pu.size());
    coef_to_phys(pu, padded, xu);
    coef_to_phys(pd1, padded, xd1);
    coef_to_phys(pd2, padded, xd2);

    for (size_t i = 0; i < xu.size(); ++i) {
        Complex acc = Complex(0.0, 2.0) * (a1_[i] * xd1[i] + a2_[i] * xd2[i]) + w_[i] * xu[i];
        if (has_div_term_) acc += Complex(0.0, div_a_[i]) * xu[i];
        xu[i] = acc;
    }
    phys_to_coef(xu, padded, pu);
    for (int i2 = 0; i2 < n; ++i2) {
        const int k2 = grid.mode_of(i2);
        const int j2 = k2 >= 0 ? k2 : k2 + m;
        for (int i1 = 0; i1 < n; ++i1) {
            const int k1 = grid.mode_of(i1);
            const int j1 = k1 >= 0 ? k1 : k1 + m;
            out[static_cast<size_t>(i2) * n + i1] += pu[static_cast<size_t>(j2) * m + j1];
        }
    }
}

TorusField OperatorHandle::apply(const TorusField& u) const {
    if (!u.is_scalar() || !(u.grid == grid))
        throw std::invalid_argument("OperatorHandle::apply: scalar field on the grid expected");
    TorusField out(grid, 1);
    matvec(u.component(0), out.component(0), 0.0);
    return out;
}

namespace {

// plain Lanczos extreme-eigenvalue estimate (for the default shift)
double lowest_ritz_estimate(const OperatorHandle& op, int iters) {
    const size_t sz = static_cast<size_t>(op.grid.size());
    TorusField v = probe_field(op.grid, 0xC0FFEEull, std::min(op.grid.n / 4, 8));
    std::vector<Complex> vj(v.component(0).begin(), v.component(0).end());
    double nrm = 0.0;
    for (const Complex& c : vj) nrm += std::norm(c);
    nrm = std::sqrt(nrm);
    for (Complex& c : vj) c /= nrm;

    std::vector<Complex> vjm1(sz, Complex(0.0, 0.0)), w(sz);
    std::vector<double> alpha, beta;
    for (int j = 0; j < iters; ++j) {
        op.matvec(vj, w, 0.0);
        Complex a(0.0, 0.0);
        for (size_t i = 0; i < sz; ++i) a += std::conj(vj[i]) * w[i];
        alpha.push_back(a.real());
        for (size_t i = 0; i < sz; ++i)
            w[i] -= a.real() * vj[i] + (j > 0 ? beta[j - 1] * vjm1[i] : Complex(0.0, 0.0));
        double b = 0.0;
        for (const Complex& c : w) b += std::norm(c);
        b = std::sqrt(b);
        if (b < 1e-13) break;
        beta.push_back(b);
        vjm1 = vj;
        for (size_t i = 0; i < sz; ++i) vj[i] = w[i] / b;
    }
    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    return es.eigenvalues()(0);
}

}  // namespace

OperatorHandle assemble(const EnhancedPotential& pot, double k_shift) {
    OperatorHandle op;
    op.grid = pot.A.grid;
    op.pot = std::make_shared<EnhancedPotential>(pot);
    op.padded_n = 3 * op.grid.n / 2;
    op.a1_ = padded_real_samples(pot.A, 0, op.padded_n);
    op.a2_ = padded_real_samples(pot.A, 1, op.padded_n);
    op.w_ = padded_real_samples(pot.A2, 0, op.padded_n);

    TorusField div_a = divergence(pot.A);
    double div_scale = 0.0;
    for (const Complex& c : div_a.coef) div_scale = std::max(div_scale, std::abs(c));
    op.has_div_term_ = div_scale > 1e-12;
    if (op.has_div_term_) op.div_a_ = padded_real_samples(div_a, 0, op.padded_n);

    // Hermiticity probe on band-limited fields
    const int band = std::min(op.grid.n / 8, 8);
    for (uint64_t trial = 0; trial < 3; ++trial) {
        TorusField u = probe_field(op.grid, 11 + trial, band);
        TorusField v = probe_field(op.grid, 101 + trial, band);
        const Complex defect = inner(op.apply(u), v) - inner(u, op.apply(v));
        const double rel = std::abs(defect) / (u.l2_norm() * v.l2_norm());
        op.hermiticity_defect = std::max(op.hermiticity_defect, rel);
    }
    if (op.hermiticity_defect > 1e-10)
        throw std::runtime_error("assemble: Hermiticity probe failed (defect " +
                                 std::to_string(op.hermiticity_defect) +
                                 "); aliasing or complex leakage in the potential");

    if (k_shift > 0.0) {
        op.k_shift = k_shift;
    } else {
        const double lam1 = lowest_ritz_estimate(op, 20);
        op.k_shift = 1.0 + std::max(0.0, -lam1);
    }
    return op;
}

EnhancedPotential unrenormalized(const EnhancedPotential& pot) {
    EnhancedPotential raw = pot;
    raw.A2.component(0)[0] += pot.c_eps;
    raw.c_eps = 0.0;
    return raw;
}

// ---- eigensolvers ------------------------------------------------------------

namespace {

std::vector<std::pair<int, int>> basis_modes(const GridSpec& grid, double lambda_cut) {
    std::vector<std::pair<int, int>> modes;
    for (int k2 = -grid.n / 2 + 1; k2 <= grid.n / 2; ++k2)
        for (int k1 = -grid.n / 2 + 1; k1 <= grid.n / 2; ++k1)
            if (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2 <= lambda_cut)
                modes.push_back({k1, k2});
    std::stable_sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
        const double ka = static_cast<double>(a.first) * a.first +
                          static_cast<double>(a.second) * a.second;
        const double kb = static_cast<double>(b.first) * b.first +
                          static_cast<double>(b.second) * b.second;
        if (ka != kb) return ka < kb;
        return a < b;
    });
    return modes;
}

double auto_lambda_cut(const GridSpec& grid, int m_count) {
    const double lam_est = m_count / pi + 3.0 * std::sqrt(static_cast<double>(m_count)) + 4.0;
    const double cut = std::max(3.0 * lam_est, 60.0);
    return std::min(cut, static_cast<double>(grid.n) * grid.n / 4.0);
}

SpectrumResult eigensolve_dense(const OperatorHandle& op, int m_count,
                                const EigensolveOptions& opts) {
    const GridSpec& grid = op.grid;
    double cut = opts.basis_lambda_cut;
    if (cut <= 0.0) cut = auto_lambda_cut(grid, m_count);
    std::vector<std::pair<int, int>> modes;
    if (std::isinf(cut)) {
        modes = basis_modes(grid, std::numeric_limits<double>::max());
    } else {
        modes = basis_modes(grid, cut);
    }
    const int dim = static_cast<int>(modes.size());
    if (m_count > dim)
        throw std::invalid_argument("eigensolve: basis smaller than requested count");

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const EnhancedPotential* pot = op.pot.get();
    TorusField div_a = pot ? divergence(pot->A) : TorusField();
    for (int r = 0; r < dim; ++r) {
        const auto [r1, r2] = modes[r];
        for (int c = 0; c < dim; ++c) {
            const auto [c1, c2] = modes[c];
            Complex v(0.0, 0.0);
            if (r == c) v += static_cast<double>(r1) * r1 + static_cast<double>(r2) * r2;
            if (pot) {
                const int q1 = r1 - c1, q2 = r2 - c2;
                // 2iA.grad: coefficient 2i * A_hat(q) . (i c) = -2 A_hat(q).c
                v += -2.0 * (pot->A.mode_or_zero(0, q1, q2) * static_cast<double>(c1) +
                             pot->A.mode_or_zero(1, q1, q2) * static_cast<double>(c2));
                v += pot->A2.mode_or_zero(0, q1, q2);
                v += Complex(0.0, 1.0) * div_a.mode_or_zero(0, q1, q2);
            }
            h(r, c) = v;
        }
    }
    // numerical symmetrization (defect is at rounding level by construction)
    h = 0.5 * (h + h.adjoint()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolve: dense solver failed");

    SpectrumResult out;
    out.method = "dense";
    out.basis_size = dim;
    out.count = std::min(m_count, dim);
    out.k_shift = op.k_shift;
    out.n = grid.n;
    if (pot) {
        out.seed = pot->provenance.seed;
        out.epsilon = pot->provenance.epsilon;
    }
    out.eigenvalues.resize(out.count);
    out.residuals.resize(out.count);
    for (int i = 0; i < out.count; ++i) {
        out.eigenvalues[i] = es.eigenvalues()(i);
        const Eigen::VectorXcd y = es.eigenvectors().col(i);
        out.residuals[i] = (h * y - es.eigenvalues()(i) * y).norm();
        if (opts.keep_vectors) {
            TorusField u(grid, 1);
            for (int r = 0; r < dim; ++r) u.at(0, modes[r].first, modes[r].second) = y(r);
            u *= 1.0 / two_pi;  // unit physical L^2 norm
            out.eigenfunctions.push_back(std::move(u));
        }
    }
    return out;
}

// preconditioned CG for (H + sigma) x = b, Fourier-diagonal preconditioner
int pcg_solve(const OperatorHandle& op, double sigma, std::span<const Complex> b,
              std::span<Complex> x, double tol, int max_iter) {
    const GridSpec& grid = op.grid;
    const size_t sz = b.size();
    std::vector<Complex> r(b.begin(), b.end()), z(sz), p(sz), hp(sz);
    std::fill(x.begin(), x.end(), Complex(0.0, 0.0));

    auto precond = [&](std::span<const Complex> in, std::span<Complex> out) {
        for (int i2 = 0; i2 < grid.n; ++i2) {
            const double k2 = grid.mode_of(i2);
            for (int i1 = 0; i1 < grid.n; ++i1) {
                const double k1 = grid.mode_of(i1);
                out[static_cast<size_t>(i2) * grid.n + i1] =
                    in[static_cast<size_t>(i2) * grid.n + i1] / (k1 * k1 + k2 * k2 + sigma);
            }
        }
    };

    double b_nrm = 0.0;
    for (const Complex& c : b) b_nrm += std::norm(c);
    b_nrm = std::sqrt(b_nrm);
    if (b_nrm == 0.0) return 0;

    precond(r, z);
    p.assign(z.begin(), z.end());
    Complex rz(0.0, 0.0);
    for (size_t i = 0; i < sz; ++i) rz += std::conj(r[i]) * z[i];
    for (int it = 1; it <= max_iter; ++it) {
        op.matvec(p, hp, sigma);
        Complex php(0.0, 0.0);
        for (size_t i = 0; i < sz; ++i) php += std::conj(p[i]) * hp[i];
        if (php.real() <= 0.0)
            throw std::runtime_error("pcg_solve: lost positive definiteness; raise k_shift");
        const double a = rz.real() / php.real();
        double r_nrm = 0.0;
        for (size_t i = 0; i < sz; ++i) {
            x[i] += a * p[i];
            r[i] -= a * hp[i];
            r_nrm += std::norm(r[i]);
        }
        if (std::sqrt(r_nrm) < tol * b_nrm) return it;
        precond(r, z);
        Complex rz_new(0.0, 0.0);
        for (size_t i = 0; i < sz; ++i) rz_new += std::conj(r[i]) * z[i];
        const double beta = rz_new.real() / rz.real();
        rz = rz_new;
        for (size_t i = 0; i < sz; ++i) p[i] = z[i] + beta * p[i];
    }
    throw std::runtime_error("pcg_solve: no convergence within iteration budget");
}

SpectrumResult eigensolve_lanczos(const OperatorHandle& op, int m_count,
                                  const EigensolveOptions& opts) {
    const GridSpec& grid = op.grid;
    const size_t sz = static_cast<size_t>(grid.size());
    const double sigma = op.k_shift;
    const int max_krylov =
        opts.max_krylov > 0 ? opts.max_krylov : std::min<int>(static_cast<int>(sz), 4 * m_count + 40);

    std::vector<std::vector<Complex>> basis;
    std::vector<double> alpha, beta;

    TorusField v0 = probe_field(grid, 0x5eedull, std::min(grid.n / 4, 10));
    std::vector<Complex> v(v0.component(0).begin(), v0.component(0).end());
    double nrm = 0.0;
    for (const Complex& c : v) nrm += std::norm(c);
    nrm = std::sqrt(nrm);
    for (Complex& c : v) c /= nrm;
    basis.push_back(v);

    std::vector<Complex> w(sz);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    int converged = 0;
    for (int j = 0; j < max_krylov; ++j) {
        pcg_solve(op, sigma, basis[j], w, opts.cg_tol, 10000);
        Complex a(0.0, 0.0);
        for (size_t i = 0; i < sz; ++i) a += std::conj(basis[j][i]) * w[i];
        alpha.push_back(a.real());
        // full reorthogonalization, twice through the basis
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) {
                Complex c(0.0, 0.0);
                for (size_t i = 0; i < sz; ++i) c += std::conj(q[i]) * w[i];
                for (size_t i = 0; i < sz; ++i) w[i] -= c * q[i];
            }
        double b = 0.0;
        for (const Complex& c : w) b += std::norm(c);
        b = std::sqrt(b);

        const int k = static_cast<int>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        tri.compute(t);
        converged = 0;
        for (int i = k - 1; i >= 0; --i) {  // largest theta = lowest lambda
            const double ritz_res = b * std::abs(tri.eigenvectors()(k - 1, i));
            if (ritz_res < opts.ritz_tol * std::max(1.0, std::abs(tri.eigenvalues()(i))))
                ++converged;
            else
                break;
        }
        if (converged >= m_count || b < 1e-13 || k == static_cast<int>(sz)) break;
        beta.push_back(b);
        for (Complex& c : w) c /= b;
        basis.push_back(w);
    }
    if (converged < m_count)
        throw std::runtime_error("eigensolve: Lanczos iteration budget exceeded with " +
                                 std::to_string(converged) + "/" + std::to_string(m_count) +
                                 " converged");

    const int k = static_cast<int>(alpha.size());
    SpectrumResult out;
    out.method = "lanczos";
    out.basis_size = k;
    out.count = m_count;
    out.k_shift = op.k_shift;
    out.n = grid.n;
    if (op.pot) {
        out.seed = op.pot->provenance.seed;
        out.epsilon = op.pot->provenance.epsilon;
    }
    for (int i = 0; i < m_count; ++i) {
        const int col = k - 1 - i;  // descending theta
        const double theta = tri.eigenvalues()(col);
        out.eigenvalues.push_back(1.0 / theta - sigma);
        TorusField u(grid, 1);
        auto blk = u.component(0);
        for (int jj = 0; jj < k; ++jj) {
            const double y = tri.eigenvectors()(jj, col);
            for (size_t ii = 0; ii < sz; ++ii) blk[ii] += y * basis[jj][ii];
        }
        double un = 0.0;
        for (const Complex& c : blk) un += std::norm(c);
        un = std::sqrt(un);
        for (Complex& c : blk) c /= un * two_pi;
        TorusField hu = op.apply(u);
        TorusField diff = hu - out.eigenvalues.back() * u;
        out.residuals.push_back(diff.l2_norm());
        if (opts.keep_vectors) out.eigenfunctions.push_back(std::move(u));
    }
    // ascending order
    std::vector<int> idx(out.count);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a2, int b2) {
        return out.eigenvalues[a2] < out.eigenvalues[b2];
    });
    SpectrumResult sorted = out;
    for (int i = 0; i < out.count; ++i) {
        sorted.eigenvalues[i] = out.eigenvalues[idx[i]];
        sorted.residuals[i] = out.residuals[idx[i]];
        if (opts.keep_vectors) sorted.eigenfunctions[i] = out.eigenfunctions[idx[i]];
    }
    return sorted;
}

}  // namespace

SpectrumResult eigensolve(const OperatorHandle& op, int m_count, const EigensolveOptions& opts) {
    if (m_count < 1 || m_count > op.grid.size() / 4)
        throw std::invalid_argument("eigensolve: need 1 <= M <= n^2/4");
    return opts.method == EigenMethod::Dense ? eigensolve_dense(op, m_count, opts)
                                             : eigensolve_lanczos(op, m_count, opts);
}

std::vector<double> laplacian_eigenvalues(int m_count) {
    const int r = static_cast<int>(std::ceil(std::sqrt(m_count + 4.0))) + 3;
    std::vector<double> lams;
    for (int k2 = -r; k2 <= r; ++k2)
        for (int k1 = -r; k1 <= r; ++k1)
            lams.push_back(static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
    std::sort(lams.begin(), lams.end());
    lams.resize(m_count);
    return lams;
}

int lattice_count(double lambda) {
    const int r = static_cast<int>(std::floor(std::sqrt(std::max(lambda, 0.0))));
    int count = 0;
    for (int k2 = -r; k2 <= r; ++k2)
        for (int k1 = -r; k1 <= r; ++k1)
            if (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2 <= lambda) ++count;
    return count;
}

SandwichReport sandwich_check(const SpectrumResult& spec, const EnhancedPotential& pot,
                              double delta, double s, const HeatCalculus& calc) {
    SandwichReport rep;
    DomainMap dm = build_domain_map(pot, s, calc);
    const EstimateConstants c = estimate_constants(dm, delta);
    rep.m_delta1 = c.m_delta1;
    rep.m_delta2 = c.m_delta2;
    rep.m_plus = c.m_plus;
    rep.m_minus = c.m_minus;
    rep.constants_valid = c.valid0 && c.valid1 && c.valid2;

    const std::vector<double> flat = laplacian_eigenvalues(spec.count);
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    for (int i = 0; i < spec.count; ++i) {
        SandwichReport::Row row;
        row.n = i + 1;
        row.lambda_flat = flat[i];
        row.lambda_pot = spec.eigenvalues[i];
        row.lower_bound = c.m_minus * flat[i] - c.m_delta1;
        row.upper_bound = c.m_plus * flat[i] + c.upper_shift + c.m_delta2;
        row.lower_ok = row.lambda_pot >= row.lower_bound;
        row.upper_ok = row.lambda_pot <= row.upper_bound;
        rep.lower_failures += row.lower_ok ? 0 : 1;
        rep.upper_failures += row.upper_ok ? 0 : 1;
        rep.rows.push_back(row);
        sx += flat[i];
        sy += spec.eigenvalues[i];
        sxx += flat[i] * flat[i];
        sxy += flat[i] * spec.eigenvalues[i];
    }
    const double m = spec.count;
    const double denom = m * sxx - sx * sx;
    rep.fitted_slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    return rep;
}

WeylReport weyl_counting(const SpectrumResult& spec) {
    if (spec.eigenvalues.empty() || spec.eigenvalues.back() < 40.0)
        throw std::invalid_argument("weyl_counting: spectrum reaches only lambda = " +
                                    std::to_string(spec.eigenvalues.empty()
                                                       ? 0.0
                                                       : spec.eigenvalues.back()) +
                                    ", need lambda_max >= 40");
    WeylReport rep;
    const int m = static_cast<int>(spec.eigenvalues.size());
    for (int i = 0; i < m; ++i) {
        const double lam = spec.eigenvalues[i];
        if (i + 1 < m && spec.eigenvalues[i + 1] == lam) continue;
        WeylReport::Row row;
        row.lambda = lam;
        row.count = i + 1;
        row.ratio = lam > 0.0 ? (i + 1) / lam : 0.0;
        rep.rows.push_back(row);
    }
    rep.lambda_max = spec.eigenvalues.back();
    rep.ratio_at_max = m / rep.lambda_max;
    double acc = 0.0;
    int cnt = 0;
    for (const auto& row : rep.rows)
        if (row.lambda >= 0.5 * rep.lambda_max) {
            acc += row.ratio;
            ++cnt;
        }
    rep.plateau = cnt > 0 ? acc / cnt : 0.0;
    return rep;
}

double resolvent_distance(const OperatorHandle& op1, const OperatorHandle& op2, double k_shift) {
    if (!(op1.grid == op2.grid))
        throw std::invalid_argument("resolvent_distance: grids differ");
    const size_t sz = static_cast<size_t>(op1.grid.size());
    TorusField z0 = probe_field(op1.grid, 0xD1FFull, std::min(op1.grid.n / 4, 10));
    std::vector<Complex> z(z0.component(0).begin(), z0.component(0).end());
    double nrm = 0.0;
    for (const Complex& c : z) nrm += std::norm(c);
    nrm = std::sqrt(nrm);
    for (Complex& c : z) c /= nrm;

    std::vector<Complex> r1(sz), r2(sz), dz(sz);
    double estimate = 0.0;
    for (int it = 0; it < 60; ++it) {
        pcg_solve(op1, k_shift, z, r1, 1e-8, 10000);
        pcg_solve(op2, k_shift, z, r2, 1e-8, 10000);
        Complex rayleigh(0.0, 0.0);
        double dn = 0.0;
        for (size_t i = 0; i < sz; ++i) {
            dz[i] = r1[i] - r2[i];
            rayleigh += std::conj(z[i]) * dz[i];
            dn += std::norm(dz[i]);
        }
        dn = std::sqrt(dn);
        const double next = std::abs(rayleigh.real());
        const bool settled = it > 3 && std::abs(next - estimate) < 5e-3 * std::max(next, 1e-300);
        estimate = next;
        if (dn < 1e-14) return 0.0;  // identical operators
        if (settled) break;
        for (size_t i = 0; i < sz; ++i) z[i] = dz[i] / dn;
    }
    return estimate;
}

GaugeReport gauge_experiment(const EnhancedPotential& pot, const TorusField& f, int m_count,
                             const HeatCalculus& calc) {
    EnhancedPotential shifted = gauge_shift(pot, f, calc);
    OperatorHandle op1 = assemble(pot);
    OperatorHandle op2 = assemble(shifted);

    EigensolveOptions opts;
    opts.keep_vectors = true;
    SpectrumResult s1 = eigensolve(op1, m_count, opts);
    opts.keep_vectors = false;
    SpectrumResult s2 = eigensolve(op2, m_count, opts);

    GaugeReport rep;
    rep.lambda_base = s1.eigenvalues;
    rep.lambda_shifted = s2.eigenvalues;

    // e^{if} on the padded grid for the intertwining check
    const int m = 3 * pot.A.grid.n / 2;
    std::vector<double> f_phys = padded_real_samples(f, 0, m);
    std::vector<Complex> phase(f_phys.size());
    for (size_t i = 0; i < phase.size(); ++i)
        phase[i] = std::exp(Complex(0.0, f_phys[i]));

    for (int i = 0; i < m_count; ++i) {
        const double gap = std::abs(s1.eigenvalues[i] - s2.eigenvalues[i]) /
                           std::max(1.0, std::abs(s1.eigenvalues[i]));
        rep.rel_gap.push_back(gap);
        rep.max_rel_gap = std::max(rep.max_rel_gap, gap);

        // v = e^{if} u_n via padded collocation
        const TorusField& u = s1.eigenfunctions[i];
        std::vector<Complex> u_phys = padded_phys_samples(u, 0, m);
        std::vector<Complex> prod(phase.size());
        for (size_t jj = 0; jj < phase.size(); ++jj) prod[jj] = phase[jj] * u_phys[jj];
        GridSpec padded(m);
        std::vector<Complex> coef(prod.size());
        phys_to_coef(prod, padded, coef);
        TorusField v(u.grid, 1);
        truncate_padded_coef(coef, m, u.grid, v.component(0));
        TorusField hv = op2.apply(v);
        hv -= s1.eigenvalues[i] * v;
        rep.intertwine_residual.push_back(hv.l2_norm() / std::max(v.l2_norm(), 1e-300));
        rep.max_intertwine_residual =
            std::max(rep.max_intertwine_residual, rep.intertwine_residual.back());
    }
    return rep;
}

StabilityTable eigenvalue_stability(uint64_t seed, const GridSpec& grid, double alpha,
                                    const std::vector<double>& eps_ladder, int m_count,
                                    const HeatCalculus& calc, MollifierKind kind,
                                    bool renormalize) {
    if (eps_ladder.size() < 2)
        throw std::invalid_argument("eigenvalue_stability: need at least two ladder rungs");
    StabilityTable table;
    table.renormalized = renormalize;
    NoiseSample xi = sample_white_noise(seed, grid);
    for (double eps : eps_ladder) {
        Mollifier moll(kind, eps);
        EnhancedPotential pot = enhance(xi, moll, alpha, calc);
        table.c_eps.push_back(pot.c_eps);
        if (!renormalize) pot = unrenormalized(pot);
        OperatorHandle op = assemble(pot);
        SpectrumResult spec = eigensolve(op, m_count, {});
        table.epsilons.push_back(eps);
        table.lambdas.push_back(spec.eigenvalues);
    }
    for (size_t j = 0; j + 1 < table.lambdas.size(); ++j) {
        std::vector<double> diffs(m_count);
        double acc = 0.0;
        for (int i = 0; i < m_count; ++i) {
            diffs[i] = std::abs(table.lambdas[j][i] - table.lambdas[j + 1][i]);
            acc += diffs[i];
        }
        table.cauchy_diffs.push_back(std::move(diffs));
        table.mean_diff_per_step.push_back(acc / m_count);
    }
    return table;
}

}  // namespace smsim
