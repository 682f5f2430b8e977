#pragma once

#include <memory>
#include <string>
#include <vector>

#include "smsim/domain.hpp"
#include "smsim/noise.hpp"

namespace smsim {

/** Matrix-free application of H = -Delta + 2iA.grad + A^2 (+ i div A when the
 *  potential is not divergence-free), derivatives in Fourier and products on
 *  the 3/2 zero-padded grid.  A^2 is the potential's renormalized square. */
class OperatorHandle {
  public:
    OperatorHandle() = default;

    GridSpec grid;
    double k_shift = 1.0;        // positive-definite shift for H + k
    double hermiticity_defect = 0.0;
    std::shared_ptr<const EnhancedPotential> pot;

    // out = (H + shift) u for scalar coefficient blocks on the full grid
    void matvec(std::span<const Complex> u, std::span<Complex> out, double shift = 0.0) const;
    TorusField apply(const TorusField& u) const;

    bool is_flat() const { return pot == nullptr; }

  private:
    friend OperatorHandle assemble(const EnhancedPotential&, double);
    int padded_n = 0;
    std::vector<double> a1_, a2_, w_, div_a_;  // padded real-space samples
    bool has_div_term_ = false;
};

/** Builds the matvec closure; runs a Hermiticity probe on band-limited random
 *  fields and throws if the defect exceeds 1e-10 (aliasing or complex
 *  leakage).  Pass k_shift <= 0 to use 1 + max(0, -lambda_1 estimate) from a
 *  short Lanczos run. */
OperatorHandle assemble(const EnhancedPotential& pot, double k_shift = 0.0);

// potential with the renormalization undone (A^2 + c_eps, c_eps = 0): the
// ablation operator whose eigenvalue ladder fails the Cauchy test
EnhancedPotential unrenormalized(const EnhancedPotential& pot);

enum class EigenMethod { Dense, Lanczos };

struct EigensolveOptions {
    EigenMethod method = EigenMethod::Dense;
    /** Dense Galerkin basis {k : |k|^2 <= cut}; 0 picks a cut from M with a
     *  safety margin, +inf uses every grid mode. */
    double basis_lambda_cut = 0.0;
    bool keep_vectors = false;
    int max_krylov = 0;       // 0: picked from M
    double cg_tol = 1e-10;
    double ritz_tol = 1e-9;
};

struct SpectrumResult {
    std::vector<double> eigenvalues;  // ascending
    std::vector<double> residuals;    // ||H u - lambda u|| per pair
    std::vector<TorusField> eigenfunctions;  // filled when keep_vectors
    int count = 0;
    std::string method;
    int basis_size = 0;
    double k_shift = 0.0;
    // provenance
    uint64_t seed = 0;
    double epsilon = 0.0;
    int n = 0;
};

SpectrumResult eigensolve(const OperatorHandle& op, int m_count,
                          const EigensolveOptions& opts = {});

// first m eigenvalues of -Delta on the torus (lattice |k|^2, ascending)
std::vector<double> laplacian_eigenvalues(int m_count);

struct SandwichReport {
    struct Row {
        int n = 0;
        double lambda_flat = 0.0;   // lambda_n of -Delta
        double lambda_pot = 0.0;    // lambda_n(A_eps)
        double lower_bound = 0.0;   // m_minus lambda_n - m_delta1
        double upper_bound = 0.0;   // m_plus lambda_n + shift + m_delta2
        bool lower_ok = false, upper_ok = false;
    };
    std::vector<Row> rows;
    double m_delta1 = 0.0, m_delta2 = 0.0, m_plus = 0.0, m_minus = 0.0;
    bool constants_valid = false;
    int lower_failures = 0, upper_failures = 0;
    double fitted_slope = 0.0;  // regression of lambda_n(A) against lambda_n
};

/** Eigenvalue sandwich of Prop EVestimates with the calibrated constants at
 *  scale s (pass s <= 0 for the default scale rule). */
SandwichReport sandwich_check(const SpectrumResult& spec, const EnhancedPotential& pot,
                              double delta, double s, const HeatCalculus& calc);

struct WeylReport {
    struct Row {
        double lambda = 0.0;
        int count = 0;
        double ratio = 0.0;  // N(lambda)/lambda
    };
    std::vector<Row> rows;
    double lambda_max = 0.0;
    double ratio_at_max = 0.0;
    double plateau = 0.0;  // mean ratio over the top half of the range
};

WeylReport weyl_counting(const SpectrumResult& spec);

// exact lattice count #{k in Z^2 : |k|^2 <= lambda}
int lattice_count(double lambda);

/** Operator-norm estimate of (H1+k)^{-1} - (H2+k)^{-1} by power iteration,
 *  each resolvent applied through preconditioned CG (tolerance 1e-8). */
double resolvent_distance(const OperatorHandle& op1, const OperatorHandle& op2, double k_shift);

struct GaugeReport {
    std::vector<double> lambda_base;
    std::vector<double> lambda_shifted;
    std::vector<double> rel_gap;
    std::vector<double> intertwine_residual;  // ||H~ (e^{if} u_n) - lambda_n e^{if} u_n||
    double max_rel_gap = 0.0;
    double max_intertwine_residual = 0.0;
};

/** Compares the spectra of H_A and H_{A + grad f} and checks the unitary
 *  intertwining on eigenfunctions. */
GaugeReport gauge_experiment(const EnhancedPotential& pot, const TorusField& f, int m_count,
                             const HeatCalculus& calc);

struct StabilityTable {
    std::vector<double> epsilons;
    std::vector<std::vector<double>> lambdas;      // [eps][n]
    std::vector<std::vector<double>> cauchy_diffs; // [step][n], |l(e_j) - l(e_{j+1})|
    std::vector<double> mean_diff_per_step;
    std::vector<double> c_eps;                     // renormalization constants per rung
    bool renormalized = true;
};

/** lambda_n(A_eps) along an epsilon ladder at fixed seed; set renormalize
 *  false for the ablation that adds c_eps back. */
StabilityTable eigenvalue_stability(uint64_t seed, const GridSpec& grid, double alpha,
                                    const std::vector<double>& eps_ladder, int m_count,
                                    const HeatCalculus& calc, MollifierKind kind,
                                    bool renormalize = true);

}  // namespace smsim
