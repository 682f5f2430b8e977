#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace smsim {

using Complex = std::complex<double>;

constexpr double pi = 3.141592653589793238462643383279502884;
constexpr double two_pi = 2.0 * pi;

/** Uniform n x n grid on the torus [0,2pi)^2, n a power of two >= 16.
 *  Fourier modes live in K = {-n/2+1, ..., n/2}^2; Laplacian eigenvalues
 *  are exactly |k|^2 with this side-length convention. */
struct GridSpec {
    int n = 0;

    GridSpec() = default;
    explicit GridSpec(int n_);

    int size() const { return n * n; }
    double dx() const { return two_pi / n; }

    // storage index <-> signed mode, per axis
    int mode_of(int idx) const { return idx <= n / 2 ? idx : idx - n; }
    int index_of(int k) const { return k >= 0 ? k : k + n; }
    bool contains_mode(int k1, int k2) const {
        return k1 > -n / 2 && k1 <= n / 2 && k2 > -n / 2 && k2 <= n / 2;
    }

    bool operator==(const GridSpec& o) const { return n == o.n; }
};

/** Scalar (1 component) or vector (2 components) field on the torus held as
 *  Fourier coefficients, f(x) = sum_k coef(k) e^{i k.x}.  Coefficients are
 *  stored per component in row-major order with k1 fastest; the slot at
 *  (i2,i1) holds mode (mode_of(i1), mode_of(i2)). */
class TorusField {
  public:
    TorusField() = default;
    TorusField(GridSpec grid, int components);

    GridSpec grid;
    int components = 1;
    // Set by constructors that guarantee conjugate symmetry; advisory only.
    bool real_valued = false;

    std::vector<Complex> coef;

    Complex& at(int comp, int k1, int k2);
    const Complex& at(int comp, int k1, int k2) const;
    // Mode lookup that returns 0 outside the grid's mode set.
    Complex mode_or_zero(int comp, int k1, int k2) const;

    std::span<Complex> component(int c);
    std::span<const Complex> component(int c) const;

    bool is_scalar() const { return components == 1; }
    Complex mean(int comp = 0) const { return component(comp)[0]; }

    // sqrt of the physical L^2 norm, ||f||^2 = int |f|^2 dx summed over components
    double l2_norm() const;
    double max_coef_error(const TorusField& other) const;
    // max |coef(-k) - conj(coef(k))| / max|coef|; 0 for the zero field
    double conjugate_symmetry_defect() const;

    TorusField& operator+=(const TorusField& o);
    TorusField& operator-=(const TorusField& o);
    TorusField& operator*=(Complex a);
    TorusField& operator*=(double a);
};

TorusField operator+(TorusField a, const TorusField& b);
TorusField operator-(TorusField a, const TorusField& b);
TorusField operator*(Complex a, TorusField f);
TorusField operator*(double a, TorusField f);

// <f,g> = int conj(f).g dx, conjugate-linear in the first argument,
// summed over components.
Complex inner(const TorusField& f, const TorusField& g);

double l2_distance(const TorusField& a, const TorusField& b);

// ---- transforms ----------------------------------------------------------

/** fft_forward: real samples (row-major, x1 fastest, n^2 per component) to
 *  Fourier coefficients with the normalization coeffs(0) = mean. */
TorusField fft_forward(const GridSpec& grid, std::span<const double> samples,
                       int components = 1);

/** Inverse transform to real samples; throws if the imaginary residual
 *  exceeds 1e-9 relative (field was not conjugate-symmetric). */
std::vector<double> fft_inverse(const TorusField& f);

// complex-sample transforms used by products and sup norms
std::vector<Complex> to_phys(const TorusField& f, int comp = 0);
void phys_to_coef(std::span<const Complex> phys, const GridSpec& grid,
                  std::span<Complex> coef_out);
void coef_to_phys(std::span<const Complex> coef, const GridSpec& grid,
                  std::span<Complex> phys_out);

TorusField extract_component(const TorusField& v, int c);
TorusField make_vector_field(const TorusField& c1, const TorusField& c2);

// sup over grid samples of |f| (modulus; max over components)
double linf_norm(const TorusField& f);

// ---- multiplier calculus --------------------------------------------------

// multiplier(k1,k2) applied componentwise
TorusField apply_multiplier(const TorusField& f,
                            const std::function<Complex(int, int)>& m);
TorusField apply_real_multiplier(const TorusField& f,
                                 const std::function<double(int, int)>& m);

/** Spectral derivative d/dx_axis, axis in {1,2}; multiplier i*k_axis.
 *  The unpaired Nyquist mode k_axis = n/2 is mapped to zero so real fields
 *  stay real. */
TorusField derivative(const TorusField& f, int axis);

TorusField gradient(const TorusField& f);              // scalar -> 2 components
TorusField divergence(const TorusField& v);            // 2 components -> scalar
TorusField curl2d(const TorusField& v);                // d2 v1 - d1 v2
TorusField perp_gradient(const TorusField& phi);       // (-d2, d1) phi
TorusField laplacian(const TorusField& f);

enum class InverseLaplacianMode {
    ExactFourier,  // -1/|k|^2 on k != 0, zero mode annihilated
    HeatQuasi      // -(1-e^{-|k|^2})/|k|^2, zero mode -> -1 (heat-kernel convention)
};

TorusField inverse_laplacian(const TorusField& f,
                             InverseLaplacianMode mode = InverseLaplacianMode::ExactFourier);

// ---- products -------------------------------------------------------------

// plain collocation product on the grid (exact when band(a)+band(b) <= n/2)
TorusField pointwise_product(const TorusField& a, const TorusField& b);
// 3/2-rule zero-padded product; retained coefficients are alias-free
TorusField dealiased_product(const TorusField& a, const TorusField& b);

// zero-padded complex samples of one component on an m x m grid (m >= n)
std::vector<Complex> padded_phys_samples(const TorusField& f, int comp, int m);
// gather the grid's modes back out of a padded m x m coefficient array
void truncate_padded_coef(std::span<const Complex> big, int m, const GridSpec& grid,
                          std::span<Complex> out);

// ---- snapshot io ----------------------------------------------------------

/** Binary TFLD snapshot: 16-byte header (magic "TFLD", u32 n, u32 components,
 *  4 reserved bytes, little-endian) then components*n^2 coefficients as
 *  little-endian float64 (re,im) pairs, row-major with k1 fastest. */
void write_tfld(const std::string& path, const TorusField& f);
TorusField read_tfld(const std::string& path);

}  // namespace smsim
