#include "smsim/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

namespace smsim {

static_assert(std::endian::native == std::endian::little,
              "TFLD snapshots assume a little-endian host");

GridSpec::GridSpec(int n_) : n(n_) {
    if (n < 16 || (n & (n - 1)) != 0)
        throw std::invalid_argument("GridSpec: n must be a power of two >= 16, got " +
                                    std::to_string(n));
}

TorusField::TorusField(GridSpec g, int comps) : grid(g), components(comps) {
    if (comps != 1 && comps != 2)
        throw std::invalid_argument("TorusField: components must be 1 or 2");
    coef.assign(static_cast<size_t>(comps) * grid.size(), Complex(0.0, 0.0));
}

Complex& TorusField::at(int comp, int k1, int k2) {
    return coef[static_cast<size_t>(comp) * grid.size() +
                static_cast<size_t>(grid.index_of(k2)) * grid.n + grid.index_of(k1)];
}

const Complex& TorusField::at(int comp, int k1, int k2) const {
    return coef[static_cast<size_t>(comp) * grid.size() +
                static_cast<size_t>(grid.index_of(k2)) * grid.n + grid.index_of(k1)];
}

Complex TorusField::mode_or_zero(int comp, int k1, int k2) const {
    if (!grid.contains_mode(k1, k2)) return Complex(0.0, 0.0);
    return at(comp, k1, k2);
}

std::span<Complex> TorusField::component(int c) {
    return std::span<Complex>(coef.data() + static_cast<size_t>(c) * grid.size(),
                              static_cast<size_t>(grid.size()));
}

std::span<const Complex> TorusField::component(int c) const {
    return std::span<const Complex>(coef.data() + static_cast<size_t>(c) * grid.size(),
                                    static_cast<size_t>(grid.size()));
}

double TorusField::l2_norm() const {
    double s = 0.0;
    for (const Complex& c : coef) s += std::norm(c);
    return two_pi * std::sqrt(s);
}

double TorusField::max_coef_error(const TorusField& other) const {
    if (coef.size() != other.coef.size())
        throw std::invalid_argument("max_coef_error: field shapes differ");
    double m = 0.0;
    for (size_t i = 0; i < coef.size(); ++i) m = std::max(m, std::abs(coef[i] - other.coef[i]));
    return m;
}

double TorusField::conjugate_symmetry_defect() const {
    const int n = grid.n;
    double defect = 0.0, scale = 0.0;
    for (int c = 0; c < components; ++c) {
        auto blk = component(c);
        for (int i2 = 0; i2 < n; ++i2) {
            const int j2 = (n - i2) % n;
            for (int i1 = 0; i1 < n; ++i1) {
                const int j1 = (n - i1) % n;
                const Complex a = blk[static_cast<size_t>(i2) * n + i1];
                const Complex b = blk[static_cast<size_t>(j2) * n + j1];
                defect = std::max(defect, std::abs(a - std::conj(b)));
                scale = std::max(scale, std::abs(a));
            }
        }
    }
    return scale > 0.0 ? defect / scale : 0.0;
}

TorusField& TorusField::operator+=(const TorusField& o) {
    if (coef.size() != o.coef.size()) throw std::invalid_argument("field shapes differ");
    for (size_t i = 0; i < coef.size(); ++i) coef[i] += o.coef[i];
    real_valued = real_valued && o.real_valued;
    return *this;
}

TorusField& TorusField::operator-=(const TorusField& o) {
    if (coef.size() != o.coef.size()) throw std::invalid_argument("field shapes differ");
    for (size_t i = 0; i < coef.size(); ++i) coef[i] -= o.coef[i];
    real_valued = real_valued && o.real_valued;
    return *this;
}

TorusField& TorusField::operator*=(Complex a) {
    for (Complex& c : coef) c *= a;
    if (a.imag() != 0.0) real_valued = false;
    return *this;
}

TorusField& TorusField::operator*=(double a) {
    for (Complex& c : coef) c *= a;
    return *this;
}

TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
TorusField operator*(Complex a, TorusField f) { return f *= a; }
TorusField operator*(double a, TorusField f) { return f *= a; }

Complex inner(const TorusField& f, const TorusField& g) {
    if (f.coef.size() != g.coef.size()) throw std::invalid_argument("inner: field shapes differ");
    Complex s(0.0, 0.0);
    for (size_t i = 0; i < f.coef.size(); ++i) s += std::conj(f.coef[i]) * g.coef[i];
    return two_pi * two_pi * s;
}

double l2_distance(const TorusField& a, const TorusField& b) {
    if (a.coef.size() != b.coef.size()) throw std::invalid_argument("l2_distance: shapes differ");
    double s = 0.0;
    for (size_t i = 0; i < a.coef.size(); ++i) s += std::norm(a.coef[i] - b.coef[i]);
    return two_pi * std::sqrt(s);
}

// ---- fftw plan cache --------------------------------------------------------

namespace {

// One ESTIMATE|UNALIGNED plan pair per grid size; execution via
// fftw_execute_dft on caller buffers is thread-safe, creation is not.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    void execute(int n, const Complex* in, Complex* out, int sign) {
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lk(mutex_);
            auto& entry = plans_[n];
            if (!entry.fwd) make_plans(n, entry);
            plan = (sign == FFTW_FORWARD) ? entry.fwd : entry.bwd;
        }
        fftw_execute_dft(plan,
                         reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

  private:
    struct Entry {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    void make_plans(int n, Entry& e) {
        std::vector<Complex> a(static_cast<size_t>(n) * n), b(a.size());
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        e.fwd = fftw_plan_dft_2d(n, n, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        e.bwd = fftw_plan_dft_2d(n, n, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!e.fwd || !e.bwd) throw std::runtime_error("fftw plan creation failed");
    }

    std::mutex mutex_;
    std::map<int, Entry> plans_;
};

}  // namespace

void phys_to_coef(std::span<const Complex> phys, const GridSpec& grid,
                  std::span<Complex> coef_out) {
    if (phys.size() != static_cast<size_t>(grid.size()) || coef_out.size() != phys.size())
        throw std::invalid_argument("phys_to_coef: size mismatch with grid");
    PlanCache::instance().execute(grid.n, phys.data(), coef_out.data(), FFTW_FORWARD);
    const double inv = 1.0 / grid.size();
    for (Complex& c : coef_out) c *= inv;
}

std::vector<Complex> to_phys(const TorusField& f, int comp) {
    std::vector<Complex> out(static_cast<size_t>(f.grid.size()));
    PlanCache::instance().execute(f.grid.n, f.component(comp).data(), out.data(),
                                  FFTW_BACKWARD);
    return out;
}

void coef_to_phys(std::span<const Complex> coef, const GridSpec& grid,
                  std::span<Complex> phys_out) {
    if (coef.size() != static_cast<size_t>(grid.size()) || phys_out.size() != coef.size())
        throw std::invalid_argument("coef_to_phys: size mismatch with grid");
    PlanCache::instance().execute(grid.n, coef.data(), phys_out.data(), FFTW_BACKWARD);
}

TorusField extract_component(const TorusField& v, int c) {
    if (c < 0 || c >= v.components) throw std::invalid_argument("extract_component: bad index");
    TorusField out(v.grid, 1);
    auto src = v.component(c);
    std::copy(src.begin(), src.end(), out.component(0).begin());
    out.real_valued = v.real_valued;
    return out;
}

TorusField make_vector_field(const TorusField& c1, const TorusField& c2) {
    if (!(c1.grid == c2.grid) || !c1.is_scalar() || !c2.is_scalar())
        throw std::invalid_argument("make_vector_field: two scalar fields on one grid expected");
    TorusField out(c1.grid, 2);
    std::copy(c1.component(0).begin(), c1.component(0).end(), out.component(0).begin());
    std::copy(c2.component(0).begin(), c2.component(0).end(), out.component(1).begin());
    out.real_valued = c1.real_valued && c2.real_valued;
    return out;
}

TorusField fft_forward(const GridSpec& grid, std::span<const double> samples, int components) {
    if (samples.size() != static_cast<size_t>(components) * grid.size())
        throw std::invalid_argument("fft_forward: sample count does not match grid");
    TorusField f(grid, components);
    std::vector<Complex> buf(static_cast<size_t>(grid.size()));
    for (int c = 0; c < components; ++c) {
        const double* src = samples.data() + static_cast<size_t>(c) * grid.size();
        for (int i = 0; i < grid.size(); ++i) buf[i] = Complex(src[i], 0.0);
        phys_to_coef(buf, grid, f.component(c));
    }
    f.real_valued = true;
    return f;
}

std::vector<double> fft_inverse(const TorusField& f) {
    std::vector<double> out(static_cast<size_t>(f.components) * f.grid.size());
    double max_im = 0.0, max_re = 0.0;
    for (int c = 0; c < f.components; ++c) {
        std::vector<Complex> phys = to_phys(f, c);
        double* dst = out.data() + static_cast<size_t>(c) * f.grid.size();
        for (int i = 0; i < f.grid.size(); ++i) {
            dst[i] = phys[i].real();
            max_im = std::max(max_im, std::abs(phys[i].imag()));
            max_re = std::max(max_re, std::abs(phys[i].real()));
        }
    }
    if (max_im > 1e-9 * std::max(1.0, max_re))
        throw std::runtime_error("fft_inverse: field is not real (imaginary residual " +
                                 std::to_string(max_im) + ")");
    return out;
}

double linf_norm(const TorusField& f) {
    double m = 0.0;
    for (int c = 0; c < f.components; ++c) {
        std::vector<Complex> phys = to_phys(f, c);
        for (const Complex& v : phys) m = std::max(m, std::abs(v));
    }
    return m;
}

// ---- multipliers ------------------------------------------------------------

TorusField apply_multiplier(const TorusField& f, const std::function<Complex(int, int)>& m) {
    TorusField out(f.grid, f.components);
    const int n = f.grid.n;
    for (int c = 0; c < f.components; ++c) {
        auto src = f.component(c);
        auto dst = out.component(c);
        for (int i2 = 0; i2 < n; ++i2) {
            const int k2 = f.grid.mode_of(i2);
            for (int i1 = 0; i1 < n; ++i1) {
                const int k1 = f.grid.mode_of(i1);
                dst[static_cast<size_t>(i2) * n + i1] =
                    m(k1, k2) * src[static_cast<size_t>(i2) * n + i1];
            }
        }
    }
    return out;
}

TorusField apply_real_multiplier(const TorusField& f, const std::function<double(int, int)>& m) {
    TorusField out = apply_multiplier(f, [&](int k1, int k2) { return Complex(m(k1, k2), 0.0); });
    out.real_valued = f.real_valued;
    return out;
}

TorusField derivative(const TorusField& f, int axis) {
    if (axis != 1 && axis != 2) throw std::invalid_argument("derivative: axis must be 1 or 2");
    const int nyq = f.grid.n / 2;
    TorusField out = apply_multiplier(f, [&](int k1, int k2) {
        const int k = (axis == 1) ? k1 : k2;
        if (k == nyq) return Complex(0.0, 0.0);
        return Complex(0.0, static_cast<double>(k));
    });
    out.real_valued = f.real_valued;
    return out;
}

TorusField gradient(const TorusField& f) {
    if (!f.is_scalar()) throw std::invalid_argument("gradient: scalar field expected");
    TorusField out(f.grid, 2);
    TorusField d1 = derivative(f, 1), d2 = derivative(f, 2);
    std::copy(d1.coef.begin(), d1.coef.end(), out.component(0).begin());
    std::copy(d2.coef.begin(), d2.coef.end(), out.component(1).begin());
    out.real_valued = f.real_valued;
    return out;
}

TorusField divergence(const TorusField& v) {
    if (v.components != 2) throw std::invalid_argument("divergence: 2-component field expected");
    TorusField v1(v.grid, 1), v2(v.grid, 1);
    std::copy(v.component(0).begin(), v.component(0).end(), v1.component(0).begin());
    std::copy(v.component(1).begin(), v.component(1).end(), v2.component(0).begin());
    TorusField out = derivative(v1, 1);
    out += derivative(v2, 2);
    out.real_valued = v.real_valued;
    return out;
}

TorusField curl2d(const TorusField& v) {
    if (v.components != 2) throw std::invalid_argument("curl2d: 2-component field expected");
    TorusField v1(v.grid, 1), v2(v.grid, 1);
    std::copy(v.component(0).begin(), v.component(0).end(), v1.component(0).begin());
    std::copy(v.component(1).begin(), v.component(1).end(), v2.component(0).begin());
    TorusField out = derivative(v1, 2);
    out -= derivative(v2, 1);
    out.real_valued = v.real_valued;
    return out;
}

TorusField perp_gradient(const TorusField& phi) {
    if (!phi.is_scalar()) throw std::invalid_argument("perp_gradient: scalar field expected");
    TorusField out(phi.grid, 2);
    TorusField m_d2 = derivative(phi, 2);
    TorusField d1 = derivative(phi, 1);
    for (int i = 0; i < phi.grid.size(); ++i) {
        out.component(0)[i] = -m_d2.component(0)[i];
        out.component(1)[i] = d1.component(0)[i];
    }
    out.real_valued = phi.real_valued;
    return out;
}

TorusField laplacian(const TorusField& f) {
    TorusField out = apply_real_multiplier(
        f, [](int k1, int k2) { return -static_cast<double>(k1) * k1 - static_cast<double>(k2) * k2; });
    return out;
}

TorusField inverse_laplacian(const TorusField& f, InverseLaplacianMode mode) {
    return apply_real_multiplier(f, [mode](int k1, int k2) {
        const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
        if (mode == InverseLaplacianMode::ExactFourier) return kk == 0.0 ? 0.0 : -1.0 / kk;
        return kk == 0.0 ? -1.0 : -(1.0 - std::exp(-kk)) / kk;
    });
}

// ---- products ---------------------------------------------------------------

TorusField pointwise_product(const TorusField& a, const TorusField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("pointwise_product: grid mismatch");
    // scalar*scalar -> scalar, vector.vector -> scalar (dot), scalar*vector -> vector
    const GridSpec g = a.grid;
    if (a.components == b.components) {
        TorusField out(g, 1);
        std::vector<Complex> acc(static_cast<size_t>(g.size()), Complex(0.0, 0.0));
        for (int c = 0; c < a.components; ++c) {
            std::vector<Complex> pa = to_phys(a, c);
            std::vector<Complex> pb = to_phys(b, c);
            for (int i = 0; i < g.size(); ++i) acc[i] += pa[i] * pb[i];
        }
        phys_to_coef(acc, g, out.component(0));
        out.real_valued = a.real_valued && b.real_valued;
        return out;
    }
    const TorusField& s = a.is_scalar() ? a : b;
    const TorusField& v = a.is_scalar() ? b : a;
    TorusField out(g, 2);
    std::vector<Complex> ps = to_phys(s, 0);
    for (int c = 0; c < 2; ++c) {
        std::vector<Complex> pv = to_phys(v, c);
        for (int i = 0; i < g.size(); ++i) pv[i] *= ps[i];
        phys_to_coef(pv, g, out.component(c));
    }
    out.real_valued = a.real_valued && b.real_valued;
    return out;
}

namespace {

// zero-pad coefficients of one component into an m x m grid (m > n)
std::vector<Complex> pad_coef(const TorusField& f, int comp, int m) {
    const int n = f.grid.n;
    std::vector<Complex> out(static_cast<size_t>(m) * m, Complex(0.0, 0.0));
    auto src = f.component(comp);
    for (int i2 = 0; i2 < n; ++i2) {
        const int k2 = f.grid.mode_of(i2);
        const int j2 = k2 >= 0 ? k2 : k2 + m;
        for (int i1 = 0; i1 < n; ++i1) {
            const int k1 = f.grid.mode_of(i1);
            const int j1 = k1 >= 0 ? k1 : k1 + m;
            out[static_cast<size_t>(j2) * m + j1] = src[static_cast<size_t>(i2) * n + i1];
        }
    }
    return out;
}

void truncate_coef(std::span<const Complex> big, int m, const GridSpec& grid,
                   std::span<Complex> out) {
    const int n = grid.n;
    for (int i2 = 0; i2 < n; ++i2) {
        const int k2 = grid.mode_of(i2);
        const int j2 = k2 >= 0 ? k2 : k2 + m;
        for (int i1 = 0; i1 < n; ++i1) {
            const int k1 = grid.mode_of(i1);
            const int j1 = k1 >= 0 ? k1 : k1 + m;
            out[static_cast<size_t>(i2) * n + i1] = big[static_cast<size_t>(j2) * m + j1];
        }
    }
}

}  // namespace

std::vector<Complex> padded_phys_samples(const TorusField& f, int comp, int m) {
    if (m < f.grid.n) throw std::invalid_argument("padded_phys_samples: m < n");
    std::vector<Complex> pc = pad_coef(f, comp, m);
    std::vector<Complex> out(pc.size());
    PlanCache::instance().execute(m, pc.data(), out.data(), FFTW_BACKWARD);
    return out;
}

void truncate_padded_coef(std::span<const Complex> big, int m, const GridSpec& grid,
                          std::span<Complex> out) {
    if (big.size() != static_cast<size_t>(m) * m || out.size() != static_cast<size_t>(grid.size()))
        throw std::invalid_argument("truncate_padded_coef: size mismatch");
    truncate_coef(big, m, grid, out);
}

TorusField dealiased_product(const TorusField& a, const TorusField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("dealiased_product: grid mismatch");
    const GridSpec g = a.grid;
    const int m = 3 * g.n / 2;
    const double inv = 1.0 / (static_cast<double>(m) * m);

    auto combine = [&](const std::vector<std::pair<int, int>>& pairs, std::span<Complex> dst) {
        std::vector<Complex> acc(static_cast<size_t>(m) * m, Complex(0.0, 0.0));
        for (auto [ca, cb] : pairs) {
            std::vector<Complex> pa = padded_phys_samples(a, ca, m);
            std::vector<Complex> pb = padded_phys_samples(b, cb, m);
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += pa[i] * pb[i];
        }
        std::vector<Complex> big(acc.size());
        PlanCache::instance().execute(m, acc.data(), big.data(), FFTW_FORWARD);
        for (Complex& c : big) c *= inv;
        truncate_coef(big, m, g, dst);
    };

    if (a.components == b.components) {
        TorusField out(g, 1);
        std::vector<std::pair<int, int>> pairs;
        for (int c = 0; c < a.components; ++c) pairs.emplace_back(c, c);
        combine(pairs, out.component(0));
        out.real_valued = a.real_valued && b.real_valued;
        return out;
    }
    const TorusField& s = a.is_scalar() ? a : b;
    const TorusField& v = a.is_scalar() ? b : a;
    TorusField out(g, 2);
    for (int c = 0; c < 2; ++c) {
        std::vector<Complex> ps = padded_phys_samples(s, 0, m);
        std::vector<Complex> pv = padded_phys_samples(v, c, m);
        for (size_t i = 0; i < ps.size(); ++i) ps[i] *= pv[i];
        std::vector<Complex> big(ps.size());
        PlanCache::instance().execute(m, ps.data(), big.data(), FFTW_FORWARD);
        for (Complex& cc : big) cc *= inv;
        truncate_coef(big, m, g, out.component(c));
    }
    out.real_valued = a.real_valued && b.real_valued;
    return out;
}

// ---- snapshot io ------------------------------------------------------------

void write_tfld(const std::string& path, const TorusField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_tfld: cannot open " + path);
    const char magic[4] = {'T', 'F', 'L', 'D'};
    const uint32_t n = static_cast<uint32_t>(f.grid.n);
    const uint32_t comps = static_cast<uint32_t>(f.components);
    const uint32_t reserved = 0;
    os.write(magic, 4);
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&comps), 4);
    os.write(reinterpret_cast<const char*>(&reserved), 4);
    os.write(reinterpret_cast<const char*>(f.coef.data()),
             static_cast<std::streamsize>(f.coef.size() * sizeof(Complex)));
    if (!os) throw std::runtime_error("write_tfld: short write to " + path);
}

TorusField read_tfld(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tfld: cannot open " + path);
    char magic[4];
    uint32_t n = 0, comps = 0, reserved = 0;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&comps), 4);
    is.read(reinterpret_cast<char*>(&reserved), 4);
    if (!is || std::memcmp(magic, "TFLD", 4) != 0)
        throw std::runtime_error("read_tfld: bad magic in " + path);
    TorusField f(GridSpec(static_cast<int>(n)), static_cast<int>(comps));
    is.read(reinterpret_cast<char*>(f.coef.data()),
            static_cast<std::streamsize>(f.coef.size() * sizeof(Complex)));
    if (!is) throw std::runtime_error("read_tfld: truncated file " + path);
    f.real_valued = f.conjugate_symmetry_defect() < 1e-10;
    return f;
}

}  // namespace smsim
