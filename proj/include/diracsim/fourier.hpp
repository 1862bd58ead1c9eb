// Fourier-series utilities on a period [0, omega]: radix-2 FFT, coefficient
// tables indexed by harmonic number, exact trig-polynomial evaluation, and
// the half-period phase integrals needed for Dirichlet-type bases.
#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

namespace dirac {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Sparse coefficient list, harmonic index -> coefficient.
using SparseCoeffs = std::map<int, cplx>;

inline bool isPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey. sign=-1 is the forward transform
// sum_g a[g] e^{-2*pi*i*k*g/G}; sign=+1 the unnormalized inverse.
inline void fftRadix2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    if (!isPowerOfTwo(n)) throw std::invalid_argument("fftRadix2: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Dense table of Fourier coefficients c(k), |k| <= limit; entries outside
// the window read as zero.
class FourierTable {
public:
    FourierTable() = default;
    explicit FourierTable(int limit) : limit_(limit), c_(2 * std::size_t(limit) + 1, cplx(0.0)) {}

    int limit() const { return limit_; }
    cplx at(int k) const {
        if (k < -limit_ || k > limit_) return cplx(0.0);
        return c_[std::size_t(k + limit_)];
    }
    void set(int k, cplx v) {
        if (k < -limit_ || k > limit_) throw std::out_of_range("FourierTable::set");
        c_[std::size_t(k + limit_)] = v;
    }
    void add(int k, cplx v) { set(k, at(k) + v); }

    double sumAbs2() const {
        double s = 0.0;
        for (const auto& v : c_) s += std::norm(v);
        return s;
    }
    // Largest |k| with |c(k)| above the threshold (0 for the zero table).
    int support(double threshold = 0.0) const {
        for (int k = limit_; k > 0; --k)
            if (std::abs(at(k)) > threshold || std::abs(at(-k)) > threshold) return k;
        return 0;
    }

private:
    int limit_ = 0;
    std::vector<cplx> c_;
};

inline FourierTable tableFromSparse(const SparseCoeffs& s, int limit) {
    FourierTable t(limit);
    for (const auto& [k, v] : s) t.set(k, v);
    return t;
}

// Coefficients of the trig interpolant of G uniform samples over [0, omega):
// c(k) = (1/G) sum_g f(t_g) e^{-2*pi*i*k*g/G}, |k| <= G/2 - 1.
inline FourierTable coefficientsFromSamples(const std::vector<cplx>& samples) {
    const std::size_t g = samples.size();
    if (!isPowerOfTwo(g) || g < 4) throw std::invalid_argument("coefficientsFromSamples: need a power-of-two grid, G >= 4");
    std::vector<cplx> a = samples;
    fftRadix2(a, -1);
    const int limit = static_cast<int>(g / 2) - 1;
    FourierTable t(limit);
    const double inv = 1.0 / static_cast<double>(g);
    for (int k = -limit; k <= limit; ++k) {
        const std::size_t idx = std::size_t((k + static_cast<int>(g)) % static_cast<int>(g));
        t.set(k, a[idx] * inv);
    }
    return t;
}

// f(t) = sum_k c(k) e^{2*pi*i*k*t/omega}.
inline cplx evalSeries(const FourierTable& t, double time, double omega) {
    cplx s(0.0);
    for (int k = -t.limit(); k <= t.limit(); ++k) {
        const cplx c = t.at(k);
        if (c == cplx(0.0)) continue;
        const double ph = kTwoPi * k * time / omega;
        s += c * cplx(std::cos(ph), std::sin(ph));
    }
    return s;
}

inline std::vector<cplx> sampleSeries(const FourierTable& t, double omega, int grid) {
    std::vector<cplx> out(static_cast<std::size_t>(grid));
    for (int g = 0; g < grid; ++g) out[std::size_t(g)] = evalSeries(t, omega * g / grid, omega);
    return out;
}

// E(z) = (1/omega) * integral_0^omega e^{i z t/omega} dt = (e^{iz}-1)/(iz),
// holomorphically extended with E(0) = 1.
inline cplx phaseMean(cplx z) {
    if (std::abs(z) < 1e-6) {
        // 1 + iz/2 + (iz)^2/6 + (iz)^3/24 + ...
        const cplx iz = cplx(0.0, 1.0) * z;
        return 1.0 + iz / 2.0 + iz * iz / 6.0 + iz * iz * iz / 24.0;
    }
    const cplx iz = cplx(0.0, 1.0) * z;
    return (std::exp(iz) - 1.0) / iz;
}

// Half-period Fourier integral (1/omega) integral_0^omega w(t) e^{i pi d t/omega} dt
// for w(t) = e^{i drift t/omega} * g(t) with g given by its periodic coefficients.
inline cplx halfPeriodIntegral(const FourierTable& g, int d, cplx drift = cplx(0.0)) {
    if (drift == cplx(0.0)) {
        if (d % 2 == 0) return g.at(-d / 2);
        cplx s(0.0);
        for (int k = -g.limit(); k <= g.limit(); ++k) {
            const cplx c = g.at(k);
            if (c == cplx(0.0)) continue;
            s += c * phaseMean(cplx(kPi * (2.0 * k + d), 0.0));
        }
        return s;
    }
    cplx s(0.0);
    for (int k = -g.limit(); k <= g.limit(); ++k) {
        const cplx c = g.at(k);
        if (c == cplx(0.0)) continue;
        s += c * phaseMean(kTwoPi * double(k) + drift + kPi * double(d));
    }
    return s;
}

}  // namespace dirac
