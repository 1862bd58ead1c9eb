// Matrix potential ingestion and the derived quantities of the preliminary
// similarity transforms: nu, theta, beta, r, the phases phi/psi, the twisted
// off-diagonal entries q2/q3, and the multiplication operator W_bc.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diracsim/blockmatrix.hpp"
#include "diracsim/fourier.hpp"

namespace dirac {

enum class BcKind { per, ap, dir };

inline std::string bcName(BcKind b) {
    switch (b) {
        case BcKind::per: return "per";
        case BcKind::ap: return "ap";
        default: return "dir";
    }
}

struct BoundaryCondition {
    BcKind kind = BcKind::per;
    // Ladder shift eps_bc in the coupling index of Q; unused for dir.
    int epsilon() const { return kind == BcKind::ap ? 1 : 0; }
    int blockSize() const { return kind == BcKind::dir ? 1 : 2; }
};

struct PotentialSpec {
    double omega = kTwoPi;
    // pHat[j-1] holds the Fourier data of p_j, j = 1..4.
    std::array<SparseCoeffs, 4> pHat;
    BoundaryCondition bc;

    const SparseCoeffs& p(int j) const { return pHat[std::size_t(j - 1)]; }
    SparseCoeffs& p(int j) { return pHat[std::size_t(j - 1)]; }

    cplx pHatAt(int j, int k) const {
        const auto& m = p(j);
        auto it = m.find(k);
        return it == m.end() ? cplx(0.0) : it->second;
    }

    int maxSupport() const {
        int s = 0;
        for (const auto& m : pHat)
            for (const auto& [k, v] : m)
                if (v != cplx(0.0)) s = std::max(s, std::abs(k));
        return s;
    }

    void validate() const {
        if (!(omega > 0.0)) throw std::invalid_argument("PotentialSpec: omega must be positive");
    }
};

enum class Branch { generic, resonantInteger };

struct DeriveOptions {
    int gridSize = 1024;
    double branchTol = 1e-9;
};

// Everything computed from the potential alone: the scalars of the twist,
// exact antiderivative phases, and the Fourier data of q2, q3.
struct DerivedPotential {
    double omega = kTwoPi;
    BcKind bc = BcKind::per;
    cplx p1hat0, p4hat0;
    cplx nu, theta, beta, r;
    Branch branch = Branch::generic;
    int rInt = 0;  // the integer value of r in the resonant branch

    // phi(t) = phiLin*t + sum_{k!=0} phiOsc(k) (e^{2 pi i k t/omega} - 1)
    cplx phiLin, psiLin;
    FourierTable phiOsc, psiOsc;

    int grid = 0;
    std::vector<cplx> phiSamples, psiSamples;
    FourierTable qHat2, qHat3;

    cplx phi(double t) const { return phaseAt(phiLin, phiOsc, t); }
    cplx psi(double t) const { return phaseAt(psiLin, psiOsc, t); }

private:
    cplx phaseAt(cplx lin, const FourierTable& osc, double t) const {
        cplx s = lin * t;
        for (int k = -osc.limit(); k <= osc.limit(); ++k) {
            if (k == 0) continue;
            const cplx c = osc.at(k);
            if (c == cplx(0.0)) continue;
            const double ph = kTwoPi * k * t / omega;
            s += c * (cplx(std::cos(ph), std::sin(ph)) - 1.0);
        }
        return s;
    }
};

inline cplx expI(cplx z) { return std::exp(cplx(0.0, 1.0) * z); }

inline DerivedPotential derive(const PotentialSpec& spec, const DeriveOptions& opt = {}) {
    spec.validate();
    const int support = spec.maxSupport();
    const int minGrid = 4 * support + 4;
    if (!isPowerOfTwo(std::size_t(opt.gridSize)) || opt.gridSize < minGrid)
        throw std::invalid_argument("derive: grid size " + std::to_string(opt.gridSize) +
                                    " too small for potential bandwidth " + std::to_string(support) +
                                    "; need a power of two >= " + std::to_string(minGrid));

    DerivedPotential d;
    d.omega = spec.omega;
    d.bc = spec.bc.kind;
    d.grid = opt.gridSize;
    d.p1hat0 = spec.pHatAt(1, 0);
    d.p4hat0 = spec.pHatAt(4, 0);
    d.nu = 0.5 * (d.p1hat0 + d.p4hat0);
    d.beta = d.p1hat0 - d.p4hat0;
    d.r = spec.omega * d.beta / kTwoPi;
    d.theta = -kPi * d.r;

    const long nearest = std::lround(d.r.real());
    if (nearest != 0 && std::abs(d.r - cplx(double(nearest))) < opt.branchTol) {
        d.branch = Branch::resonantInteger;
        d.rInt = int(nearest);
    }

    // Spectral antiderivatives: int_0^t p_j = pHat_j(0) t
    //   + sum_{k!=0} pHat_j(k) (e^{2 pi i k t/omega}-1) * omega/(2 pi i k).
    const int oscLimit = std::max(1, support);
    d.phiLin = d.nu - d.p1hat0;
    d.psiLin = d.p4hat0 - d.nu;
    d.phiOsc = FourierTable(oscLimit);
    d.psiOsc = FourierTable(oscLimit);
    for (int k = -oscLimit; k <= oscLimit; ++k) {
        if (k == 0) continue;
        const cplx wk = spec.omega / (cplx(0.0, 1.0) * kTwoPi * double(k));
        d.phiOsc.set(k, -spec.pHatAt(1, k) * wk);
        d.psiOsc.set(k, spec.pHatAt(4, k) * wk);
    }

    const int g = opt.gridSize;
    d.phiSamples.resize(std::size_t(g));
    d.psiSamples.resize(std::size_t(g));
    const FourierTable p2 = tableFromSparse(spec.p(2), oscLimit);
    const FourierTable p3 = tableFromSparse(spec.p(3), oscLimit);
    std::vector<cplx> q2(static_cast<std::size_t>(g)), q3(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        const double t = spec.omega * i / g;
        const cplx ph = d.phi(t);
        const cplx ps = d.psi(t);
        d.phiSamples[std::size_t(i)] = ph;
        d.psiSamples[std::size_t(i)] = ps;
        q2[std::size_t(i)] = evalSeries(p2, t, spec.omega) * expI(ps - ph);
        q3[std::size_t(i)] = evalSeries(p3, t, spec.omega) * expI(ph - ps);
    }
    d.qHat2 = coefficientsFromSamples(q2);
    d.qHat3 = coefficientsFromSamples(q3);
    return d;
}

// W_bc(t): diag(e^{i phi}, e^{i psi}) for dir, and the theta-detrended
// diag(e^{i(phi - theta t/omega)}, e^{i(psi - theta t/omega)}) for per/ap.
inline Eigen::Matrix2cd sampleW(const PotentialSpec& spec, const DerivedPotential& d, double t) {
    if (t < 0.0 || t > spec.omega) throw std::invalid_argument("sampleW: t outside [0, omega]");
    Eigen::Matrix2cd w = Eigen::Matrix2cd::Zero();
    if (spec.bc.kind == BcKind::dir) {
        w(0, 0) = expI(d.phi(t));
        w(1, 1) = expI(d.psi(t));
    } else {
        const cplx drift = d.theta * t / spec.omega;
        w(0, 0) = expI(d.phi(t) - drift);
        w(1, 1) = expI(d.psi(t) - drift);
    }
    return w;
}

// Periodic factors g1 = e^{i(phi - theta t/omega)}, g2 = e^{i(psi - theta t/omega)}
// sampled on the derive grid and transformed to coefficients.
inline std::pair<FourierTable, FourierTable> wPeriodicFactors(const DerivedPotential& d) {
    const int g = d.grid;
    std::vector<cplx> s1(static_cast<std::size_t>(g)), s2(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        const cplx drift = d.theta * double(i) / double(g);
        s1[std::size_t(i)] = expI(d.phiSamples[std::size_t(i)] - drift);
        s2[std::size_t(i)] = expI(d.psiSamples[std::size_t(i)] - drift);
    }
    return {coefficientsFromSamples(s1), coefficientsFromSamples(s2)};
}

// Matrix of the multiplication operator W_bc in the free eigenbasis,
// truncated to |m|,|n| <= N. For per/ap this is a banded convolution in the
// coefficients of the periodic factors; for dir the entries are half-period
// integrals of e^{i phi}, e^{i psi} against the s_n basis.
inline BlockMatrix wAsFourierOperator(const PotentialSpec& spec, const DerivedPotential& d,
                                      int window) {
    if (window < 0) throw std::invalid_argument("wAsFourierOperator: window must be >= 0");
    const auto [g1, g2] = wPeriodicFactors(d);
    BlockMatrix w(window, spec.bc.blockSize());
    if (spec.bc.kind == BcKind::dir) {
        for (int m = -window; m <= window; ++m)
            for (int n = -window; n <= window; ++n) {
                const cplx f1 = halfPeriodIntegral(g1, m - n, d.theta);
                const cplx f2 = halfPeriodIntegral(g2, n - m, d.theta);
                w.at(m, n) = 0.5 * (f1 + f2);
            }
    } else {
        for (int m = -window; m <= window; ++m)
            for (int n = -window; n <= window; ++n) {
                w.at(m, n, 0, 0) = g1.at(n - m);
                w.at(m, n, 1, 1) = g2.at(m - n);
            }
    }
    return w;
}

}  // namespace dirac
