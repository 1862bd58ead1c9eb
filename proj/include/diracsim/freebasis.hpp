// Free-operator ladders, the basis layout (including the regrouped resonant
// components), spectral components, distance tables, and delta^P.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "diracsim/potential.hpp"

namespace dirac {

inline double freeEigenvalue(BcKind bc, double omega, int n) {
    switch (bc) {
        case BcKind::per: return kTwoPi * n / omega;
        case BcKind::ap: return kPi * (2 * n + 1) / omega;
        default: return kPi * n / omega;
    }
}

// Index bookkeeping for the truncated basis. A component n in [-N, N] spans
//   per/ap generic: {e_n^1, e_n^2}
//   per/ap resonant (r = rInt): {e_{n+r}^1, e_n^2}, whose free eigenvalues
//     coincide exactly, so components are singletons with 2-dim eigenspaces
//   dir: {s_n}
struct BasisLayout {
    BcKind bc = BcKind::per;
    double omega = kTwoPi;
    int window = 0;
    Branch branch = Branch::generic;
    int rShift = 0;  // rInt in the resonant branch, else 0
    cplx p1hat0, p4hat0, nu;

    int blockSize() const { return bc == BcKind::dir ? 1 : 2; }
    int epsilon() const { return bc == BcKind::ap ? 1 : 0; }
    // Coupling-index shift of Q in the regrouped basis.
    int epsEff() const { return epsilon() + rShift; }
    double lambda(int n) const { return freeEigenvalue(bc, omega, n); }

    // Free eigenvalue attached to tier j (row j of the block) of component n.
    cplx tierValue(int n, int j) const {
        if (bc == BcKind::dir) return cplx(lambda(n)) - nu;
        if (j == 0) return cplx(lambda(n + rShift)) - p1hat0;
        return cplx(lambda(n)) - p4hat0;
    }

    cplx beta() const { return p1hat0 - p4hat0; }
};

inline BasisLayout makeLayout(const DerivedPotential& d, int window) {
    if (window < 0) throw std::invalid_argument("makeLayout: window must be >= 0");
    BasisLayout l;
    l.bc = d.bc;
    l.omega = d.omega;
    l.window = window;
    l.branch = d.bc == BcKind::dir ? Branch::generic : d.branch;
    l.rShift = (l.branch == Branch::resonantInteger) ? d.rInt : 0;
    l.p1hat0 = d.p1hat0;
    l.p4hat0 = d.p4hat0;
    l.nu = d.nu;
    return l;
}

// Diagonal window matrix of the free part \tilde L^P_bc (or L^0_dir - nu for dir).
inline BlockMatrix tildeFreeDiagonal(const BasisLayout& l) {
    BlockMatrix a(l.window, l.blockSize());
    for (int n = -l.window; n <= l.window; ++n)
        for (int j = 0; j < l.blockSize(); ++j) a.at(n, n, j, j) = l.tierValue(n, j);
    return a;
}

struct SpectralComponent {
    int n = 0;
    std::vector<cplx> points;  // 1 or 2 distinct points
};

inline std::vector<SpectralComponent> spectralComponents(const BasisLayout& l) {
    std::vector<SpectralComponent> out;
    out.reserve(std::size_t(2 * l.window + 1));
    for (int n = -l.window; n <= l.window; ++n) {
        SpectralComponent c;
        c.n = n;
        if (l.bc == BcKind::dir || l.branch == Branch::resonantInteger) {
            c.points = {l.tierValue(n, l.blockSize() - 1)};
        } else {
            c.points = {l.tierValue(n, 0), l.tierValue(n, 1)};
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline double setDistance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& x : a)
        for (const auto& y : b) d = std::min(d, std::abs(x - y));
    return d;
}

// Closed-form gap dist(sigma_{n+l}, sigma_n); translation invariant in n.
inline double componentGap(const BasisLayout& l, int shift) {
    if (shift == 0) return 0.0;
    if (l.bc == BcKind::dir) return std::abs(kPi * shift / l.omega);
    const double delta = kTwoPi * shift / l.omega;
    if (l.branch == Branch::resonantInteger) return std::abs(delta);
    const cplx b = l.beta();
    return std::min({std::abs(cplx(delta)), std::abs(cplx(delta) - b), std::abs(cplx(delta) + b)});
}

// Dense pairwise table d_{mn} = dist(sigma_m, sigma_n). Verifies symmetry and
// the translation structure d_{mn} = d_{m-n,0}; overlapping distinct
// components violate the branch assumption and are rejected.
inline Eigen::MatrixXd distanceTable(const std::vector<SpectralComponent>& comps) {
    const int count = int(comps.size());
    Eigen::MatrixXd d(count, count);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < count; ++j)
            d(i, j) = i == j ? 0.0 : setDistance(comps[std::size_t(i)].points, comps[std::size_t(j)].points);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < i; ++j) {
            if (d(i, j) == 0.0)
                throw std::runtime_error("distanceTable: overlapping distinct spectral components (excluded-set violation)");
            if (std::abs(d(i, j) - d(j, i)) > 1e-14 * (1.0 + d(i, j)))
                throw std::runtime_error("distanceTable: symmetry violated");
            if (i > 0 && j > 0 && std::abs(d(i, j) - d(i - 1, j - 1)) > 1e-12 * (1.0 + d(i, j)))
                throw std::runtime_error("distanceTable: translation structure violated");
        }
    return d;
}

// delta^P: the reciprocal of the minimal gap between distinct spectral
// components, closed form.
inline double deltaPClosed(const BasisLayout& l) {
    if (l.bc == BcKind::dir) return l.omega / kPi;
    if (l.branch == Branch::resonantInteger) return l.omega / kTwoPi;
    double best = l.omega / kTwoPi;
    const cplx wb = l.omega * l.beta();
    const long center = std::lround(l.beta().real() * l.omega / kTwoPi);
    for (long ell = center - 2; ell <= center + 2; ++ell) {
        if (ell == 0) continue;
        const double den = std::abs(kTwoPi * cplx(double(ell)) - wb);
        if (den == 0.0)
            throw std::runtime_error("deltaPClosed: resonance inside generic branch");
        best = std::max(best, l.omega / den);
    }
    return best;
}

inline double deltaPFromTable(const Eigen::MatrixXd& d) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (i != j) best = std::max(best, 1.0 / d(i, j));
    return best;
}

// Resolution of identity on the window: coordinate projections P_n plus the
// coarse central aggregate P_(m). Projections are index ranges, never dense.
struct ResolutionOfIdentity {
    int window = 0;
    int coarseCut = 0;
    int blockSize = 1;

    ResolutionOfIdentity(int n, int m, int b) : window(n), coarseCut(m), blockSize(b) {
        if (m > n) throw std::invalid_argument("ResolutionOfIdentity: coarse cut exceeds window");
    }
    Eigen::Index dim() const { return Eigen::Index(blockSize) * (2 * window + 1); }
    Eigen::Index first(int n) const { return Eigen::Index(n + window) * blockSize; }
    // Applies P_n to a coordinate vector.
    Vec project(int n, const Vec& x) const {
        Vec y = Vec::Zero(x.size());
        y.segment(first(n), blockSize) = x.segment(first(n), blockSize);
        return y;
    }
    Vec projectCentral(const Vec& x) const {
        Vec y = Vec::Zero(x.size());
        const Eigen::Index lo = first(-coarseCut);
        const Eigen::Index len = Eigen::Index(blockSize) * (2 * coarseCut + 1);
        y.segment(lo, len) = x.segment(lo, len);
        return y;
    }
};

}  // namespace dirac
