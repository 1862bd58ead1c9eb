// The transform families of the method of similar operators on the window:
// J_k keeps the central (2k+1)-square and the outer block diagonal; Gamma_k
// weighs the complement by the reciprocal gaps of the free eigenvalues.
#pragma once

#include <stdexcept>

#include "diracsim/freebasis.hpp"

namespace dirac {

struct TransformConfig {
    BasisLayout layout;
    int cut = 0;  // k

    bool inGammaPattern(int m, int n) const {
        return m != n && std::max(std::abs(m), std::abs(n)) > cut;
    }
};

// J_k X = P_(k) X P_(k) + sum_{|n|>k} P_n X P_n.
inline BlockMatrix applyJ(const BlockMatrix& x, int k) {
    if (k > x.window()) throw std::invalid_argument("applyJ: cut exceeds window");
    BlockMatrix y(x.window(), x.blockSize());
    for (int m = -x.window(); m <= x.window(); ++m)
        for (int n = -x.window(); n <= x.window(); ++n)
            if (m == n || (std::abs(m) <= k && std::abs(n) <= k)) y.block(m, n) = x.block(m, n);
    return y;
}

// Gamma_k X: entry (j,l) of block (m,n) divided by tier_j(m) - tier_l(n),
// on the complement of the J_k pattern. In the generic per/ap branch this is
// the entrywise rule with corner gaps lambda_m - lambda_n and antidiagonal
// gaps lambda_m - lambda_n -/+ beta; in the resonant and dir branches every
// entry of a block sees the same component gap.
inline BlockMatrix applyGamma(const BlockMatrix& x, const TransformConfig& cfg) {
    const BasisLayout& l = cfg.layout;
    if (x.window() != l.window || x.blockSize() != l.blockSize())
        throw std::invalid_argument("applyGamma: matrix does not match layout");
    BlockMatrix y(x.window(), x.blockSize());
    for (int m = -l.window; m <= l.window; ++m)
        for (int n = -l.window; n <= l.window; ++n) {
            if (!cfg.inGammaPattern(m, n)) continue;
            for (int j = 0; j < l.blockSize(); ++j)
                for (int k = 0; k < l.blockSize(); ++k) {
                    const cplx den = l.tierValue(m, j) - l.tierValue(n, k);
                    if (den == cplx(0.0))
                        throw std::runtime_error("applyGamma: zero gap; excluded-set condition violated");
                    y.at(m, n, j, k) = x.at(m, n, j, k) / den;
                }
        }
    return y;
}

// Half-period anti-Hankel symbol of the dir perturbation:
// theta_j = (1/2) [F(q2, j) + F(q3, -j)] with F the half-period integral.
inline cplx dirTheta(const DerivedPotential& d, int j) {
    return 0.5 * (halfPeriodIntegral(d.qHat2, j) + halfPeriodIntegral(d.qHat3, -j));
}

// Window matrix of the off-diagonal perturbation Q in the (possibly
// regrouped) free basis. per/ap blocks are
//   [[0, qhat2(-m-n-eps)], [qhat3(m+n+eps), 0]]
// with eps the effective coupling shift; dir entries are theta_{m+n}.
inline BlockMatrix buildQ(const DerivedPotential& d, const BasisLayout& l) {
    BlockMatrix q(l.window, l.blockSize());
    if (l.bc == BcKind::dir) {
        std::vector<cplx> theta(std::size_t(4 * l.window + 1));
        for (int j = -2 * l.window; j <= 2 * l.window; ++j)
            theta[std::size_t(j + 2 * l.window)] = dirTheta(d, j);
        for (int m = -l.window; m <= l.window; ++m)
            for (int n = -l.window; n <= l.window; ++n)
                q.at(m, n) = theta[std::size_t(m + n + 2 * l.window)];
    } else {
        const int eps = l.epsEff();
        for (int m = -l.window; m <= l.window; ++m)
            for (int n = -l.window; n <= l.window; ++n) {
                q.at(m, n, 0, 1) = d.qHat2.at(-m - n - eps);
                q.at(m, n, 1, 0) = d.qHat3.at(m + n + eps);
            }
    }
    return q;
}

// Energy of the coefficient tails of q2, q3 that the window discards.
inline double qTailEnergy(const DerivedPotential& d, const BasisLayout& l) {
    const int kept = 2 * l.window + std::abs(l.bc == BcKind::dir ? 0 : l.epsEff());
    double s = 0.0;
    for (int j = kept + 1; j <= d.qHat2.limit(); ++j)
        s += std::norm(d.qHat2.at(j)) + std::norm(d.qHat2.at(-j)) + std::norm(d.qHat3.at(j)) +
             std::norm(d.qHat3.at(-j));
    return s;
}

// || A0 (Gamma_k X) - (Gamma_k X) A0 - (X - J_k X) ||_2.
inline double commutatorResidual(const BlockMatrix& a0, const BlockMatrix& x,
                                 const TransformConfig& cfg) {
    const BlockMatrix gx = applyGamma(x, cfg);
    const BlockMatrix jx = applyJ(x, cfg.cut);
    Mat lhs = a0.mat() * gx.mat() - gx.mat() * a0.mat();
    lhs -= x.mat() - jx.mat();
    return lhs.norm();
}

// Operator norm of Gamma_k on window Hilbert-Schmidt matrices: the transform
// is entrywise, so the norm is the largest reciprocal gap over its pattern.
inline double gammaNormOnWindow(const TransformConfig& cfg) {
    const BasisLayout& l = cfg.layout;
    double best = 0.0;
    for (int m = -l.window; m <= l.window; ++m)
        for (int n = -l.window; n <= l.window; ++n) {
            if (!cfg.inGammaPattern(m, n)) continue;
            for (int j = 0; j < l.blockSize(); ++j)
                for (int k = 0; k < l.blockSize(); ++k) {
                    const double den = std::abs(l.tierValue(m, j) - l.tierValue(n, k));
                    if (den == 0.0)
                        throw std::runtime_error("gammaNormOnWindow: zero gap in pattern");
                    best = std::max(best, 1.0 / den);
                }
        }
    return best;
}

}  // namespace dirac
