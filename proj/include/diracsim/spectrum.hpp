// Eigenvalue asymptotics for the far blocks, the second-order predictions,
// the dense-eigensolver oracle with component clustering, the balanced-
// potential check, and log-log residual decay fits.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "diracsim/simop.hpp"

namespace dirac {

struct TailEigen {
    int n = 0;
    std::vector<cplx> values;  // blockSize eigenvalues of (A0 - V)_n
    cplx trace;                // sum of the block's diagonal, for the trace identity
};

// Eigenvalues of a 2x2 matrix via mu = (p+u)/2 +/- ((p-u)^2/4 + q s)^{1/2}.
inline std::array<cplx, 2> eig2x2(const Eigen::Matrix2cd& m) {
    const cplx half = 0.5 * (m(0, 0) + m(1, 1));
    const cplx disc = std::sqrt(0.25 * (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) + m(0, 1) * m(1, 0));
    return {half - disc, half + disc};
}

// Exact eigenvalues of the far blocks (A0 - V)_n, |n| > m. Near-degenerate
// resonant blocks go through the balanced conjugation by
// U_n = [[1, 1], [-r_n, r_n]], r_n = (b3/b2)^{1/2}, before the closed form.
inline std::vector<TailEigen> tailEigenvalues(const SimilarityResult& r) {
    std::vector<TailEigen> out;
    const BasisLayout& l = r.layout;
    for (int n = -l.window; n <= l.window; ++n) {
        if (std::abs(n) <= r.m) continue;
        TailEigen te;
        te.n = n;
        if (l.blockSize() == 1) {
            const cplx z = r.a0.at(n, n) - r.v.at(n, n);
            te.values = {z};
            te.trace = z;
        } else {
            Eigen::Matrix2cd z = r.a0.block(n, n) - r.v.block(n, n);
            te.trace = z(0, 0) + z(1, 1);
            const cplx b2 = -z(0, 1), b3 = -z(1, 0);
            const double offMass = std::abs(b2 * b3);
            const double diagSplit = std::abs(z(0, 0) - z(1, 1));
            if (l.branch == Branch::resonantInteger && b2 != cplx(0.0) &&
                offMass > diagSplit * diagSplit) {
                const cplx rn = std::sqrt(b3 / b2);
                Eigen::Matrix2cd un, uninv;
                un << 1.0, 1.0, -rn, rn;
                uninv << rn, -1.0, rn, 1.0;
                uninv /= 2.0 * rn;
                const Eigen::Matrix2cd zt = uninv * z * un;
                const auto ev = eig2x2(zt);
                te.values = {ev[0], ev[1]};
            } else {
                const auto ev = eig2x2(z);
                te.values = {ev[0], ev[1]};
            }
        }
        out.push_back(std::move(te));
    }
    return out;
}

// Second-order shared sums. Generic per/ap:
//   S_pm(n) = sum_{j != 2n} omega qhat2(-j-eps) qhat3(j+eps) / (2 pi (j-2n) +/- omega beta),
// the +beta sign belonging to the point carrying -p1hat(0). Resonant:
//   S_0(n) = sum_{j != 2n} omega qhat2(-j-epsEff) qhat3(j+epsEff) / (2 pi (j-2n)).
// Sums run over the coefficient support, exact for trig-polynomial input.
inline cplx secondOrderSum(const DerivedPotential& d, const BasisLayout& l, int n, int sign) {
    const int eps = l.epsEff();
    const int lim = std::min(d.qHat2.limit(), d.qHat3.limit());
    cplx s(0.0);
    for (int j = -lim - std::abs(eps); j <= lim + std::abs(eps); ++j) {
        if (j == 2 * n) continue;
        const cplx prod = d.qHat2.at(-j - eps) * d.qHat3.at(j + eps);
        if (prod == cplx(0.0)) continue;
        const cplx den = kTwoPi * double(j - 2 * n) + double(sign) * l.omega * l.beta();
        s += l.omega * prod / den;
    }
    return s;
}

// Half-period symbol sum for dir:
//   lambda_n - nu - theta_{2n} - (omega/pi) sum_{l != 0} theta_{2n+l}^2 / l.
inline cplx dirSecondOrder(const DerivedPotential& d, const BasisLayout& l, int n, int symbolMax) {
    cplx s(0.0);
    for (int ell = -symbolMax - 2 * n; ell <= symbolMax - 2 * n; ++ell) {
        if (ell == 0) continue;
        const cplx th = dirTheta(d, 2 * n + ell);
        if (th == cplx(0.0)) continue;
        s += th * th / double(ell);
    }
    return (l.omega / kPi) * s;
}

struct ResonantVariants {
    cplx viaP4;  // lambda_n - p4hat(0)
    cplx viaP1;  // lambda_{n+r} - p1hat(0); coincides at exact resonance
};

inline ResonantVariants resonantBase(const BasisLayout& l, int n) {
    return {cplx(l.lambda(n)) - l.p4hat0, cplx(l.lambda(n + l.rShift)) - l.p1hat0};
}

// Predicted sigma_n from the closed asymptotic formulas; |n| > m intended.
inline std::vector<cplx> asymptoticPrediction(const DerivedPotential& d, const BasisLayout& l,
                                              int n) {
    if (l.bc == BcKind::dir) {
        const int symbolMax = 4 * l.window;
        const cplx v = cplx(l.lambda(n)) - l.nu - dirTheta(d, 2 * n) - dirSecondOrder(d, l, n, symbolMax);
        return {v};
    }
    if (l.branch == Branch::resonantInteger) {
        const cplx base = resonantBase(l, n).viaP4 - secondOrderSum(d, l, n, 0);
        const int eps = l.epsEff();
        const cplx split = std::sqrt(d.qHat2.at(-2 * n - eps) * d.qHat3.at(2 * n + eps));
        return {base - split, base + split};
    }
    const cplx p1 = cplx(l.lambda(n)) - l.p1hat0 - secondOrderSum(d, l, n, +1);
    const cplx p2 = cplx(l.lambda(n)) - l.p4hat0 - secondOrderSum(d, l, n, -1);
    return {p1, p2};
}

struct OracleSpectrum {
    std::vector<cplx> all;                     // sorted eigenvalues of A0 - Q
    std::vector<std::vector<cplx>> component;  // indexed by n + window
    std::vector<char> flagged;                 // clustering ambiguity per component
};

// Dense non-symmetric eigensolve of the window matrix of \tilde L_bc = A0 - Q,
// clustered to components by optimal matching against the free ladder with a
// d_min/4 rejection band.
inline OracleSpectrum oracleSpectrum(const DerivedPotential& d, const BasisLayout& l) {
    const BlockMatrix a0 = tildeFreeDiagonal(l);
    const BlockMatrix q = buildQ(d, l);
    OracleSpectrum out;
    out.all = eigenvalues(a0.mat() - q.mat());
    const int blocks = 2 * l.window + 1;
    out.component.assign(std::size_t(blocks), {});
    out.flagged.assign(std::size_t(blocks), 0);

    std::vector<cplx> freePts;
    std::vector<int> owner;
    for (int n = -l.window; n <= l.window; ++n)
        for (int j = 0; j < l.blockSize(); ++j) {
            freePts.push_back(l.tierValue(n, j));
            owner.push_back(n);
        }
    const int count = int(freePts.size());
    Eigen::MatrixXd cost(count, count);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < count; ++j)
            cost(i, j) = std::abs(out.all[std::size_t(i)] - freePts[std::size_t(j)]);
    const auto asg = minCostAssignment(cost);

    double dmin = std::numeric_limits<double>::infinity();
    for (int ell = 1; ell <= 2 * l.window; ++ell) dmin = std::min(dmin, componentGap(l, ell));
    const double band = dmin / 4.0;

    for (int i = 0; i < count; ++i) {
        const int j = asg[std::size_t(i)];
        const int n = owner[std::size_t(j)];
        out.component[std::size_t(n + l.window)].push_back(out.all[std::size_t(i)]);
        if (cost(i, j) > band) out.flagged[std::size_t(n + l.window)] = 1;
    }
    return out;
}

struct BalancedReport {
    bool balanced = false;
    double c = 0.0, C = 0.0;
    int samples = 0;
};

// r_bc-balanced test: ratio range of |qhat3(2n+r+eps)| / |qhat2(-2n-r-eps)|
// over |n| >= nFit, within the available coefficient support.
inline BalancedReport balancedCheck(const DerivedPotential& d, const BasisLayout& l, int nFit) {
    BalancedReport rep;
    const int eps = l.epsEff();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    bool mismatch = false;
    // coefficients at grid-roundoff level count as exact zeros
    double scale = 0.0;
    for (int k = -d.qHat2.limit(); k <= d.qHat2.limit(); ++k)
        scale = std::max({scale, std::abs(d.qHat2.at(k)), std::abs(d.qHat3.at(k))});
    const double floor = 1e-11 * scale;
    const int nMax = (std::max(d.qHat2.limit(), d.qHat3.limit()) + std::abs(eps)) / 2 + 1;
    for (int n = -nMax; n <= nMax; ++n) {
        if (std::abs(n) < nFit) continue;
        double a = std::abs(d.qHat2.at(-2 * n - eps));
        double b = std::abs(d.qHat3.at(2 * n + eps));
        if (a <= floor) a = 0.0;
        if (b <= floor) b = 0.0;
        if (a == 0.0 && b == 0.0) continue;
        if (a == 0.0 || b == 0.0) {
            mismatch = true;
            continue;
        }
        ++rep.samples;
        lo = std::min(lo, b / a);
        hi = std::max(hi, b / a);
    }
    if (mismatch) {
        rep.balanced = false;
        return rep;
    }
    if (rep.samples == 0) {
        rep.balanced = true;  // vacuous: no matched coefficients at all
        rep.c = rep.C = 1.0;
        return rep;
    }
    rep.balanced = true;
    rep.c = lo;
    rep.C = hi;
    return rep;
}

struct DecayFit {
    bool conclusive = false;
    double exponent = 0.0;   // |value| ~ C |n|^{-exponent}
    double stderrExp = 0.0;  // standard error of the fitted exponent
    int points = 0;
    bool consistentL2() const { return conclusive && exponent > 0.5; }
    bool consistentL43() const { return conclusive && exponent > 0.75; }
    bool consistentL1() const { return conclusive && exponent > 1.0; }
};

// Log-log least squares of |value_n| against |n| over the clean points.
inline DecayFit residualFit(const std::vector<int>& ns, const std::vector<double>& values,
                            double floor = 1e-14) {
    DecayFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] == 0 || values[i] <= floor) continue;
        xs.push_back(std::log(double(std::abs(ns[i]))));
        ys.push_back(std::log(values[i]));
    }
    fit.points = int(xs.size());
    if (fit.points < 16) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double nPts = double(xs.size());
    const double denom = nPts * sxx - sx * sx;
    if (denom <= 0.0) return fit;
    const double slope = (nPts * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / nPts;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - slope * xs[i] - intercept;
        ss += e * e;
    }
    const double var = ss / std::max(1.0, nPts - 2.0);
    fit.exponent = -slope;
    fit.stderrExp = std::sqrt(var * nPts / denom);
    fit.conclusive = true;
    return fit;
}

struct SpectralReport {
    BasisLayout layout;
    int m = 0;
    std::vector<cplx> central;                    // eigenvalues of (A0 - V)_(m)
    std::vector<TailEigen> tail;                  // |n| > m
    std::vector<std::vector<cplx>> asymptotic;    // predictions, indexed n + window
    OracleSpectrum oracle;
    std::vector<int> fitIndices;                  // |n| used in the decay fits
    std::vector<double> firstOrderResidual;       // |oracle - first order|
    std::vector<double> secondOrderResidual;      // |oracle - second-order prediction|
    DecayFit firstOrderFit, secondOrderFit;
    double resonantVariantGap = 0.0;  // max |viaP4 - viaP1| over the tail
};

inline std::vector<cplx> centralEigenvalues(const SimilarityResult& r) {
    const BasisLayout& l = r.layout;
    const Eigen::Index lo = r.v.flat(-r.m, 0);
    const Eigen::Index len = Eigen::Index(l.blockSize()) * (2 * r.m + 1);
    const Mat central = r.a0.mat().block(lo, lo, len, len) - r.v.mat().block(lo, lo, len, len);
    return eigenvalues(central);
}

inline double pointToSetDistance(cplx z, const std::vector<cplx>& set) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : set) d = std::min(d, std::abs(z - p));
    return d;
}

// Hausdorff-style distance of two small unordered eigenvalue sets under the
// best pairing (sets of size 1 or 2 here).
inline double smallSetMatch(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    if (a.size() == 1) return std::abs(a[0] - b[0]);
    const double direct = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
    const double crossed = std::max(std::abs(a[0] - b[1]), std::abs(a[1] - b[0]));
    return std::min(direct, crossed);
}

inline SpectralReport buildSpectralReport(const DerivedPotential& d, const SimilarityResult& r) {
    SpectralReport rep;
    rep.layout = r.layout;
    rep.m = r.m;
    rep.central = centralEigenvalues(r);
    rep.tail = tailEigenvalues(r);
    rep.oracle = oracleSpectrum(d, r.layout);
    const BasisLayout& l = r.layout;
    rep.asymptotic.assign(std::size_t(2 * l.window + 1), {});
    for (int n = -l.window; n <= l.window; ++n)
        rep.asymptotic[std::size_t(n + l.window)] = asymptoticPrediction(d, l, n);

    // decay fits use the clean interior range only (window-edge components
    // lose coupling partners to truncation)
    for (int n = -l.window / 2; n <= l.window / 2; ++n) {
        if (std::abs(n) <= r.m) continue;
        const auto& oc = rep.oracle.component[std::size_t(n + l.window)];
        if (rep.oracle.flagged[std::size_t(n + l.window)] || int(oc.size()) != l.blockSize())
            continue;
        std::vector<cplx> freePts;
        for (int j = 0; j < l.blockSize(); ++j) freePts.push_back(l.tierValue(n, j));
        auto pred = rep.asymptotic[std::size_t(n + l.window)];
        if (int(pred.size()) != l.blockSize()) pred.resize(std::size_t(l.blockSize()), pred.back());
        const double r1 = smallSetMatch(oc, freePts);
        const double r2 = smallSetMatch(oc, pred);
        rep.fitIndices.push_back(n);
        rep.firstOrderResidual.push_back(r1);
        rep.secondOrderResidual.push_back(r2);
        if (l.branch == Branch::resonantInteger) {
            const auto var = resonantBase(l, n);
            rep.resonantVariantGap = std::max(rep.resonantVariantGap, std::abs(var.viaP4 - var.viaP1));
        }
    }
    rep.firstOrderFit = residualFit(rep.fitIndices, rep.firstOrderResidual);
    rep.secondOrderFit = residualFit(rep.fitIndices, rep.secondOrderResidual);
    return rep;
}

}  // namespace dirac
