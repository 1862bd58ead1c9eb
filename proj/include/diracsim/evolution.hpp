// The C0-group generated by i L_bc: 2x2 block exponentials, the direct-sum
// group, the conjugated group W(I+U) T~(t) (I+U)^{-1} W^{-1}, the Fourier
// truncation bound, and the equiconvergence scan.
#pragma once

#include <cmath>
#include <vector>

#include "diracsim/spectrum.hpp"

namespace dirac {

// e^{i t M} for a 2x2 block:
//   e^{it(a+d)/2} { cos(rho t) I + i sin(rho t)/rho [[ (a-d)/2, b], [c, (d-a)/2]] },
// rho = ((a-d)^2/4 + bc)^{1/2}; sin(rho t)/rho -> t as rho -> 0. Either
// branch of rho gives the same value (even/odd split).
inline Eigen::Matrix2cd expBlock2(const Eigen::Matrix2cd& m, double t) {
    const cplx a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const cplx half = 0.5 * (a - d);
    const cplx rho = std::sqrt(half * half + b * c);
    cplx cosr, sincr;
    if (std::abs(rho) < 1e-8) {
        const cplx z = rho * t;
        cosr = 1.0 - z * z / 2.0 + z * z * z * z / 24.0;
        sincr = t * (1.0 - z * z / 6.0 + z * z * z * z / 120.0);
    } else {
        cosr = std::cos(rho * t);
        sincr = std::sin(rho * t) / rho;
    }
    Eigen::Matrix2cd inner;
    inner << half, b, c, -half;
    Eigen::Matrix2cd out = cosr * Eigen::Matrix2cd::Identity() + cplx(0.0, 1.0) * sincr * inner;
    out *= std::exp(cplx(0.0, 1.0) * t * 0.5 * (a + d));
    return out;
}

// Coordinates over the window basis; the norm is the plain l2 norm.
using StateVector = Vec;

struct GroupEvaluator {
    SimilarityResult sim;
    ResolutionOfIdentity roi;
    Mat wMat, wInv;       // W_bc as a Fourier-side convolution matrix
    Mat iu, iuInv;        // I + U
    Mat z, zInv;          // Z = W (I + U)
    Mat centralGen;       // (A0 - V) restricted to the central square
    std::vector<Eigen::Matrix2cd> tailGen;  // per |n| > m (2x2; 1x1 embedded at (0,0))
    std::vector<int> tailIndex;
    double gammaBc = 0.0;
    double normZ = 0.0;

    GroupEvaluator(const PotentialSpec& spec, const DerivedPotential& d, const SimilarityResult& s)
        : sim(s), roi(s.layout.window, s.m, s.layout.blockSize()) {
        const BasisLayout& l = s.layout;
        const BlockMatrix w = wAsFourierOperator(spec, d, l.window);
        wMat = w.mat();
        wInv = inverse(wMat);
        iu = s.iPlusU();
        iuInv = inverse(iu);
        z = wMat * iu;
        zInv = iuInv * wInv;
        normZ = opNorm(z);
        gammaBc = l.bc == BcKind::dir
                      ? std::abs(d.nu.imag())
                      : std::max(std::abs(d.p1hat0.imag()), std::abs(d.p4hat0.imag()));

        const Eigen::Index lo = s.v.flat(-s.m, 0);
        const Eigen::Index len = Eigen::Index(l.blockSize()) * (2 * s.m + 1);
        centralGen = s.a0.mat().block(lo, lo, len, len) - s.v.mat().block(lo, lo, len, len);
        for (int n = -l.window; n <= l.window; ++n) {
            if (std::abs(n) <= s.m) continue;
            Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
            if (l.blockSize() == 1)
                g(0, 0) = s.a0.at(n, n) - s.v.at(n, n);
            else
                g = s.a0.block(n, n) - s.v.block(n, n);
            tailGen.push_back(g);
            tailIndex.push_back(n);
        }
    }

    // Operator norm of the k-th tail block of V (2x2 singular value).
    double tailVNorm(int n) const {
        const BasisLayout& l = sim.layout;
        if (l.blockSize() == 1) return std::abs(sim.v.at(n, n));
        Eigen::Matrix2cd vb = sim.v.block(n, n);
        return opNorm(Mat(vb));
    }

    // sup over the 2x2/1x1 tail exponentials on |t| <= b, the boundedness
    // diagnostic for the direct-sum group.
    double boundednessConstant(double b, int tGrid = 9) const {
        double worst = 0.0;
        for (int i = 0; i <= tGrid; ++i) {
            const double t = -b + 2.0 * b * i / tGrid;
            for (std::size_t j = 0; j < tailGen.size(); ++j) {
                const Eigen::Matrix2cd e = expBlock2(tailGen[j], t);
                const int bs = sim.layout.blockSize();
                if (bs == 1)
                    worst = std::max(worst, std::abs(e(0, 0)));
                else
                    worst = std::max(worst, opNorm(Mat(e)));
            }
        }
        return worst;
    }
};

// T~(t) = e^{it (A0-V)_(m)} + directsum_{|n|>m} e^{it (A0-V)_n}.
inline StateVector tildeGroup(const GroupEvaluator& ev, double t, const StateVector& x) {
    if (x.size() != ev.roi.dim()) throw std::invalid_argument("tildeGroup: state size mismatch");
    StateVector y = StateVector::Zero(x.size());
    const int bs = ev.roi.blockSize;
    const Eigen::Index lo = ev.roi.first(-ev.roi.coarseCut);
    const Eigen::Index len = Eigen::Index(bs) * (2 * ev.roi.coarseCut + 1);
    const Mat e = expm(cplx(0.0, 1.0) * t * ev.centralGen);
    y.segment(lo, len) = e * x.segment(lo, len);
    for (std::size_t j = 0; j < ev.tailGen.size(); ++j) {
        const int n = ev.tailIndex[j];
        const Eigen::Index at = ev.roi.first(n);
        const Eigen::Matrix2cd eb = expBlock2(ev.tailGen[j], t);
        if (bs == 1)
            y(at) = eb(0, 0) * x(at);
        else
            y.segment(at, 2) = eb.topLeftCorner(2, 2) * x.segment(at, 2);
    }
    return y;
}

// (I+U) T~(t) (I+U)^{-1}: the group generated by i(A0 - Q).
inline StateVector conjugatedGroup(const GroupEvaluator& ev, double t, const StateVector& x) {
    return ev.iu * tildeGroup(ev, t, ev.iuInv * x);
}

// T(t) = W (I+U) T~(t) (I+U)^{-1} W^{-1}.
inline StateVector fullGroup(const GroupEvaluator& ev, double t, const StateVector& x) {
    return ev.z * tildeGroup(ev, t, ev.zInv * x);
}

struct TruncationCheck {
    double actual = 0.0;
    double bound = 0.0;
};

// || T(t)x - Z T~(t) P_(n) Z^{-1} x || against
// ||Z|| ( sum_{|k|>n} e^{2|t|(||V_k|| + gamma_bc)} ||P_k Z^{-1} x||^2 )^{1/2}.
inline TruncationCheck truncationBound(const GroupEvaluator& ev, const StateVector& x, double t,
                                       int n) {
    if (n <= ev.sim.m || n > ev.sim.layout.window)
        throw std::invalid_argument("truncationBound: need m < n <= N");
    const StateVector full = fullGroup(ev, t, x);
    StateVector xin = ev.zInv * x;
    StateVector truncated = xin;
    const int bs = ev.roi.blockSize;
    for (int k = -ev.sim.layout.window; k <= ev.sim.layout.window; ++k)
        if (std::abs(k) > n) truncated.segment(ev.roi.first(k), bs).setZero();
    const StateVector approx = ev.z * tildeGroup(ev, t, truncated);

    TruncationCheck out;
    out.actual = (full - approx).norm();
    double s = 0.0;
    for (int k = -ev.sim.layout.window; k <= ev.sim.layout.window; ++k) {
        if (std::abs(k) <= n) continue;
        const double vk = ev.tailVNorm(k);
        const double w = std::exp(2.0 * std::abs(t) * (vk + ev.gammaBc));
        s += w * xin.segment(ev.roi.first(k), bs).squaredNorm();
    }
    out.bound = ev.normZ * std::sqrt(s);
    return out;
}

struct EquiconvergenceScan {
    std::vector<int> ell;
    std::vector<double> hsNorm;           // || Z Pi_l Z^{-1} - W Pi_l W^{-1} ||_2
    double floor = 0.0;                   // value at l = N (numerical floor)
    double maxCrossProjection = 0.0;      // max_{i != j} || Pbar_i Pbar_j ||_2
    double resolutionDefect = 0.0;        // || sum Pbar - I ||_2
    double conditionZ = 0.0;
};

// Equiconvergence scan: partial sums of the conjugated
// projections Pbar_j = Z P_j Z^{-1} against the W-conjugated free ones,
// plus the numerical resolution-of-identity checks.
inline EquiconvergenceScan equiconvergenceScan(const GroupEvaluator& ev) {
    const BasisLayout& l = ev.sim.layout;
    const int bs = l.blockSize();
    const int m = ev.sim.m;
    EquiconvergenceScan out;
    out.conditionZ = ev.normZ * opNorm(ev.zInv);

    auto colBlock = [&](const Mat& mat, int n) {
        return mat.middleCols(ev.roi.first(n), bs);
    };
    auto rowBlock = [&](const Mat& mat, int n) {
        return mat.middleRows(ev.roi.first(n), bs);
    };

    // Incremental partial sums: D_l+1 = D_l + (Z P Z^{-1} - W P W^{-1}) over
    // the two components entering at l+1.
    Mat diff = Mat::Zero(ev.roi.dim(), ev.roi.dim());
    for (int n = -m; n <= m; ++n)
        diff += colBlock(ev.z, n) * rowBlock(ev.zInv, n) - colBlock(ev.wMat, n) * rowBlock(ev.wInv, n);
    out.ell.push_back(m);
    out.hsNorm.push_back(diff.norm());
    for (int ell = m + 1; ell <= l.window; ++ell) {
        for (int n : {ell, -ell})
            diff += colBlock(ev.z, n) * rowBlock(ev.zInv, n) -
                    colBlock(ev.wMat, n) * rowBlock(ev.wInv, n);
        out.ell.push_back(ell);
        out.hsNorm.push_back(diff.norm());
    }
    out.floor = out.hsNorm.back();

    // Resolution-of-identity numerics for the family {Pbar_(m)} u {Pbar_n}:
    // sum Pbar - I = Z Z^{-1} - I, and
    // Pbar_i Pbar_j = (Z cols_i) E_ij (Z^{-1} rows_j) with E = Z^{-1} Z.
    out.resolutionDefect = (ev.z * ev.zInv - Mat::Identity(ev.roi.dim(), ev.roi.dim())).norm();
    const Mat e = ev.zInv * ev.z;
    struct Range {
        Eigen::Index first, len;
    };
    std::vector<Range> ranges;
    ranges.push_back({ev.roi.first(-m), Eigen::Index(bs) * (2 * m + 1)});
    for (int n = -l.window; n <= l.window; ++n)
        if (std::abs(n) > m) ranges.push_back({ev.roi.first(n), Eigen::Index(bs)});
    for (std::size_t i = 0; i < ranges.size(); ++i)
        for (std::size_t j = 0; j < ranges.size(); ++j) {
            if (i == j) continue;
            const Mat eij = e.block(ranges[i].first, ranges[j].first, ranges[i].len, ranges[j].len);
            const double norm = (ev.z.middleCols(ranges[i].first, ranges[i].len) * eij *
                                 ev.zInv.middleRows(ranges[j].first, ranges[j].len))
                                    .norm();
            out.maxCrossProjection = std::max(out.maxCrossProjection, norm);
        }
    return out;
}

}  // namespace dirac
