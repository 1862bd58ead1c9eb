// The method-of-similar-operators engine: preliminary transform producing B,
// the weighted space M(B), the Phi fixed-point iteration, and the assembly of
// the similarity transform I+U and the block-diagonal correction V.
#pragma once

#include <stdexcept>
#include <vector>

#include "diracsim/dense.hpp"
#include "diracsim/transforms.hpp"

namespace dirac {

// B is confined to a central square strictly inside the window; the final
// result is already given by the preliminary transform.
struct TrivialCentral : std::runtime_error {
    explicit TrivialCentral(int cutIn)
        : std::runtime_error("weightsOf: B equals its central square; trivial case"), cut(cutIn) {}
    int cut;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double ratioIn)
        : std::runtime_error(msg), ratio(ratioIn) {}
    double ratio;
};

struct WeightData {
    int window = 0;
    double deltaP = 0.0;
    // Indexed by |n|; alpha has N+2 entries (alpha[N+1] = 0), alphaPrime and
    // alphaTilde are defined for n in [1, N+1] (entry 0 unused).
    std::vector<double> alpha, alphaPrime, alphaTilde;

    double alphaAt(int n) const {
        const int s = std::min(std::abs(n), window + 1);
        return alpha[std::size_t(s)];
    }
    double alphaTildeAt(int n) const { return alphaTilde[std::size_t(std::min(n, window + 1))]; }
};

namespace detail {
inline std::vector<double> blockRowNorms2(const BlockMatrix& b) {
    std::vector<double> out(std::size_t(2 * b.window() + 1), 0.0);
    for (int s = -b.window(); s <= b.window(); ++s)
        out[std::size_t(s + b.window())] =
            b.mat().middleRows(b.flat(s, 0), b.blockSize()).squaredNorm();
    return out;
}
inline std::vector<double> blockColNorms2(const BlockMatrix& b) {
    std::vector<double> out(std::size_t(2 * b.window() + 1), 0.0);
    for (int s = -b.window(); s <= b.window(); ++s)
        out[std::size_t(s + b.window())] =
            b.mat().middleCols(b.flat(s, 0), b.blockSize()).squaredNorm();
    return out;
}
}  // namespace detail

// The sequences alpha, alpha', alpha~ of the weighted space M(B).
inline WeightData weightsOf(const BlockMatrix& b, const BasisLayout& layout) {
    const int n = b.window();
    const auto row2 = detail::blockRowNorms2(b);
    const auto col2 = detail::blockColNorms2(b);
    const double hs2 = b.mat().squaredNorm();
    if (hs2 == 0.0) throw TrivialCentral(0);

    int outermost = -1;
    for (int s = 0; s <= n; ++s) {
        const double mass = row2[std::size_t(n + s)] + row2[std::size_t(n - s)] +
                            col2[std::size_t(n + s)] + col2[std::size_t(n - s)];
        if (mass > 0.0) outermost = s;
    }
    if (outermost < n) throw TrivialCentral(outermost);

    WeightData w;
    w.window = n;
    w.deltaP = deltaPClosed(layout);
    w.alpha.assign(std::size_t(n) + 2, 0.0);
    w.alphaPrime.assign(std::size_t(n) + 2, 0.0);
    w.alphaTilde.assign(std::size_t(n) + 2, 0.0);

    double rowTail = 0.0, colTail = 0.0;
    std::vector<double> rt(std::size_t(n) + 2, 0.0), ct(std::size_t(n) + 2, 0.0);
    for (int s = n; s >= 0; --s) {
        rowTail += row2[std::size_t(n + s)] + (s > 0 ? row2[std::size_t(n - s)] : 0.0);
        colTail += col2[std::size_t(n + s)] + (s > 0 ? col2[std::size_t(n - s)] : 0.0);
        rt[std::size_t(s)] = rowTail;
        ct[std::size_t(s)] = colTail;
    }
    const double scale = 1.0 / std::sqrt(std::sqrt(hs2));
    for (int s = 0; s <= n; ++s)
        w.alpha[std::size_t(s)] =
            scale * std::pow(std::max(rt[std::size_t(s)], ct[std::size_t(s)]), 0.25);

    for (int cut = 0; cut <= n; ++cut) {
        double best = 0.0;
        for (int ell = -cut; ell <= cut; ++ell)
            for (int j = -n; j <= n; ++j) {
                if (std::abs(j) <= cut) continue;
                best = std::max(best,
                                w.alpha[std::size_t(std::abs(ell))] / componentGap(layout, j - ell));
            }
        w.alphaPrime[std::size_t(cut + 1)] = best;
    }
    for (int s = 1; s <= n + 1; ++s)
        w.alphaTilde[std::size_t(s)] = w.deltaP * w.alpha[std::size_t(s)] + w.alphaPrime[std::size_t(s)];
    return w;
}

// f(A) = sum alpha_n P_n as block-column / block-row scalings.
inline BlockMatrix scaleBlockCols(const BlockMatrix& x, const WeightData& w, bool divide) {
    BlockMatrix y = x;
    for (int s = -x.window(); s <= x.window(); ++s) {
        const double a = w.alphaAt(s);
        auto cols = y.mat().middleCols(y.flat(s, 0), y.blockSize());
        if (divide) {
            if (a == 0.0) {
                if (cols.norm() > 0.0) throw std::runtime_error("scaleBlockCols: X outside M(B)");
            } else {
                cols /= a;
            }
        } else {
            cols *= a;
        }
    }
    return y;
}

inline BlockMatrix scaleBlockRows(const BlockMatrix& x, const WeightData& w, bool divide) {
    BlockMatrix y = x;
    for (int s = -x.window(); s <= x.window(); ++s) {
        const double a = w.alphaAt(s);
        auto rows = y.mat().middleRows(y.flat(s, 0), y.blockSize());
        if (divide) {
            if (a == 0.0) {
                if (rows.norm() > 0.0) throw std::runtime_error("scaleBlockRows: X outside M(B)");
            } else {
                rows /= a;
            }
        } else {
            rows *= a;
        }
    }
    return y;
}

// ||X||_* = max(||X_l||_2, ||X_r||_2) with X = X_l f(A) = f(A) X_r.
inline double starNorm(const BlockMatrix& x, const WeightData& w) {
    const double l = hsNorm(scaleBlockCols(x, w, /*divide=*/true));
    const double r = hsNorm(scaleBlockRows(x, w, /*divide=*/true));
    return std::max(l, r);
}

// Smallest k with ||Gamma_k Q||_2 <= 1 - margin; exists on the window since
// Gamma_N Q = 0. Uses ||Gamma_k Q||^2 = ||Gamma_0 Q||^2 - (central k-square).
inline int chooseK(const BlockMatrix& q, const BasisLayout& layout, double margin = 0.1) {
    const BlockMatrix g0 = applyGamma(q, TransformConfig{layout, 0});
    const double total2 = g0.mat().squaredNorm();
    double central2 = 0.0;
    for (int k = 0; k <= layout.window; ++k) {
        if (k > 0) {
            // blocks entering the central square when the cut grows to k
            for (int m = -k; m <= k; ++m) {
                if (std::abs(m) == k) {
                    for (int n = -k; n <= k; ++n) central2 += g0.block(m, n).squaredNorm();
                    continue;
                }
                central2 += g0.block(m, k).squaredNorm() + g0.block(m, -k).squaredNorm();
            }
        }
        const double norm = std::sqrt(std::max(0.0, total2 - central2));
        if (norm <= 1.0 - margin) return k;
    }
    return layout.window;
}

struct PreliminaryTransform {
    int k = 0;
    BlockMatrix b;
    double gammaKQNorm = 0.0;
    // Decomposition check against B = J0 Q + Q Gamma_0 Q + C with C nuclear.
    double nuclearC = 0.0;
};

inline PreliminaryTransform buildB(const BlockMatrix& q, int k, const BasisLayout& layout) {
    PreliminaryTransform out;
    out.k = k;
    const TransformConfig cfg{layout, k};
    const BlockMatrix g = applyGamma(q, cfg);
    out.gammaKQNorm = hsNorm(g);
    if (out.gammaKQNorm >= 1.0)
        throw std::runtime_error("buildB: ||Gamma_k Q||_2 >= 1; premise of the preliminary transform violated");
    const BlockMatrix jq = applyJ(q, k);
    const Mat rhs = q.mat() * g.mat() - g.mat() * jq.mat();
    Mat iPlusG = g.mat();
    iPlusG += Mat::Identity(q.dim(), q.dim());
    Eigen::PartialPivLU<Mat> lu(iPlusG);
    out.b = BlockMatrix(q.window(), q.blockSize());
    out.b.mat() = jq.mat() + lu.solve(rhs);

    const BlockMatrix g0 = applyGamma(q, TransformConfig{layout, 0});
    const Mat c = out.b.mat() - applyJ(q, 0).mat() - q.mat() * g0.mat();
    out.nuclearC = nuclearNormEstimate(c);
    return out;
}

// Smallest m with 4 alpha~_{m+1} ||B||_* <= 1 - margin.
inline int chooseM(const WeightData& w, double starNormB, double margin = 0.1) {
    for (int m = 0; m <= w.window; ++m)
        if (4.0 * w.alphaTildeAt(m + 1) * starNormB <= 1.0 - margin) return m;
    throw std::runtime_error("chooseM: no admissible cut on the window");
}

struct FixedPointLog {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residualHs;   // ||X_{i+1} - X_i||_2
    std::vector<double> ratioStar;    // successive-quotient in the *-norm
    double contractionBound = 0.0;    // 4 gamma ||B||_*
    double ballExcursion = 0.0;       // max_i ||X_i - B||_* / (3 ||B||_*)
};

// Simple iteration X_0 = 0, X_1 = Phi(X_0) = B for
//   Phi(X) = B Gamma X - (Gamma X)(J B) - (Gamma X) J(B Gamma X) + B.
// J, Gamma, and the *-norm are supplied by the caller, so the same core
// serves the weighted engine and the 2x2 admissible-triplet examples.
template <class JOp, class GOp, class NormFn>
BlockMatrix fixedPointIterate(const BlockMatrix& b, JOp applyJOp, GOp applyGammaOp, double tol,
                              int maxIter, NormFn normStar, FixedPointLog& log) {
    const BlockMatrix jb = applyJOp(b);
    const double ballRadius = 3.0 * normStar(b);
    BlockMatrix x(b.window(), b.blockSize());
    double prevDiffStar = -1.0;
    for (int it = 0; it < maxIter; ++it) {
        const BlockMatrix gx = applyGammaOp(x);
        const Mat bgx = b.mat() * gx.mat();
        BlockMatrix bgxBlock(b.window(), b.blockSize());
        bgxBlock.mat() = bgx;
        const BlockMatrix jbgx = applyJOp(bgxBlock);
        BlockMatrix next(b.window(), b.blockSize());
        next.mat() = bgx - gx.mat() * jb.mat() - gx.mat() * jbgx.mat() + b.mat();

        BlockMatrix diff = next;
        diff.mat() -= x.mat();
        const double res = hsNorm(diff);
        log.residualHs.push_back(res);
        const double diffStar = normStar(diff);
        if (prevDiffStar > 0.0) log.ratioStar.push_back(diffStar / prevDiffStar);
        prevDiffStar = diffStar;

        x = next;
        if (ballRadius > 0.0) {
            BlockMatrix fromB = x;
            fromB.mat() -= b.mat();
            log.ballExcursion = std::max(log.ballExcursion, normStar(fromB) / ballRadius);
        }
        log.iterations = it + 1;
        if (res < tol) {
            log.converged = true;
            return x;
        }
    }
    const double lastRatio = log.ratioStar.empty() ? 1.0 : log.ratioStar.back();
    throw ConvergenceError("fixedPoint: maxIter exceeded; contraction-ratio estimate " +
                               std::to_string(lastRatio),
                           lastRatio);
}

struct SimilarityOptions {
    double marginK = 0.1;
    double marginM = 0.1;
    double fixedPointTol = 1e-13;
    int maxIter = 200;
    double residualFlagFactor = 1e-8;  // flag if residual > factor * ||Q||_2
    double deltaPCap = 1e6;
};

struct SimilarityResult {
    BasisLayout layout;
    int k = 0;
    int m = 0;
    BlockMatrix a0, q, b, xstar, v, u;
    WeightData weights;
    FixedPointLog fp;
    bool trivialCentral = false;

    double deltaP = 0.0;
    double gammaKQNorm = 0.0;
    double hsNormB = 0.0;
    double starNormB = 0.0;
    double nuclearC = 0.0;
    double similarityResidual = 0.0;
    double sigmaMinIU = 0.0;
    double qTail = 0.0;
    bool residualFlagged = false;

    Mat iPlusU() const {
        Mat z = u.mat();
        z += Mat::Identity(u.mat().rows(), u.mat().cols());
        return z;
    }
};

// (A0 - Q)(I+U) - (I+U)(A0 - V), HS norm.
inline double similarityResidualOf(const BlockMatrix& a0, const BlockMatrix& q,
                                   const BlockMatrix& u, const BlockMatrix& v) {
    const Mat iu = u.mat() + Mat::Identity(u.mat().rows(), u.mat().cols());
    const Mat lhs = (a0.mat() - q.mat()) * iu;
    const Mat rhs = iu * (a0.mat() - v.mat());
    return (lhs - rhs).norm();
}

// Full engine: Q -> chooseK -> B -> weights -> chooseM -> fixed point -> U, V.
inline SimilarityResult runSimilarity(const DerivedPotential& d, const BasisLayout& layout,
                                      const SimilarityOptions& opt = {}) {
    SimilarityResult r;
    r.layout = layout;
    r.deltaP = deltaPClosed(layout);
    if (layout.branch == Branch::generic && layout.bc != BcKind::dir && r.deltaP > opt.deltaPCap)
        throw std::runtime_error(
            "runSimilarity: delta^P exceeds the generic-branch cap (near-resonant potential); "
            "delta^P = " + std::to_string(r.deltaP));
    r.a0 = tildeFreeDiagonal(layout);
    r.q = buildQ(d, layout);
    r.qTail = qTailEnergy(d, layout);

    if (hsNorm(r.q) == 0.0) {
        r.k = 0;
        r.m = 0;
        r.b = BlockMatrix(layout.window, layout.blockSize());
        r.xstar = r.b;
        r.v = r.b;
        r.u = r.b;
        r.fp.converged = true;
        r.sigmaMinIU = 1.0;
        return r;
    }

    r.k = chooseK(r.q, layout, opt.marginK);
    auto pre = buildB(r.q, r.k, layout);
    r.b = pre.b;
    r.gammaKQNorm = pre.gammaKQNorm;
    r.nuclearC = pre.nuclearC;
    r.hsNormB = hsNorm(r.b);

    const TransformConfig kCfg{layout, r.k};
    const BlockMatrix gkq = applyGamma(r.q, kCfg);

    bool trivial = false;
    int trivialCut = 0;
    try {
        r.weights = weightsOf(r.b, layout);
    } catch (const TrivialCentral& t) {
        trivial = true;
        trivialCut = t.cut;
    }

    if (trivial) {
        r.trivialCentral = true;
        r.m = trivialCut;
        r.xstar = r.b;
        r.v = applyJ(r.b, r.m);  // equals B: fully central
        r.u = gkq;
        r.starNormB = r.hsNormB;
        r.fp.converged = true;
    } else {
        r.starNormB = starNorm(r.b, r.weights);
        r.m = chooseM(r.weights, r.starNormB, opt.marginM);
        const TransformConfig mCfg{layout, r.m};
        r.fp.contractionBound = 4.0 * r.weights.alphaTildeAt(r.m + 1) * r.starNormB;
        const auto& w = r.weights;
        r.xstar = fixedPointIterate(
            r.b, [&](const BlockMatrix& x) { return applyJ(x, r.m); },
            [&](const BlockMatrix& x) { return applyGamma(x, mCfg); }, opt.fixedPointTol,
            opt.maxIter, [&](const BlockMatrix& x) { return starNorm(x, w); }, r.fp);
        r.v = applyJ(r.xstar, r.m);
        const BlockMatrix gmx = applyGamma(r.xstar, mCfg);
        r.u = BlockMatrix(layout.window, layout.blockSize());
        r.u.mat() = gkq.mat() + gmx.mat() + gkq.mat() * gmx.mat();
    }

    r.similarityResidual = similarityResidualOf(r.a0, r.q, r.u, r.v);
    r.sigmaMinIU = smallestSingularValue(r.iPlusU());
    r.residualFlagged = r.similarityResidual > opt.residualFlagFactor * hsNorm(r.q);
    return r;
}

}  // namespace dirac
