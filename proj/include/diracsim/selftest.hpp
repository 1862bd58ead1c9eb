// The selftest suite: deterministic invariant checks over every transform
// branch, printable as a byte-stable report.
#pragma once

#include <sstream>

#include "diracsim/pipeline.hpp"

namespace dirac {

struct SelftestResult {
    int passed = 0;
    int failed = 0;
    std::string report;
    bool ok() const { return failed == 0; }
};

namespace detail {

inline BasisLayout selftestLayout(BcKind bc, double omega, cplx p1, cplx p4, int window) {
    PotentialSpec s;
    s.omega = omega;
    s.bc.kind = bc;
    if (p1 != cplx(0.0)) s.p(1)[0] = p1;
    if (p4 != cplx(0.0)) s.p(4)[0] = p4;
    return makeLayout(derive(s, {128, 1e-9}), window);
}

}  // namespace detail

inline SelftestResult selftest() {
    SelftestResult res;
    std::ostringstream out;
    auto check = [&](const std::string& name, bool ok, double value) {
        out << (ok ? "PASS " : "FAIL ") << name << " value=" << fmt(value) << "\n";
        (ok ? res.passed : res.failed) += 1;
    };

    struct NamedLayout {
        std::string name;
        BasisLayout layout;
    };
    const int window = 16;
    const std::vector<NamedLayout> layouts = {
        {"per_generic", detail::selftestLayout(BcKind::per, kTwoPi, cplx(0.3, 0.05), cplx(-0.1), window)},
        {"ap_generic", detail::selftestLayout(BcKind::ap, 1.4, cplx(0.22, -0.1), cplx(0.05, 0.08), window)},
        {"per_resonant_r1", detail::selftestLayout(BcKind::per, kTwoPi, cplx(1.0), cplx(0.0), window)},
        {"ap_resonant_r1", detail::selftestLayout(BcKind::ap, kTwoPi, cplx(0.7), cplx(-0.3), window)},
        {"dir", detail::selftestLayout(BcKind::dir, kPi, cplx(0.2, 0.1), cplx(0.1), window)},
    };

    Rng rng(0x5eed0001);
    for (const auto& [name, l] : layouts) {
        const auto a0 = tildeFreeDiagonal(l);
        double worstIdem = 0.0, worstJGamma = 0.0, worstComm = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int cut = int(rng.next() % 5);
            const TransformConfig cfg{l, cut};
            const auto x = randomBlockMatrix(rng, window, l.blockSize());
            const auto jx = applyJ(x, cut);
            worstIdem = std::max(worstIdem, (applyJ(jx, cut).mat() - jx.mat()).norm());
            const auto gx = applyGamma(x, cfg);
            worstJGamma = std::max(worstJGamma, hsNorm(applyJ(gx, cut)));
            worstComm = std::max(worstComm, commutatorResidual(a0, x, cfg) / hsNorm(x));
        }
        check("transforms." + name + ".J_idempotent", worstIdem == 0.0, worstIdem);
        check("transforms." + name + ".J_Gamma_zero", worstJGamma == 0.0, worstJGamma);
        check("transforms." + name + ".commutator_identity", worstComm < 1e-12, worstComm);
        const double scan = gammaNormOnWindow(TransformConfig{l, 0});
        const double closed = deltaPClosed(l);
        check("transforms." + name + ".gamma_norm_delta_p",
              std::abs(scan - closed) <= 1e-10 * closed, std::abs(scan - closed));
    }

    {  // Gamma_0^0 Hilbert-Schmidt bound at beta = 0
        const auto l = detail::selftestLayout(BcKind::per, 1.9, cplx(0.0), cplx(0.0), window);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const auto x = randomBlockMatrix(rng, window, 2);
            worst = std::max(worst, hsNorm(applyGamma(x, TransformConfig{l, 0})) / hsNorm(x));
        }
        check("transforms.gamma0_hs_bound", worst <= 1.9 / kTwoPi * (1.0 + 1e-13), worst);
    }

    {  // 2x2 fixed-point example
        const auto l = detail::selftestLayout(BcKind::dir, kPi, cplx(0.0), cplx(0.0), 1);
        BlockMatrix b(1, 1);
        b.at(1, -1) = cplx(0.1);
        b.at(-1, 1) = cplx(0.1);
        const TransformConfig cfg{l, 0};
        FixedPointLog log;
        const auto xstar = fixedPointIterate(
            b, [](const BlockMatrix& x) { return applyJ(x, 0); },
            [&](const BlockMatrix& x) { return applyGamma(x, cfg); }, 1e-15, 200,
            [](const BlockMatrix& x) { return hsNorm(x); }, log);
        const double mu = std::sqrt(1.01);
        const double err = std::max(std::abs((cplx(1.0) - xstar.at(1, 1)) - cplx(mu)),
                                    std::abs((cplx(-1.0) - xstar.at(-1, -1)) + cplx(mu)));
        check("simop.two_by_two_eigenvalues", err < 1e-12, err);
        double worstRatio = 0.0;
        for (double r : log.ratioStar) worstRatio = std::max(worstRatio, r);
        check("simop.two_by_two_contraction", worstRatio <= 4.0 * 0.5 * hsNorm(b) + 1e-10, worstRatio);
        BlockMatrix diff = xstar;
        diff.mat() -= b.mat();
        check("simop.two_by_two_ball", hsNorm(diff) <= 3.0 * hsNorm(b), hsNorm(diff));
    }

    {  // HS norm identities
        const auto id = BlockMatrix::identity(7, 2);
        check("blockmat.hs_identity", std::abs(hsNorm(id) - std::sqrt(30.0)) < 1e-14,
              hsNorm(id));
        const auto x = randomBlockMatrix(rng, 5, 2);
        check("blockmat.multiply_identity",
              (multiply(x, BlockMatrix::identity(5, 2)).mat() - x.mat()).norm() == 0.0, 0.0);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const auto a = randomBlockMatrix(rng, 4, 2);
            const auto bb = randomBlockMatrix(rng, 4, 2);
            worst = std::max(worst, hsNorm(multiply(a, bb)) / (hsNorm(a) * hsNorm(bb)));
        }
        check("blockmat.hs_submultiplicative", worst <= 1.0 + 1e-13, worst);
    }

    {  // delta^P closed form vs distance table for random beta with r not integer
        double worst = 0.0;
        int tested = 0;
        while (tested < 20) {
            const cplx beta = rng.complexInDisk(1.4);
            const double r = beta.real();
            if (std::round(r) != 0.0 && std::abs(r - std::round(r)) < 0.05) continue;
            const auto l = detail::selftestLayout(BcKind::per, kTwoPi, beta, cplx(0.0), 8);
            if (l.branch != Branch::generic) continue;
            const auto table = distanceTable(spectralComponents(l));
            worst = std::max(worst,
                             std::abs(deltaPFromTable(table) - deltaPClosed(l)) / deltaPClosed(l));
            ++tested;
        }
        check("freebasis.delta_p_table_vs_closed", worst < 1e-12, worst);
    }

    {  // block exponential against the dense scaled-Taylor route
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::Matrix2cd m;
            m << rng.complexInDisk(), rng.complexInDisk(), rng.complexInDisk(), rng.complexInDisk();
            const double t = rng.uniform(-4.0, 4.0);
            worst = std::max(worst,
                             (Mat(expBlock2(m, t)) - expm(cplx(0.0, 1.0) * t * Mat(m))).norm());
        }
        check("evolution.exp_block_vs_series", worst < 1e-12, worst);
    }

    out << "SELFTEST " << (res.failed == 0 ? "OK" : "FAILED") << " passed=" << res.passed
        << " failed=" << res.failed << "\n";
    res.report = out.str();
    return res;
}

}  // namespace dirac
