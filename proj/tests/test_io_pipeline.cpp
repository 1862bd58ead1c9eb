#include "doctest.h"
#include "diracsim/diracsim.hpp"

#include <filesystem>
#include <algorithm>
#include <fstream>

using namespace dirac;
namespace fs = std::filesystem;

namespace {

const std::string kData = std::string(DIRACSIM_SOURCE_DIR) + "/data/potentials/";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path tmpDir(const std::string& name) {
    const auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("parsePotentialFile reads the bundled files") {
    const auto s = parsePotentialFile(kData + "per_generic.pot");
    CHECK(s.bc.kind == BcKind::per);
    CHECK(s.omega == doctest::Approx(kTwoPi).epsilon(1e-15));
    CHECK(s.pHatAt(1, 0) == cplx(0.3));
    CHECK(s.pHatAt(2, 1) == cplx(0.15));
    CHECK(s.pHatAt(3, -1) == cplx(0.15));
    CHECK(s.maxSupport() == 1);

    const auto r = parsePotentialFile(kData + "per_resonant.pot");
    CHECK(derive(r, {1024, 1e-9}).branch == Branch::resonantInteger);
}

TEST_CASE("parsePotentialFile reports malformed input with the line number") {
    const auto dir = tmpDir("diracsim_parse");
    const auto path = dir / "bad.pot";
    {
        std::ofstream out(path);
        out << "omega 6.28\n";
        out << "bc per\n";
        out << "p2 zero 1 0\n";
    }
    CHECK_THROWS_WITH_AS(parsePotentialFile(path.string()), doctest::Contains(":3:"), ParseError);

    const auto path2 = dir / "nobc.pot";
    {
        std::ofstream out(path2);
        out << "omega 6.28\n";
    }
    CHECK_THROWS_WITH_AS(parsePotentialFile(path2.string()), doctest::Contains("missing 'bc'"),
                         ParseError);
    fs::remove_all(dir);
}

TEST_CASE("parseRunConfig resolves relative paths and rejects bad keys") {
    const auto dir = tmpDir("diracsim_cfg");
    {
        std::ofstream out(dir / "p.pot");
        out << "omega 6.283185307179586\nbc per\np1 0 0.3 0.0\n";
    }
    {
        std::ofstream out(dir / "run.cfg");
        out << "potential p.pot\nwindow 12\ngrid 256\noutputs spectrum equiconv\nstate basis 2 1\n";
    }
    const auto cfg = parseRunConfig((dir / "run.cfg").string());
    CHECK(cfg.window == 12);
    CHECK(cfg.grid == 256);
    CHECK(cfg.wantSpectrum);
    CHECK(cfg.wantEquiconv);
    CHECK(!cfg.wantEvolution);
    CHECK(cfg.state.kind == StateSpec::Kind::basis);
    CHECK(fs::exists(cfg.potentialPath));

    {
        std::ofstream out(dir / "bad.cfg");
        out << "potential p.pot\nwibble 3\n";
    }
    CHECK_THROWS_WITH_AS(parseRunConfig((dir / "bad.cfg").string()), doctest::Contains(":2:"),
                         ParseError);
    fs::remove_all(dir);
}

TEST_CASE("similarity JSON round-trips the matrices") {
    PotentialSpec s = parsePotentialFile(kData + "per_generic.pot");
    const auto d = derive(s, {256, 1e-9});
    const auto res = runSimilarity(d, makeLayout(d, 10));
    const Json j = similarityToJson(res);
    const auto back = similarityFromJson(Json::parse(j.dump()));
    CHECK(back.k == res.k);
    CHECK(back.m == res.m);
    CHECK((back.u.mat() - res.u.mat()).norm() == 0.0);
    CHECK((back.v.mat() - res.v.mat()).norm() == 0.0);
    CHECK((back.q.mat() - res.q.mat()).norm() == 0.0);
    CHECK(back.layout.rShift == res.layout.rShift);
}

TEST_CASE("runPipeline writes the documented artifacts with no violations") {
    const auto dir = tmpDir("diracsim_run");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.window = 16;
    cfg.grid = 256;
    cfg.wantSpectrum = cfg.wantEvolution = cfg.wantEquiconv = cfg.wantTrace = true;
    cfg.tCount = 3;
    const auto art = runPipeline(cfg, dir.string());
    CHECK(art.violations.empty());
    for (const char* name : {"summary.json", "similarity.json", "iterations.csv", "spectrum.csv",
                             "equiconv.csv", "evolution_trace.csv"})
        CHECK(fs::exists(dir / name));
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    CHECK(summary.contains("k"));
    CHECK(summary.contains("m"));
    CHECK(summary.contains("delta_p"));
    CHECK(summary.contains("hs_norm_b"));
    CHECK(summary.contains("star_norm_b"));
    CHECK(summary.contains("contraction_ratio"));
    CHECK(summary.contains("similarity_residual"));
    CHECK(summary.contains("truncation_floor"));
    CHECK(summary.contains("v_correction_fit_p"));
    CHECK(summary.at("violations").empty());
    fs::remove_all(dir);
}

TEST_CASE("runPipeline is deterministic: identical configs give identical bytes") {
    const auto dir1 = tmpDir("diracsim_det1");
    const auto dir2 = tmpDir("diracsim_det2");
    RunConfig cfg;
    cfg.potentialPath = kData + "ap_generic.pot";
    cfg.window = 12;
    cfg.grid = 256;
    cfg.wantSpectrum = cfg.wantEquiconv = true;
    runPipeline(cfg, dir1.string());
    runPipeline(cfg, dir2.string());
    for (const char* name : {"summary.json", "spectrum.csv", "equiconv.csv", "iterations.csv"})
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("compareWindows: zero drift for the zero potential, finite for bundled") {
    const auto dir = tmpDir("diracsim_cw");
    {
        std::ofstream out(dir / "zero.pot");
        out << "omega 6.283185307179586\nbc per\n";
    }
    RunConfig cfg;
    cfg.potentialPath = (dir / "zero.pot").string();
    cfg.grid = 256;
    const auto cmp = compareWindows(cfg, 12, 16);
    CHECK(cmp.maxInteriorDrift == 0.0);

    cfg.potentialPath = kData + "per_generic.pot";
    const auto cmp2 = compareWindows(cfg, 16, 24);
    CHECK(cmp2.maxInteriorDrift < 1e-8);
    fs::remove_all(dir);
}

TEST_CASE("sweep fans out windows and writes drift tables") {
    const auto dir = tmpDir("diracsim_sweep");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.grid = 256;
    cfg.wantSpectrum = true;
    sweep(cfg, {8, 12}, dir.string());
    CHECK(fs::exists(dir / "w8" / "summary.json"));
    CHECK(fs::exists(dir / "w12" / "summary.json"));
    CHECK(fs::exists(dir / "drift_w8_w12.csv"));
    const auto sj = Json::parse(slurp(dir / "sweep_summary.json"));
    REQUIRE(sj.at("runs").size() == 2);
    CHECK(sj.at("runs").at(0).at("k").get<int>() >= 0);  // cut stability reported per window
    CHECK(sj.at("drift").size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("selftest passes and its report is byte-identical across runs") {
    const auto a = selftest();
    CHECK(a.ok());
    CHECK(a.failed == 0);
    const auto b = selftest();
    CHECK(a.report == b.report);
    CHECK(a.report.find("SELFTEST OK") != std::string::npos);
}

TEST_CASE("zero-potential pipeline run: free ladder, all residuals zero") {
    const auto dir = tmpDir("diracsim_zero");
    {
        std::ofstream out(dir / "zero.pot");
        out << "omega 6.283185307179586\nbc per\n";
    }
    RunConfig cfg;
    cfg.potentialPath = (dir / "zero.pot").string();
    cfg.window = 10;
    cfg.grid = 64;
    cfg.wantSpectrum = cfg.wantEquiconv = true;
    const auto art = runPipeline(cfg, (dir / "out").string());
    CHECK(art.violations.empty());
    CHECK(art.sim.similarityResidual == 0.0);
    CHECK(art.spectrum.oracle.all.size() == 42);
    for (int n = -10; n <= 10; ++n) {
        const auto& c = art.spectrum.oracle.component[std::size_t(n + 10)];
        for (const auto& z : c) CHECK(std::abs(z - cplx(double(n))) < 1e-13);
    }
    for (double v : art.scan.hsNorm) CHECK(v < 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("pipeline report reproduces the bundled golden oracle spectrum") {
    const auto dir = tmpDir("diracsim_golden");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.window = 16;
    cfg.grid = 1024;
    cfg.wantSpectrum = true;
    const auto art = runPipeline(cfg, dir.string());
    CHECK(art.violations.empty());

    std::ifstream golden(std::string(DIRACSIM_SOURCE_DIR) +
                         "/data/golden/per_generic_w16_oracle.csv");
    REQUIRE(golden.good());
    std::string line;
    std::getline(golden, line);  // header
    int rows = 0;
    while (std::getline(golden, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int n;
        double r1, i1, r2, i2;
        REQUIRE((ss >> n >> r1 >> i1 >> r2 >> i2));
        const auto& comp = art.spectrum.oracle.component[std::size_t(n + 16)];
        REQUIRE(comp.size() == 2);
        CHECK(smallSetMatch(comp, {cplx(r1, i1), cplx(r2, i2)}) < 1e-9);
        // interior second-order predictions track the golden oracle values
        if (std::abs(n) > art.sim.m && std::abs(n) <= 8) {
            const auto pred = asymptoticPrediction(art.derived, art.layout, n);
            CHECK(smallSetMatch(pred, {cplx(r1, i1), cplx(r2, i2)}) < 2e-3);
        }
        ++rows;
    }
    CHECK(rows == 33);
    fs::remove_all(dir);
}

TEST_CASE("config validation rejects non-positive window and tolerances") {
    const auto dir = tmpDir("diracsim_cfgbad");
    {
        std::ofstream out(dir / "p.pot");
        out << "omega 6.283185307179586\nbc per\n";
    }
    {
        std::ofstream out(dir / "w0.cfg");
        out << "potential p.pot\nwindow 0\n";
    }
    CHECK_THROWS_AS(parseRunConfig((dir / "w0.cfg").string()), std::invalid_argument);
    {
        std::ofstream out(dir / "tol.cfg");
        out << "potential p.pot\nfp_tol -1\n";
    }
    CHECK_THROWS_AS(parseRunConfig((dir / "tol.cfg").string()), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("repeated coefficient lines accumulate") {
    const auto dir = tmpDir("diracsim_accum");
    {
        std::ofstream out(dir / "p.pot");
        out << "omega 6.283185307179586\nbc per\np2 1 0.1 0.0\np2 1 0.05 0.1\n";
    }
    const auto s = parsePotentialFile((dir / "p.pot").string());
    CHECK(std::abs(s.pHatAt(2, 1) - cplx(0.15, 0.1)) < 1e-15);
    fs::remove_all(dir);
}

TEST_CASE("json report format carries the same spectral content") {
    const auto dir = tmpDir("diracsim_json");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.window = 10;
    cfg.grid = 256;
    cfg.wantSpectrum = true;
    const auto art = runPipeline(cfg, dir.string(), "json");
    CHECK(!fs::exists(dir / "spectrum.csv"));
    const auto js = Json::parse(slurp(dir / "spectrum.json"));
    REQUIRE(js.size() == 21);
    for (const auto& row : js) {
        const int n = row.at("n").get<int>();
        const auto& oc = art.spectrum.oracle.component[std::size_t(n + 10)];
        REQUIRE(row.at("oracle").size() == oc.size());
        for (std::size_t i = 0; i < oc.size(); ++i) {
            const cplx v(row.at("oracle").at(i).at(0).get<double>(),
                         row.at("oracle").at(i).at(1).get<double>());
            CHECK(std::abs(v - oc[i]) == 0.0);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("sweep output is deterministic despite worker threads") {
    const auto dir1 = tmpDir("diracsim_swdet1");
    const auto dir2 = tmpDir("diracsim_swdet2");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.grid = 256;
    cfg.wantSpectrum = true;
    sweep(cfg, {8, 10, 12}, dir1.string());
    sweep(cfg, {8, 10, 12}, dir2.string());
    CHECK(slurp(dir1 / "sweep_summary.json") == slurp(dir2 / "sweep_summary.json"));
    CHECK(slurp(dir1 / "w10" / "summary.json") == slurp(dir2 / "w10" / "summary.json"));
    CHECK(slurp(dir1 / "drift_w8_w10.csv") == slurp(dir2 / "drift_w8_w10.csv"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("evolution trace rows reproduce the group action") {
    const auto dir = tmpDir("diracsim_trace");
    RunConfig cfg;
    cfg.potentialPath = kData + "per_generic.pot";
    cfg.window = 8;
    cfg.grid = 256;
    cfg.wantSpectrum = false;
    cfg.wantTrace = true;
    cfg.tStart = 0.0;
    cfg.tEnd = 1.0;
    cfg.tCount = 2;
    const auto art = runPipeline(cfg, dir.string());
    GroupEvaluator ev(art.spec, art.derived, art.sim);
    const Vec x0 = makeState(cfg.state, ev.roi);
    const Vec x1 = fullGroup(ev, 1.0, x0);

    std::ifstream in(dir / "evolution_trace.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,index,re,im");
    int checked = 0;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double t, re, im;
        int idx;
        REQUIRE((ss >> t >> idx >> re >> im));
        const Vec& ref = t == 0.0 ? x0 : x1;
        CHECK(std::abs(cplx(re, im) - ref(idx)) < 1e-14);
        ++checked;
    }
    CHECK(checked == 2 * int(ev.roi.dim()));
    fs::remove_all(dir);
}

TEST_CASE("similarity.json written by the pipeline reloads to the same transform") {
    const auto dir = tmpDir("diracsim_reload");
    RunConfig cfg;
    cfg.potentialPath = kData + "ap_resonant.pot";
    cfg.window = 12;
    cfg.grid = 1024;
    cfg.wantSpectrum = false;
    const auto art = runPipeline(cfg, dir.string());
    const auto j = Json::parse(slurp(dir / "similarity.json"));
    const auto back = similarityFromJson(j);
    CHECK(back.layout.branch == Branch::resonantInteger);
    CHECK(back.layout.rShift == art.layout.rShift);
    CHECK((back.u.mat() - art.sim.u.mat()).norm() == 0.0);
    // the reloaded matrices satisfy the same similarity identity
    CHECK(similarityResidualOf(back.a0, back.q, back.u, back.v) ==
          doctest::Approx(art.sim.similarityResidual).epsilon(1e-12));
    fs::remove_all(dir);
}

TEST_CASE("resonant golden spectrum: regrouped components reproduce the stored oracle") {
    RunConfig cfg;
    cfg.potentialPath = kData + "per_resonant.pot";
    cfg.window = 16;
    cfg.grid = 1024;
    const auto spec = parsePotentialFile(cfg.potentialPath);
    const auto d = derive(spec, cfg.deriveOptions());
    const auto o = oracleSpectrum(d, makeLayout(d, 16));

    std::ifstream golden(std::string(DIRACSIM_SOURCE_DIR) +
                         "/data/golden/per_resonant_w16_oracle.csv");
    REQUIRE(golden.good());
    std::string line;
    std::getline(golden, line);
    int rows = 0;
    while (std::getline(golden, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int n;
        double r1, i1, r2, i2;
        REQUIRE((ss >> n >> r1 >> i1 >> r2 >> i2));
        const auto& comp = o.component[std::size_t(n + 16)];
        REQUIRE(comp.size() == 2);
        CHECK(smallSetMatch(comp, {cplx(r1, i1), cplx(r2, i2)}) < 1e-9);
        ++rows;
    }
    CHECK(rows == 33);
}
