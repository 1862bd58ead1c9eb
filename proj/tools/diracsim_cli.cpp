// Command-line driver: derive, spectrum, evolve, equiconv, sweep, selftest.
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "diracsim/diracsim.hpp"

namespace fs = std::filesystem;
using namespace dirac;

namespace {

std::string defaultOutDir() {
    if (const char* env = std::getenv("DIRACSIM_OUT_DIR")) return env;
    return "out";
}

struct CommonArgs {
    std::string configPath;
    std::string outDir = defaultOutDir();
    std::string format = "csv";
    int window = 0;   // 0: take from config
    int grid = 0;
};

void addCommon(CLI::App* cmd, CommonArgs& args, bool needConfig = true) {
    auto* opt = cmd->add_option("--config", args.configPath, "run configuration file");
    if (needConfig) opt->required();
    cmd->add_option("--out-dir", args.outDir, "output directory (env DIRACSIM_OUT_DIR)");
    cmd->add_option("--window", args.window, "override truncation half-width N");
    cmd->add_option("--grid", args.grid, "override sampling grid size");
    cmd->add_option("--format", args.format, "spectral report format")
        ->check(CLI::IsMember({"csv", "json"}));
}

RunConfig loadConfig(const CommonArgs& args) {
    RunConfig cfg = parseRunConfig(args.configPath);
    if (args.window > 0) cfg.window = args.window;
    if (args.grid > 0) cfg.grid = args.grid;
    return cfg;
}

int reportOutcome(const RunArtifacts& art, const std::string& outDir) {
    std::cout << "bc=" << bcName(art.layout.bc)
              << " branch="
              << (art.layout.branch == Branch::resonantInteger ? "resonantInteger" : "generic")
              << " k=" << art.sim.k << " m=" << art.sim.m
              << " similarity_residual=" << fmt(art.sim.similarityResidual) << "\n";
    std::cout << "artifacts written to " << outDir << "\n";
    if (!art.violations.empty()) {
        for (const auto& v : art.violations) std::cerr << "violation: " << v << "\n";
        return 1;
    }
    return 0;
}

int cmdDerive(const CommonArgs& args, const std::string& potentialOverride) {
    RunConfig cfg;
    if (!args.configPath.empty()) cfg = loadConfig(args);
    if (!potentialOverride.empty()) cfg.potentialPath = potentialOverride;
    if (cfg.potentialPath.empty()) {
        std::cerr << "derive: need --config or --potential\n";
        return 2;
    }
    const auto spec = parsePotentialFile(cfg.potentialPath);
    const auto d = derive(spec, cfg.deriveOptions());
    fs::create_directories(args.outDir);

    Json j;
    j["omega"] = d.omega;
    j["bc"] = bcName(d.bc);
    j["nu"] = jsonComplex(d.nu);
    j["theta"] = jsonComplex(d.theta);
    j["beta"] = jsonComplex(d.beta);
    j["r"] = jsonComplex(d.r);
    j["branch"] = d.branch == Branch::resonantInteger ? "resonantInteger" : "generic";
    j["r_int"] = d.rInt;
    j["grid"] = d.grid;
    writeTextFile((fs::path(args.outDir) / "derived.json").string(), j.dump(1) + "\n");

    std::ostringstream csv;
    csv << "k,qhat2_re,qhat2_im,qhat3_re,qhat3_im\n";
    const int lim = std::min(d.qHat2.limit(), 4 * cfg.window);
    for (int k = -lim; k <= lim; ++k)
        csv << k << "," << fmt(d.qHat2.at(k)) << "," << fmt(d.qHat3.at(k)) << "\n";
    writeTextFile((fs::path(args.outDir) / "qhat.csv").string(), csv.str());

    std::cout << "branch=" << (d.branch == Branch::resonantInteger ? "resonantInteger" : "generic")
              << " r=(" << fmt(d.r.real()) << "," << fmt(d.r.imag()) << ")\n"
              << "artifacts written to " << args.outDir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"method-of-similar-operators toolkit for 1-D Dirac operators"};
    app.require_subcommand(1);

    CommonArgs deriveArgs, spectrumArgs, evolveArgs, equiconvArgs, sweepArgs, selftestArgs;
    std::string potentialOverride;
    std::vector<int> sweepWindows{16, 24, 32, 48};

    auto* cDerive = app.add_subcommand("derive", "derived potential quantities only");
    addCommon(cDerive, deriveArgs, /*needConfig=*/false);
    cDerive->add_option("--potential", potentialOverride, "potential file (bypasses --config)");

    auto* cSpectrum = app.add_subcommand("spectrum", "similarity transform + spectral report");
    addCommon(cSpectrum, spectrumArgs);
    bool dumpMatrices = false;
    cSpectrum->add_flag("--dump-matrices", dumpMatrices,
                        "emit Q, V, U as per-entry CSV for cross-checking");
    auto* cEvolve = app.add_subcommand("evolve", "group evaluation and truncation bounds");
    addCommon(cEvolve, evolveArgs);
    auto* cEquiconv = app.add_subcommand("equiconv", "equiconvergence scan");
    addCommon(cEquiconv, equiconvArgs);
    auto* cSweep = app.add_subcommand("sweep", "window sweep with drift tables");
    addCommon(cSweep, sweepArgs);
    cSweep->add_option("--windows", sweepWindows, "window sizes to run")->delimiter(',');
    auto* cSelftest = app.add_subcommand("selftest", "run the invariant suite");
    addCommon(cSelftest, selftestArgs, /*needConfig=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cDerive->parsed()) return cmdDerive(deriveArgs, potentialOverride);
        if (cSpectrum->parsed()) {
            RunConfig cfg = loadConfig(spectrumArgs);
            cfg.wantSpectrum = true;
            const auto art = runPipeline(cfg, spectrumArgs.outDir, spectrumArgs.format);
            if (dumpMatrices) {
                dumpCsv(art.sim.q, (fs::path(spectrumArgs.outDir) / "q_matrix.csv").string());
                dumpCsv(art.sim.v, (fs::path(spectrumArgs.outDir) / "v_matrix.csv").string());
                dumpCsv(art.sim.u, (fs::path(spectrumArgs.outDir) / "u_matrix.csv").string());
            }
            return reportOutcome(art, spectrumArgs.outDir);
        }
        if (cEvolve->parsed()) {
            RunConfig cfg = loadConfig(evolveArgs);
            cfg.wantEvolution = true;
            cfg.wantTrace = true;
            return reportOutcome(runPipeline(cfg, evolveArgs.outDir, evolveArgs.format),
                                 evolveArgs.outDir);
        }
        if (cEquiconv->parsed()) {
            RunConfig cfg = loadConfig(equiconvArgs);
            cfg.wantEquiconv = true;
            return reportOutcome(runPipeline(cfg, equiconvArgs.outDir, equiconvArgs.format),
                                 equiconvArgs.outDir);
        }
        if (cSweep->parsed()) {
            RunConfig cfg = loadConfig(sweepArgs);
            sweep(cfg, sweepWindows, sweepArgs.outDir, sweepArgs.format);
            std::cout << "sweep artifacts written to " << sweepArgs.outDir << "\n";
            return 0;
        }
        if (cSelftest->parsed()) {
            const auto result = selftest();
            fs::create_directories(selftestArgs.outDir);
            writeTextFile((fs::path(selftestArgs.outDir) / "selftest_report.txt").string(),
                          result.report);
            std::cout << result.report;
            return result.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
