// File formats: potential input files, run configuration, CSV emitters, and
// JSON serialization of run summaries and similarity data.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "diracsim/evolution.hpp"

namespace dirac {

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
    ParseError(const std::string& file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

// Potential file: plain text, one item per line.
//   omega <positive real>
//   bc per|ap|dir
//   p1|p2|p3|p4 <index> <re> <im>
// '#' starts a comment; blank lines are ignored.
inline PotentialSpec parsePotentialFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential file: " + path);
    PotentialSpec spec;
    bool sawOmega = false, sawBc = false;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        if (key == "omega") {
            if (!(ss >> spec.omega) || spec.omega <= 0.0)
                throw ParseError(path, lineNo, "omega needs a positive real value");
            sawOmega = true;
        } else if (key == "bc") {
            std::string v;
            if (!(ss >> v)) throw ParseError(path, lineNo, "bc needs per, ap, or dir");
            if (v == "per")
                spec.bc.kind = BcKind::per;
            else if (v == "ap")
                spec.bc.kind = BcKind::ap;
            else if (v == "dir")
                spec.bc.kind = BcKind::dir;
            else
                throw ParseError(path, lineNo, "unknown bc '" + v + "'");
            sawBc = true;
        } else if (key == "p1" || key == "p2" || key == "p3" || key == "p4") {
            int idx;
            double re, im;
            if (!(ss >> idx >> re >> im))
                throw ParseError(path, lineNo, key + " needs: <index> <re> <im>");
            spec.p(key[1] - '0')[idx] += cplx(re, im);
        } else {
            throw ParseError(path, lineNo, "unknown key '" + key + "'");
        }
        std::string extra;
        if (ss >> extra) throw ParseError(path, lineNo, "trailing token '" + extra + "'");
    }
    if (!sawOmega) throw ParseError(path, lineNo, "missing 'omega'");
    if (!sawBc) throw ParseError(path, lineNo, "missing 'bc'");
    return spec;
}

struct StateSpec {
    enum class Kind { decay, basis } kind = Kind::decay;
    double decayRate = 1.5;
    int basisIndex = 0;
    int basisTier = 0;
};

struct RunConfig {
    std::string potentialPath;
    int window = 48;
    int grid = 1024;
    double branchTol = 1e-9;
    double fixedPointTol = 1e-13;
    double residualFactor = 1e-8;
    double marginK = 0.1;
    double marginM = 0.1;
    double deltaPCap = 1e6;
    int maxIter = 200;
    int nFit = 4;
    bool wantSpectrum = true;
    bool wantEvolution = false;
    bool wantEquiconv = false;
    bool wantTrace = false;
    double tStart = 0.0, tEnd = -1.0;  // tEnd < 0: use omega
    int tCount = 17;
    StateSpec state;

    SimilarityOptions similarityOptions() const {
        SimilarityOptions o;
        o.marginK = marginK;
        o.marginM = marginM;
        o.fixedPointTol = fixedPointTol;
        o.maxIter = maxIter;
        o.residualFlagFactor = residualFactor;
        o.deltaPCap = deltaPCap;
        return o;
    }
    DeriveOptions deriveOptions() const { return {grid, branchTol}; }

    void validate() const {
        if (window < 1) throw std::invalid_argument("config: window must be >= 1");
        for (double tolerance : {branchTol, fixedPointTol, residualFactor, marginK, marginM})
            if (!(tolerance > 0.0)) throw std::invalid_argument("config: tolerances and margins must be positive");
    }
};

inline RunConfig parseRunConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineNo = 0;
    const auto dir = std::filesystem::path(path).parent_path();
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        auto needNum = [&](double& target) {
            if (!(ss >> target)) throw ParseError(path, lineNo, key + " needs a numeric value");
        };
        auto needInt = [&](int& target) {
            if (!(ss >> target)) throw ParseError(path, lineNo, key + " needs an integer value");
        };
        if (key == "potential") {
            std::string p;
            if (!(ss >> p)) throw ParseError(path, lineNo, "potential needs a path");
            cfg.potentialPath = std::filesystem::path(p).is_absolute() ? p : (dir / p).string();
        } else if (key == "window") needInt(cfg.window);
        else if (key == "grid") needInt(cfg.grid);
        else if (key == "branch_tol") needNum(cfg.branchTol);
        else if (key == "fp_tol") needNum(cfg.fixedPointTol);
        else if (key == "residual_factor") needNum(cfg.residualFactor);
        else if (key == "margin_k") needNum(cfg.marginK);
        else if (key == "margin_m") needNum(cfg.marginM);
        else if (key == "deltap_cap") needNum(cfg.deltaPCap);
        else if (key == "max_iter") needInt(cfg.maxIter);
        else if (key == "nfit") needInt(cfg.nFit);
        else if (key == "t_start") needNum(cfg.tStart);
        else if (key == "t_end") needNum(cfg.tEnd);
        else if (key == "t_count") needInt(cfg.tCount);
        else if (key == "outputs") {
            cfg.wantSpectrum = cfg.wantEvolution = cfg.wantEquiconv = cfg.wantTrace = false;
            std::string o;
            while (ss >> o) {
                if (o == "spectrum") cfg.wantSpectrum = true;
                else if (o == "evolution") cfg.wantEvolution = true;
                else if (o == "equiconv") cfg.wantEquiconv = true;
                else if (o == "trace") cfg.wantTrace = true;
                else throw ParseError(path, lineNo, "unknown output '" + o + "'");
            }
            continue;
        } else if (key == "state") {
            std::string kind;
            if (!(ss >> kind)) throw ParseError(path, lineNo, "state needs a kind");
            if (kind == "decay") {
                cfg.state.kind = StateSpec::Kind::decay;
                if (!(ss >> cfg.state.decayRate))
                    throw ParseError(path, lineNo, "state decay needs a rate");
            } else if (kind == "basis") {
                cfg.state.kind = StateSpec::Kind::basis;
                if (!(ss >> cfg.state.basisIndex >> cfg.state.basisTier))
                    throw ParseError(path, lineNo, "state basis needs <n> <tier>");
            } else {
                throw ParseError(path, lineNo, "unknown state kind '" + kind + "'");
            }
            continue;
        } else {
            throw ParseError(path, lineNo, "unknown key '" + key + "'");
        }
        std::string extra;
        if (ss >> extra) throw ParseError(path, lineNo, "trailing token '" + extra + "'");
    }
    if (cfg.potentialPath.empty()) throw ParseError(path, lineNo, "missing 'potential'");
    cfg.validate();
    return cfg;
}

// Fixed-format floating point for byte-stable reports.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15e", v);
    return buf;
}

inline std::string fmt(cplx v) { return fmt(v.real()) + "," + fmt(v.imag()); }

inline Json jsonComplex(cplx v) { return Json::array({v.real(), v.imag()}); }

inline Json jsonMatrix(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(jsonComplex(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat matrixFromJson(const Json& j) {
    const Eigen::Index rows = Eigen::Index(j.size());
    const Eigen::Index cols = rows ? Eigen::Index(j.at(0).size()) : 0;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = j.at(std::size_t(i)).at(std::size_t(c));
            m(i, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
        }
    return m;
}

inline Json similarityToJson(const SimilarityResult& r) {
    Json j;
    j["bc"] = bcName(r.layout.bc);
    j["omega"] = r.layout.omega;
    j["window"] = r.layout.window;
    j["branch"] = r.layout.branch == Branch::resonantInteger ? "resonantInteger" : "generic";
    j["r_shift"] = r.layout.rShift;
    j["p1hat0"] = jsonComplex(r.layout.p1hat0);
    j["p4hat0"] = jsonComplex(r.layout.p4hat0);
    j["nu"] = jsonComplex(r.layout.nu);
    j["k"] = r.k;
    j["m"] = r.m;
    j["trivial_central"] = r.trivialCentral;
    j["delta_p"] = r.deltaP;
    j["gamma_k_q_norm"] = r.gammaKQNorm;
    j["hs_norm_b"] = r.hsNormB;
    j["star_norm_b"] = r.starNormB;
    j["nuclear_c"] = r.nuclearC;
    j["similarity_residual"] = r.similarityResidual;
    j["sigma_min_iu"] = r.sigmaMinIU;
    j["q_tail_energy"] = r.qTail;
    j["iterations"] = r.fp.iterations;
    j["contraction_bound"] = r.fp.contractionBound;
    j["residuals"] = r.fp.residualHs;
    j["ratios"] = r.fp.ratioStar;
    j["a0"] = jsonMatrix(r.a0.mat());
    j["q"] = jsonMatrix(r.q.mat());
    j["b"] = jsonMatrix(r.b.mat());
    j["xstar"] = jsonMatrix(r.xstar.mat());
    j["v"] = jsonMatrix(r.v.mat());
    j["u"] = jsonMatrix(r.u.mat());
    return j;
}

// Rehydrates the matrix payload of a serialized run (layout scalars plus the
// six window matrices); weight/iteration diagnostics stay with the JSON.
inline SimilarityResult similarityFromJson(const Json& j) {
    SimilarityResult r;
    const std::string bc = j.at("bc").get<std::string>();
    r.layout.bc = bc == "per" ? BcKind::per : bc == "ap" ? BcKind::ap : BcKind::dir;
    r.layout.omega = j.at("omega").get<double>();
    r.layout.window = j.at("window").get<int>();
    r.layout.branch = j.at("branch").get<std::string>() == "resonantInteger"
                          ? Branch::resonantInteger
                          : Branch::generic;
    r.layout.rShift = j.at("r_shift").get<int>();
    auto getc = [&](const char* key) {
        return cplx(j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>());
    };
    r.layout.p1hat0 = getc("p1hat0");
    r.layout.p4hat0 = getc("p4hat0");
    r.layout.nu = getc("nu");
    r.k = j.at("k").get<int>();
    r.m = j.at("m").get<int>();
    r.trivialCentral = j.at("trivial_central").get<bool>();
    r.deltaP = j.at("delta_p").get<double>();
    r.hsNormB = j.at("hs_norm_b").get<double>();
    r.starNormB = j.at("star_norm_b").get<double>();
    r.similarityResidual = j.at("similarity_residual").get<double>();
    r.sigmaMinIU = j.at("sigma_min_iu").get<double>();
    const int b = r.layout.blockSize();
    auto getm = [&](const char* key) {
        BlockMatrix x(r.layout.window, b);
        x.mat() = matrixFromJson(j.at(key));
        return x;
    };
    r.a0 = getm("a0");
    r.q = getm("q");
    r.b = getm("b");
    r.xstar = getm("xstar");
    r.v = getm("v");
    r.u = getm("u");
    return r;
}

inline void writeTextFile(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << contents;
}

inline void writeIterationCsv(const FixedPointLog& log, const std::string& path) {
    std::ostringstream out;
    out << "iteration,residual_hs,ratio_star\n";
    for (std::size_t i = 0; i < log.residualHs.size(); ++i) {
        out << (i + 1) << "," << fmt(log.residualHs[i]) << ","
            << (i < log.ratioStar.size() + 1 && i >= 1 ? fmt(log.ratioStar[i - 1]) : "") << "\n";
    }
    writeTextFile(path, out.str());
}

inline void writeSpectrumCsv(const SpectralReport& rep, const std::string& path) {
    std::ostringstream out;
    out << "n,predicted1_re,predicted1_im,predicted2_re,predicted2_im,"
           "oracle1_re,oracle1_im,oracle2_re,oracle2_im,residual_first,residual_second,flagged\n";
    const int w = rep.layout.window;
    for (int n = -w; n <= w; ++n) {
        const auto& pred = rep.asymptotic[std::size_t(n + w)];
        const auto& oc = rep.oracle.component[std::size_t(n + w)];
        out << n << ",";
        out << fmt(pred.empty() ? cplx(0.0) : pred.front()) << ",";
        out << fmt(pred.size() > 1 ? pred.back() : (pred.empty() ? cplx(0.0) : pred.front())) << ",";
        out << fmt(oc.empty() ? cplx(0.0) : oc.front()) << ",";
        out << fmt(oc.size() > 1 ? oc.back() : (oc.empty() ? cplx(0.0) : oc.front())) << ",";
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t i = 0; i < rep.fitIndices.size(); ++i)
            if (rep.fitIndices[i] == n) {
                r1 = rep.firstOrderResidual[i];
                r2 = rep.secondOrderResidual[i];
            }
        out << fmt(r1) << "," << fmt(r2) << "," << int(rep.oracle.flagged[std::size_t(n + w)])
            << "\n";
    }
    writeTextFile(path, out.str());
}

inline void writeEquiconvCsv(const EquiconvergenceScan& scan, const std::string& path) {
    std::ostringstream out;
    out << "ell,hs_norm\n";
    for (std::size_t i = 0; i < scan.ell.size(); ++i)
        out << scan.ell[i] << "," << fmt(scan.hsNorm[i]) << "\n";
    writeTextFile(path, out.str());
}

inline void writeTraceCsv(const std::vector<double>& times, const std::vector<Vec>& states,
                          const std::string& path) {
    std::ostringstream out;
    out << "t,index,re,im\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (Eigen::Index c = 0; c < states[i].size(); ++c)
            out << fmt(times[i]) << "," << c << "," << fmt(states[i](c).real()) << ","
                << fmt(states[i](c).imag()) << "\n";
    writeTextFile(path, out.str());
}

}  // namespace dirac
