// Dense linear-algebra helpers behind the oracle and assembly paths:
// eigenvalues of general complex matrices, a controlled-Taylor matrix
// exponential, optimal assignment, and multiset matching of spectra.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "diracsim/blockmatrix.hpp"

namespace dirac {

// Eigenvalues of a general complex matrix, sorted by (re, im) so reports are
// deterministic.
inline std::vector<cplx> eigenvalues(const Mat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eigenvalues: square matrix required");
    Eigen::ComplexEigenSolver<Mat> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: solver failed");
    std::vector<cplx> ev(std::size_t(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) ev[std::size_t(i)] = es.eigenvalues()(i);
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return ev;
}

inline Mat inverse(const Mat& m) {
    Eigen::PartialPivLU<Mat> lu(m);
    return lu.inverse();
}

// exp(A) by scaling and squaring with a remainder-controlled Taylor sum on
// the scaled matrix; backward error well under 1e-13 at these sizes.
inline Mat expm(const Mat& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: square matrix required");
    const double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    int s = 0;
    if (nrm > 0.5) s = int(std::ceil(std::log2(nrm / 0.5)));
    const Mat b = a / std::pow(2.0, s);
    Mat term = Mat::Identity(a.rows(), a.cols());
    Mat sum = term;
    for (int k = 1; k <= 60; ++k) {
        term = (term * b) / double(k);
        sum += term;
        if (term.norm() <= 1e-18 * sum.norm()) break;
    }
    for (int k = 0; k < s; ++k) sum = sum * sum;
    return sum;
}

// Minimum-cost assignment (Hungarian algorithm, Jonker-Volgenant style
// potentials). Returns rowToCol for a square cost matrix.
inline std::vector<int> minCostAssignment(const Eigen::MatrixXd& cost) {
    const int n = int(cost.rows());
    if (cost.cols() != n) throw std::invalid_argument("minCostAssignment: square cost required");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(std::size_t(n) + 1, 0.0), v(std::size_t(n) + 1, 0.0);
    std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(std::size_t(n) + 1, inf);
        std::vector<char> used(std::size_t(n) + 1, 0);
        do {
            used[std::size_t(j0)] = 1;
            const int i0 = p[std::size_t(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[std::size_t(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
                if (cur < minv[std::size_t(j)]) {
                    minv[std::size_t(j)] = cur;
                    way[std::size_t(j)] = j0;
                }
                if (minv[std::size_t(j)] < delta) {
                    delta = minv[std::size_t(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[std::size_t(j)]) {
                    u[std::size_t(p[std::size_t(j)])] += delta;
                    v[std::size_t(j)] -= delta;
                } else {
                    minv[std::size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[std::size_t(j0)] != 0);
        do {
            const int j1 = way[std::size_t(j0)];
            p[std::size_t(j0)] = p[std::size_t(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> rowToCol(std::size_t(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[std::size_t(j)] > 0) rowToCol[std::size_t(p[std::size_t(j)] - 1)] = j - 1;
    return rowToCol;
}

// Optimal matching of two equally sized eigenvalue multisets; returns the
// largest matched distance.
inline double matchMultisets(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("matchMultisets: size mismatch");
    const int n = int(a.size());
    if (n == 0) return 0.0;
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = std::abs(a[std::size_t(i)] - b[std::size_t(j)]);
    const auto asg = minCostAssignment(cost);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, cost(i, asg[std::size_t(i)]));
    return worst;
}

// Deterministic pseudo-random numbers for property tests and selftest
// (splitmix64 -> uniform doubles).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    cplx complexInDisk(double radius = 1.0) {
        while (true) {
            const double x = uniform(-1.0, 1.0), y = uniform(-1.0, 1.0);
            if (x * x + y * y <= 1.0) return radius * cplx(x, y);
        }
    }
private:
    std::uint64_t state_;
};

inline BlockMatrix randomBlockMatrix(Rng& rng, int window, int blockSize, double scale = 1.0) {
    BlockMatrix x(window, blockSize);
    for (Eigen::Index i = 0; i < x.dim(); ++i)
        for (Eigen::Index j = 0; j < x.dim(); ++j) x.mat()(i, j) = rng.complexInDisk(scale);
    return x;
}

}  // namespace dirac
