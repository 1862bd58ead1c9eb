// Truncated operator matrices over the free eigenbasis: complex b x b blocks
// X_{mn}, |m|,|n| <= N, stored dense. Hilbert-Schmidt algebra on the window.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>

#include "diracsim/fourier.hpp"

namespace dirac {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(int window, int blockSize)
        : window_(window), blockSize_(blockSize), a_(Mat::Zero(dim(), dim())) {
        if (window < 0 || (blockSize != 1 && blockSize != 2))
            throw std::invalid_argument("BlockMatrix: window >= 0 and blockSize in {1,2}");
    }

    static BlockMatrix identity(int window, int blockSize) {
        BlockMatrix x(window, blockSize);
        x.a_.setIdentity();
        return x;
    }

    int window() const { return window_; }
    int blockSize() const { return blockSize_; }
    int blockCount() const { return 2 * window_ + 1; }
    Eigen::Index dim() const { return Eigen::Index(blockSize_) * blockCount(); }

    Mat& mat() { return a_; }
    const Mat& mat() const { return a_; }

    // Flat row/col of entry (j) of block index m, m in [-N, N], j in [0, b).
    Eigen::Index flat(int m, int j) const { return Eigen::Index(m + window_) * blockSize_ + j; }

    cplx& at(int m, int n, int j = 0, int k = 0) { return a_(flat(m, j), flat(n, k)); }
    cplx at(int m, int n, int j = 0, int k = 0) const { return a_(flat(m, j), flat(n, k)); }

    Eigen::Block<Mat> block(int m, int n) {
        return a_.block(flat(m, 0), flat(n, 0), blockSize_, blockSize_);
    }
    Eigen::Block<const Mat> block(int m, int n) const {
        return a_.block(flat(m, 0), flat(n, 0), blockSize_, blockSize_);
    }

    bool sameShape(const BlockMatrix& o) const {
        return window_ == o.window_ && blockSize_ == o.blockSize_;
    }

private:
    int window_ = 0;
    int blockSize_ = 1;
    Mat a_;
};

// ||X||_2^2 = sum_{m,n} ||X_{mn}||_2^2; on the dense window this is the
// Frobenius norm.
inline double hsNorm(const BlockMatrix& x) { return x.mat().norm(); }

inline BlockMatrix multiply(const BlockMatrix& x, const BlockMatrix& y) {
    if (!x.sameShape(y)) throw std::invalid_argument("multiply: shape mismatch");
    BlockMatrix z(x.window(), x.blockSize());
    z.mat().noalias() = x.mat() * y.mat();
    return z;
}

// x + s*y
inline BlockMatrix addScaled(const BlockMatrix& x, cplx s, const BlockMatrix& y) {
    if (!x.sameShape(y)) throw std::invalid_argument("addScaled: shape mismatch");
    BlockMatrix z = x;
    z.mat() += s * y.mat();
    return z;
}

inline Eigen::VectorXd singularValues(const Mat& m) {
    Eigen::BDCSVD<Mat> svd(m);
    return svd.singularValues();
}

// Largest singular value of the dense window matrix.
inline double opNormEstimate(const BlockMatrix& x) {
    if (x.dim() == 0) return 0.0;
    return singularValues(x.mat())(0);
}

inline double opNorm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return singularValues(m)(0);
}

inline double nuclearNormEstimate(const Mat& m) { return singularValues(m).sum(); }

inline double smallestSingularValue(const Mat& m) {
    const auto sv = singularValues(m);
    return sv(sv.size() - 1);
}

// Debug/cross-language dump: one row per entry, columns (m, n, j, k, re, im).
inline void dumpCsv(const BlockMatrix& x, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dumpCsv: cannot open " + path);
    out << "m,n,j,k,re,im\n";
    char buf[128];
    for (int m = -x.window(); m <= x.window(); ++m)
        for (int n = -x.window(); n <= x.window(); ++n)
            for (int j = 0; j < x.blockSize(); ++j)
                for (int k = 0; k < x.blockSize(); ++k) {
                    const cplx v = x.at(m, n, j, k);
                    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.17g,%.17g\n", m, n, j, k,
                                  v.real(), v.imag());
                    out << buf;
                }
}

}  // namespace dirac
