#pragma once

#include "coastflow/types.hpp"

#include <algorithm>
#include <cmath>

namespace coastflow::sim {

/// Symmetric positive-definite banded matrix with in-place Cholesky.
/// Lower band storage, column-major: band(r, j) = A(j + r, j), r in [0, bw].
class BandMatrix {
public:
    void reset(int n, int bw) {
        n_ = n;
        bw_ = bw;
        if (band_.rows() != bw + 1 || band_.cols() != n) band_.resize(bw + 1, n);
        band_.setZero();
    }

    void add(int i, int j, double v) {
        if (i >= j)
            band_(i - j, j) += v;
        else
            band_(j - i, i) += v;
    }

    void add_diag(int i, double v) { band_(0, i) += v; }

    bool factorize() {
        for (int j = 0; j < n_; ++j) {
            const int k0 = std::max(0, j - bw_);
            for (int k = k0; k < j; ++k) {
                const double ljk = band_(j - k, k);
                if (ljk == 0.0) continue;
                const int last = std::min(k + bw_, n_ - 1);
                const int m = last - j + 1;
                if (m > 0) band_.col(j).segment(0, m) -= ljk * band_.col(k).segment(j - k, m);
            }
            const double d = band_(0, j);
            if (!(d > 0.0)) return false;
            const double s = std::sqrt(d);
            band_(0, j) = s;
            const int m = std::min(bw_, n_ - 1 - j);
            if (m > 0) band_.col(j).segment(1, m) /= s;
        }
        return true;
    }

    void solve(Vector& x) const {
        for (int j = 0; j < n_; ++j) { // L y = b
            x(j) /= band_(0, j);
            const int m = std::min(bw_, n_ - 1 - j);
            if (m > 0) x.segment(j + 1, m) -= x(j) * band_.col(j).segment(1, m);
        }
        for (int j = n_ - 1; j >= 0; --j) { // L^T x = y
            const int m = std::min(bw_, n_ - 1 - j);
            if (m > 0) x(j) -= band_.col(j).segment(1, m).dot(x.segment(j + 1, m));
            x(j) /= band_(0, j);
        }
    }

private:
    int n_ = 0, bw_ = 0;
    Matrix band_;
};

} // namespace coastflow::sim
