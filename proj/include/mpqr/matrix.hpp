// Dense column-major matrix of double carriers.
#pragma once

#include <cassert>
#include <cstddef>
#include <utility>
#include <vector>

namespace mpqr {

class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), d_(size_t(rows) * size_t(cols), 0.0) {
        assert(rows >= 0 && cols >= 0);
    }

    static Mat identity(int rows, int cols) {
        Mat I(rows, cols);
        const int k = rows < cols ? rows : cols;
        for (int j = 0; j < k; ++j) I(j, j) = 1.0;
        return I;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return d_[size_t(j) * rows_ + i];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return d_[size_t(j) * rows_ + i];
    }

    // contiguous column storage
    double* col(int j) { return d_.data() + size_t(j) * rows_; }
    const double* col(int j) const { return d_.data() + size_t(j) * rows_; }

    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }

    Mat block(int i0, int j0, int nrows, int ncols) const {
        assert(i0 + nrows <= rows_ && j0 + ncols <= cols_);
        Mat B(nrows, ncols);
        for (int j = 0; j < ncols; ++j)
            for (int i = 0; i < nrows; ++i) B(i, j) = (*this)(i0 + i, j0 + j);
        return B;
    }

    void set_block(int i0, int j0, const Mat& B) {
        assert(i0 + B.rows() <= rows_ && j0 + B.cols() <= cols_);
        for (int j = 0; j < B.cols(); ++j)
            for (int i = 0; i < B.rows(); ++i) (*this)(i0 + i, j0 + j) = B(i, j);
    }

    Mat transposed() const {
        Mat T(cols_, rows_);
        for (int j = 0; j < cols_; ++j)
            for (int i = 0; i < rows_; ++i) T(j, i) = (*this)(i, j);
        return T;
    }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && d_ == o.d_;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> d_;
};

}  // namespace mpqr
