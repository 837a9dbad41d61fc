#pragma once

// Minimal dense + CSR matrix types and the handful of kernels the classifier
// and walk algorithms need. Row-major, double precision, fixed iteration
// order (bitwise-reproducible results).

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tratopo/errors.hpp"

namespace tratopo {

using Index = std::int64_t;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows * cols), fill) {}

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

    double& operator()(Index i, Index j) { return v_[static_cast<std::size_t>(i * cols_ + j)]; }
    double operator()(Index i, Index j) const {
        return v_[static_cast<std::size_t>(i * cols_ + j)];
    }

    std::span<double> row(Index i) {
        return {v_.data() + i * cols_, static_cast<std::size_t>(cols_)};
    }
    std::span<const double> row(Index i) const {
        return {v_.data() + i * cols_, static_cast<std::size_t>(cols_)};
    }

    std::vector<double>& data() noexcept { return v_; }
    const std::vector<double>& data() const noexcept { return v_; }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> v_;
};

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly ascending
/// within each row; no explicit zeros are required but are tolerated.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), indptr_(rows + 1, 0) {}

    static CsrMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
        // counting sort by row keeps this O(nnz) and stable
        CsrMatrix m(rows, cols);
        std::vector<Index> count(static_cast<std::size_t>(rows), 0);
        for (const auto& t : entries) ++count[static_cast<std::size_t>(t.row)];
        for (Index i = 0; i < rows; ++i) m.indptr_[i + 1] = m.indptr_[i] + count[i];
        m.indices_.resize(entries.size());
        m.values_.resize(entries.size());
        std::vector<Index> cursor(m.indptr_.begin(), m.indptr_.end() - 1);
        for (const auto& t : entries) {
            const Index at = cursor[static_cast<std::size_t>(t.row)]++;
            m.indices_[static_cast<std::size_t>(at)] = t.col;
            m.values_[static_cast<std::size_t>(at)] = t.value;
        }
        // column order within a row follows insertion order of `entries`;
        // callers that need sorted rows must provide row-major sorted input
        return m;
    }

    static CsrMatrix from_dense(const DenseMatrix& d) {
        CsrMatrix m(d.rows(), d.cols());
        for (Index i = 0; i < d.rows(); ++i) {
            for (Index j = 0; j < d.cols(); ++j) {
                if (d(i, j) != 0.0) {
                    m.indices_.push_back(j);
                    m.values_.push_back(d(i, j));
                }
            }
            m.indptr_[i + 1] = static_cast<Index>(m.indices_.size());
        }
        return m;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows_, cols_);
        for (Index i = 0; i < rows_; ++i)
            for (Index k = indptr_[i]; k < indptr_[i + 1]; ++k)
                d(i, indices_[static_cast<std::size_t>(k)]) +=
                    values_[static_cast<std::size_t>(k)];
        return d;
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index nnz() const noexcept { return static_cast<Index>(indices_.size()); }

    std::span<const Index> row_indices(Index i) const {
        return {indices_.data() + indptr_[i],
                static_cast<std::size_t>(indptr_[i + 1] - indptr_[i])};
    }
    std::span<const double> row_values(Index i) const {
        return {values_.data() + indptr_[i],
                static_cast<std::size_t>(indptr_[i + 1] - indptr_[i])};
    }

    /// Rows `keep[0..m)` of this matrix as a new m x cols matrix.
    CsrMatrix select_rows(const std::vector<std::int32_t>& keep) const {
        CsrMatrix out(static_cast<Index>(keep.size()), cols_);
        for (std::size_t r = 0; r < keep.size(); ++r) {
            const Index i = keep[r];
            const auto idx = row_indices(i);
            const auto val = row_values(i);
            out.indices_.insert(out.indices_.end(), idx.begin(), idx.end());
            out.values_.insert(out.values_.end(), val.begin(), val.end());
            out.indptr_[static_cast<Index>(r) + 1] = static_cast<Index>(out.indices_.size());
        }
        return out;
    }

    bool operator==(const CsrMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && indptr_ == o.indptr_ &&
               indices_ == o.indices_ && values_ == o.values_;
    }

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> indptr_;
    std::vector<Index> indices_;
    std::vector<double> values_;
};

/// C = A * B with A sparse (n x m) and B dense (m x k).
inline DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("spmm: shape mismatch");
    DenseMatrix c(a.rows(), b.cols());
    const Index k = b.cols();
    for (Index i = 0; i < a.rows(); ++i) {
        auto idx = a.row_indices(i);
        auto val = a.row_values(i);
        double* ci = c.row(i).data();
        for (std::size_t p = 0; p < idx.size(); ++p) {
            const double w = val[p];
            const double* bj = b.row(idx[p]).data();
            for (Index q = 0; q < k; ++q) ci[q] += w * bj[q];
        }
    }
    return c;
}

/// C = A^T * B with A sparse (n x m) and B dense (n x k); result m x k.
inline DenseMatrix spmm_transposed(const CsrMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw InvalidArgument("spmm_transposed: shape mismatch");
    DenseMatrix c(a.cols(), b.cols());
    const Index k = b.cols();
    for (Index i = 0; i < a.rows(); ++i) {
        auto idx = a.row_indices(i);
        auto val = a.row_values(i);
        const double* bi = b.row(i).data();
        for (std::size_t p = 0; p < idx.size(); ++p) {
            const double w = val[p];
            double* cj = c.row(idx[p]).data();
            for (Index q = 0; q < k; ++q) cj[q] += w * bi[q];
        }
    }
    return c;
}

/// C = A * B, sparse * sparse -> sparse, rows emitted with sorted columns.
inline CsrMatrix spgemm(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("spgemm: shape mismatch");
    std::vector<Triplet> out;
    std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
    std::vector<Index> touched;
    for (Index i = 0; i < a.rows(); ++i) {
        touched.clear();
        auto idx = a.row_indices(i);
        auto val = a.row_values(i);
        for (std::size_t p = 0; p < idx.size(); ++p) {
            const double w = val[p];
            auto bidx = b.row_indices(idx[p]);
            auto bval = b.row_values(idx[p]);
            for (std::size_t q = 0; q < bidx.size(); ++q) {
                const auto c = static_cast<std::size_t>(bidx[q]);
                if (acc[c] == 0.0) touched.push_back(bidx[q]);
                acc[c] += w * bval[q];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (Index c : touched) {
            out.push_back({i, c, acc[static_cast<std::size_t>(c)]});
            acc[static_cast<std::size_t>(c)] = 0.0;
        }
    }
    return CsrMatrix::from_triplets(a.rows(), b.cols(), std::move(out));
}

/// C = A * B, both dense.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matmul: shape mismatch");
    DenseMatrix c(a.rows(), b.cols());
    const Index k = b.cols();
    for (Index i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        double* ci = c.row(i).data();
        for (Index p = 0; p < a.cols(); ++p) {
            const double w = ai[p];
            if (w == 0.0) continue;
            const double* bp = b.row(p).data();
            for (Index q = 0; q < k; ++q) ci[q] += w * bp[q];
        }
    }
    return c;
}

/// C = A^T * B, both dense; result (a.cols x b.cols).
inline DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw InvalidArgument("matmul_at_b: shape mismatch");
    DenseMatrix c(a.cols(), b.cols());
    const Index k = b.cols();
    for (Index i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        const double* bi = b.row(i).data();
        for (Index p = 0; p < a.cols(); ++p) {
            const double w = ai[p];
            if (w == 0.0) continue;
            double* cp = c.row(p).data();
            for (Index q = 0; q < k; ++q) cp[q] += w * bi[q];
        }
    }
    return c;
}

/// C = A * B^T, both dense; result (a.rows x b.rows).
inline DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw InvalidArgument("matmul_a_bt: shape mismatch");
    DenseMatrix c(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i).data();
        double* ci = c.row(i).data();
        for (Index j = 0; j < b.rows(); ++j) {
            const double* bj = b.row(j).data();
            double s = 0.0;
            for (Index p = 0; p < a.cols(); ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return c;
}

}  // namespace tratopo
