#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mkge/rng.hpp"
#include "mkge/types.hpp"

namespace mkge {

// Dense row-major matrix of doubles. Small by construction: embedding tables
// are n x k and transition maps k x k with k up to a few hundred.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }

    bool operator==(const Matrix&) const = default;

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_l1(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    return s;
}

inline double norm_l2(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

inline double vec_norm(std::span<const double> v, NormOrder n) {
    return n == NormOrder::l1 ? norm_l1(v) : norm_l2(v);
}

// dst += a * x
inline void axpy(std::span<double> dst, double a, std::span<const double> x) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * x[i];
}

inline std::vector<double> vec_sub(std::span<const double> a,
                                   std::span<const double> b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline bool all_zero(std::span<const double> v) {
    for (double x : v) {
        if (x != 0.0) return false;
    }
    return true;
}

// Direction of steepest ascent of ||d|| at residual d: d/||d||_2 for l2,
// elementwise sign for l1. The subgradient at a zero coordinate (and at
// d = 0 entirely) is taken as 0.
inline std::vector<double> residual_direction(std::span<const double> d,
                                              NormOrder norm) {
    std::vector<double> u(d.size(), 0.0);
    if (norm == NormOrder::l1) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d[i] > 0.0) u[i] = 1.0;
            else if (d[i] < 0.0) u[i] = -1.0;
        }
    } else {
        const double n = norm_l2(d);
        if (n > 0.0) {
            for (std::size_t i = 0; i < d.size(); ++i) u[i] = d[i] / n;
        }
    }
    return u;
}

inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) y[r] = dot(m.row(r), x);
    return y;
}

// y = M^T x
inline std::vector<double> matvec_transposed(const Matrix& m,
                                             std::span<const double> x) {
    std::vector<double> y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += xr * row[c];
    }
    return y;
}

// m += u * v^T
inline void add_outer(Matrix& m, std::span<const double> u,
                      std::span<const double> v) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double ur = u[r];
        if (ur == 0.0) continue;
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += ur * v[c];
    }
}

// Max column sum of absolute values.
inline double norm1(const Matrix& m) {
    double best = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) s += std::fabs(m.at(r, c));
        if (s > best) best = s;
    }
    return best;
}

inline double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double x : m.data) best = std::max(best, std::fabs(x));
    return best;
}

// LU decomposition with partial pivoting, stored in place.
struct LuFactors {
    Matrix lu;
    std::vector<std::size_t> pivot;
    int parity = 1;         // sign of the row permutation
    bool singular = false;
    double min_pivot = 0.0;  // smallest |pivot| encountered
};

inline LuFactors lu_factor(Matrix a) {
    const std::size_t n = a.rows;
    LuFactors f;
    f.pivot.resize(n);
    f.min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t best = col;
        double best_abs = std::fabs(a.at(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::fabs(a.at(r, col));
            if (v > best_abs) {
                best_abs = v;
                best = r;
            }
        }
        f.pivot[col] = best;
        if (best != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a.at(col, c), a.at(best, c));
            f.parity = -f.parity;
        }
        const double p = a.at(col, col);
        if (p == 0.0) {
            f.singular = true;
            f.min_pivot = 0.0;
            f.lu = std::move(a);
            return f;
        }
        f.min_pivot = std::min(f.min_pivot, std::fabs(p));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = a.at(r, col) / p;
            a.at(r, col) = m;
            if (m == 0.0) continue;
            for (std::size_t c = col + 1; c < n; ++c)
                a.at(r, c) -= m * a.at(col, c);
        }
    }
    f.lu = std::move(a);
    return f;
}

inline std::vector<double> lu_solve(const LuFactors& f,
                                    std::span<const double> b) {
    const std::size_t n = f.lu.rows;
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (f.pivot[i] != i) std::swap(x[i], x[f.pivot[i]]);
        for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu.at(i, j) * x[j];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu.at(i, j) * x[j];
        x[i] /= f.lu.at(i, i);
    }
    return x;
}

inline double determinant(const Matrix& m) {
    LuFactors f = lu_factor(m);
    if (f.singular) return 0.0;
    double d = static_cast<double>(f.parity);
    for (std::size_t i = 0; i < m.rows; ++i) d *= f.lu.at(i, i);
    return d;
}

// Inverse via LU. Throws NumericError on a (near-)singular input; the
// message carries a condition estimate so callers can see how close to
// singular the matrix was.
inline Matrix invert(const Matrix& m) {
    const std::size_t n = m.rows;
    LuFactors f = lu_factor(m);
    const double scale = norm1(m);
    if (f.singular || f.min_pivot < 1e-13 * std::max(1.0, scale)) {
        const double cond_est =
            f.min_pivot > 0.0 ? scale / f.min_pivot
                              : std::numeric_limits<double>::infinity();
        throw NumericError("matrix is singular or nearly singular (condition estimate " +
                           std::to_string(cond_est) + ")");
    }
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        std::vector<double> col = lu_solve(f, e);
        e[c] = 0.0;
        for (std::size_t r = 0; r < n; ++r) inv.at(r, c) = col[r];
    }
    return inv;
}

// 1-norm condition number computed from the explicit inverse. Exact for the
// 1-norm, cheap at these sizes.
inline double condition_number(const Matrix& m, const Matrix& inv) {
    return norm1(m) * norm1(inv);
}

// Random square matrix with orthonormal columns: modified Gram-Schmidt on a
// Gaussian draw, with a second orthogonalization pass to push the residual
// non-orthogonality down to machine precision. Columns whose projection
// collapses (probability ~0) are resampled.
inline Matrix random_orthogonal(std::size_t n, Rng& rng) {
    Matrix q(n, n);
    std::vector<double> col(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (int attempt = 0;; ++attempt) {
            rng.fill_normal(col);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t prev = 0; prev < c; ++prev) {
                    double proj = 0.0;
                    for (std::size_t r = 0; r < n; ++r)
                        proj += col[r] * q.at(r, prev);
                    for (std::size_t r = 0; r < n; ++r)
                        col[r] -= proj * q.at(r, prev);
                }
            }
            const double nrm = norm_l2(col);
            if (nrm > 1e-8) {
                for (std::size_t r = 0; r < n; ++r) q.at(r, c) = col[r] / nrm;
                break;
            }
            if (attempt > 64)
                throw NumericError("orthogonal initialization failed to converge");
        }
    }
    return q;
}

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues in descending order with matching eigenvector columns.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;  // column i pairs with values[i]
};

inline SymmetricEigen jacobi_eigen(Matrix a) {
    const std::size_t n = a.rows;
    Matrix v = Matrix::identity(n);
    double frob = 0.0;
    for (double x : a.data) frob += x * x;
    const double tol = 1e-14 * std::max(1.0, std::sqrt(frob));

    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (std::sqrt(off) <= tol) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::fabs(apq) <= tol / (n * n + 1)) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p);
                    const double aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i);
                    const double aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p);
                    const double viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a.at(x, x) > a.at(y, y);
    });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a.at(order[i], order[i]);
        for (std::size_t r = 0; r < n; ++r)
            out.vectors.at(r, i) = v.at(r, order[i]);
    }
    return out;
}

}  // namespace mkge
