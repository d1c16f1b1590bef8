#ifndef GRADLAB_FACTORIZE_HPP
#define GRADLAB_FACTORIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/linalg.hpp"
#include "gradlab/problem.hpp"

namespace gradlab {

/// The most recent back gradient vectors (oldest first) together with the
/// current gradient. The columns form the window matrix G; `current` is the
/// gradient at the iterate where the factorization happens.
struct GradientWindow {
    std::vector<Vector> columns;
    Vector current;
};

/// Thin QR factors of a window: orthonormal columns and an upper triangular R
/// with positive diagonal.
struct QrFactors {
    std::vector<Vector> q_columns;
    Matrix r;
};

/// Upper triangular Cholesky factor R of GᵀG together with the extension
/// column r solving Rᵀr = Gᵀg_n.
struct RFactorExtended {
    Matrix r_matrix;
    Vector r_col;
};

/// Symmetric tridiagonal projection of the Hessian: diag has length m,
/// offdiag length m-1 with offdiag[i] = T(i, i+1).
struct TridiagonalMatrix {
    Vector diag;
    Vector offdiag;
};

/// Eigenvalues of the projection, sorted in decreasing order.
struct RitzValues {
    Vector values;
};

inline constexpr double kDefaultRankTol = 1e-10;

namespace detail {

/// Householder QR of the window columns (no rank checking). Reflectors are
/// applied column by column; the diagonal of R is then flipped positive,
/// negating the matching Q column, so both factor paths share a convention.
inline QrFactors qr_householder(const std::vector<Vector>& columns) {
    const std::size_t m = columns.size();
    if (m == 0) throw ShapeError("qr: empty window");
    const std::size_t n = columns[0].size();
    for (const auto& c : columns)
        if (c.size() != n) throw ShapeError("qr: column lengths differ");
    if (n < m) throw ShapeError("qr: window has more columns than rows");

    std::vector<Vector> w = columns;
    std::vector<Vector> reflectors(m);

    for (std::size_t k = 0; k < m; ++k) {
        double norm_x = 0.0;
        for (std::size_t i = k; i < n; ++i) norm_x += w[k][i] * w[k][i];
        norm_x = std::sqrt(norm_x);

        Vector v(n - k, 0.0);
        for (std::size_t i = k; i < n; ++i) v[i - k] = w[k][i];
        v[0] += std::copysign(norm_x, v[0]);
        double norm_v = norm2(v);
        if (norm_v > 0.0) {
            for (auto& vi : v) vi /= norm_v;
            for (std::size_t j = k; j < m; ++j) {
                double d = 0.0;
                for (std::size_t i = k; i < n; ++i) d += v[i - k] * w[j][i];
                d *= 2.0;
                for (std::size_t i = k; i < n; ++i) w[j][i] -= d * v[i - k];
            }
        } else {
            v.clear();  // zero pivot column: identity reflector
        }
        reflectors[k] = std::move(v);
    }

    QrFactors out;
    out.r = Matrix(m, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i <= j; ++i) out.r(i, j) = w[j][i];

    out.q_columns.assign(m, Vector());
    for (std::size_t j = 0; j < m; ++j) {
        Vector col(n, 0.0);
        col[j] = 1.0;
        for (std::size_t k2 = m; k2-- > 0;) {
            const Vector& v = reflectors[k2];
            if (v.empty()) continue;
            double d = 0.0;
            for (std::size_t i = k2; i < n; ++i) d += v[i - k2] * col[i];
            d *= 2.0;
            for (std::size_t i = k2; i < n; ++i) col[i] -= d * v[i - k2];
        }
        out.q_columns[j] = std::move(col);
    }

    for (std::size_t j = 0; j < m; ++j) {
        if (out.r(j, j) < 0.0) {
            for (std::size_t c = j; c < m; ++c) out.r(j, c) = -out.r(j, c);
            for (auto& qi : out.q_columns[j]) qi = -qi;
        }
    }
    return out;
}

/// Smallest diagonal ratio min_j R(j,j) / max_j R(j,j) of the factor.
inline double min_diag_ratio(const Matrix& r) {
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < r.rows(); ++j) {
        dmax = std::max(dmax, r(j, j));
        dmin = std::min(dmin, r(j, j));
    }
    if (dmax == 0.0) return 1.0;  // all-zero window, nothing to compare
    return dmin / dmax;
}

}  // namespace detail

/// Thin Householder QR of the window columns. Throws RankDeficiencyError
/// (carrying the first deficient column index) when a diagonal entry of R
/// falls below rank_tol times the largest diagonal entry.
inline QrFactors qr_factor(const std::vector<Vector>& columns, double rank_tol = kDefaultRankTol) {
    QrFactors f = detail::qr_householder(columns);
    double dmax = 0.0;
    for (std::size_t j = 0; j < f.r.rows(); ++j) dmax = std::max(dmax, f.r(j, j));
    for (std::size_t j = 0; j < f.r.rows(); ++j)
        if (f.r(j, j) < rank_tol * dmax)
            throw RankDeficiencyError("qr_factor: effectively rank-deficient window", j);
    return f;
}

/// Tridiagonal band of QᵀAQ, with the off-diagonal stored as the symmetric
/// average of the two computed entries. Entries outside the band vanish in
/// exact arithmetic when the columns come from consecutive gradients.
inline TridiagonalMatrix build_T_explicit(const std::vector<Vector>& q_columns,
                                          const QuadraticProblem& p) {
    const std::size_t m = q_columns.size();
    if (m == 0) throw ShapeError("build_T_explicit: empty basis");
    std::vector<Vector> aq(m);
    for (std::size_t j = 0; j < m; ++j) aq[j] = p.apply_hessian(q_columns[j]);

    TridiagonalMatrix t;
    t.diag.resize(m);
    t.offdiag.resize(m > 0 ? m - 1 : 0);
    for (std::size_t j = 0; j < m; ++j) t.diag[j] = dot(q_columns[j], aq[j]);
    for (std::size_t j = 0; j + 1 < m; ++j)
        t.offdiag[j] = 0.5 * (dot(q_columns[j], aq[j + 1]) + dot(q_columns[j + 1], aq[j]));
    return t;
}

/// Partially extended Cholesky factorization: R is the upper Cholesky factor
/// of GᵀG and r solves Rᵀr = Gᵀg_n. Throws IllConditionedError when the Gram
/// matrix is not positive definite at working precision (the caller should
/// shrink the window).
inline RFactorExtended cholesky_extend(const GradientWindow& window) {
    const std::size_t m = window.columns.size();
    if (m == 0) throw ShapeError("cholesky_extend: empty window");
    const std::size_t n = window.columns[0].size();
    if (window.current.size() != n) throw ShapeError("cholesky_extend: current gradient length");

    Matrix gram(m, m);
    Vector c(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            gram(i, j) = dot(window.columns[i], window.columns[j]);
            gram(j, i) = gram(i, j);
        }
        c[i] = dot(window.columns[i], window.current);
    }

    RFactorExtended out;
    out.r_matrix = Matrix(m, m);
    Matrix& r = out.r_matrix;
    for (std::size_t j = 0; j < m; ++j) {
        double s = gram(j, j);
        for (std::size_t k = 0; k < j; ++k) s -= r(k, j) * r(k, j);
        if (!(s > 0.0))
            throw IllConditionedError("cholesky_extend: Gram matrix numerically indefinite");
        r(j, j) = std::sqrt(s);
        for (std::size_t i = j + 1; i < m; ++i) {
            double t = gram(j, i);
            for (std::size_t k = 0; k < j; ++k) t -= r(k, j) * r(k, i);
            r(j, i) = t / r(j, j);
        }
    }

    out.r_col.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double t = c[i];
        for (std::size_t k = 0; k < i; ++k) t -= r(k, i) * out.r_col[k];
        out.r_col[i] = t / r(i, i);
    }
    return out;
}

/// Matrix-free projection [R, r] J R⁻¹ where J is the (m+1)×m bidiagonal with
/// 1/alpha_j on the diagonal and -1/alpha_j below it, alpha_j being the
/// steplength that produced the transition out of window column j. Only the
/// tridiagonal band is kept, with the off-diagonal symmetrized.
inline TridiagonalMatrix build_T_matrixfree(const RFactorExtended& rf,
                                            std::span<const double> steplengths) {
    const std::size_t m = rf.r_matrix.rows();
    if (m == 0 || rf.r_matrix.cols() != m || rf.r_col.size() != m)
        throw ShapeError("build_T_matrixfree: inconsistent factor sizes");
    if (steplengths.size() != m) throw ShapeError("build_T_matrixfree: steplength count");
    for (double a : steplengths)
        if (!(a > 0.0)) throw std::domain_error("build_T_matrixfree: steplengths must be positive");
    for (std::size_t j = 0; j < m; ++j)
        if (!(rf.r_matrix(j, j) > 0.0) || !std::isfinite(rf.r_matrix(j, j)))
            throw IllConditionedError("build_T_matrixfree: singular R factor");

    auto r_aug = [&](std::size_t i, std::size_t k) {
        return k < m ? rf.r_matrix(i, k) : rf.r_col[i];
    };

    // P = [R, r] J
    Matrix p(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) p(i, k) = (r_aug(i, k) - r_aug(i, k + 1)) / steplengths[k];

    // Solve X R = P column by column.
    Matrix x(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double s = p(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= x(i, k) * rf.r_matrix(k, j);
            x(i, j) = s / rf.r_matrix(j, j);
        }
    }

    TridiagonalMatrix t;
    t.diag.resize(m);
    t.offdiag.resize(m - 1);
    for (std::size_t i = 0; i < m; ++i) t.diag[i] = x(i, i);
    for (std::size_t i = 0; i + 1 < m; ++i) t.offdiag[i] = 0.5 * (x(i, i + 1) + x(i + 1, i));
    return t;
}

/// All eigenvalues of the projection, sorted in decreasing order, via the QL
/// algorithm with implicit shifts (cap of 30 m iterations per eigenvalue).
inline RitzValues ritz_values(const TridiagonalMatrix& t) {
    const std::size_t m = t.diag.size();
    if (m == 0) throw ShapeError("ritz_values: empty matrix");
    if (t.offdiag.size() + 1 != m) throw ShapeError("ritz_values: band sizes inconsistent");
    for (double v : t.diag)
        if (!std::isfinite(v)) throw std::invalid_argument("ritz_values: non-finite entry");
    for (double v : t.offdiag)
        if (!std::isfinite(v)) throw std::invalid_argument("ritz_values: non-finite entry");

    Vector d = t.diag;
    Vector off = t.offdiag;
    detail::tridiag_ql(d, off, nullptr, 30 * static_cast<int>(m));
    std::sort(d.begin(), d.end(), std::greater<double>());
    return RitzValues{std::move(d)};
}

/// Largest suffix (newest vectors) of the window whose R factor passes the
/// diagonal test R(j,j) >= rank_tol * max_diag. At least one vector is always
/// retained. Discarding the oldest back gradients this way is the remedy for
/// a numerically ill-conditioned window.
inline GradientWindow condition_guard(const GradientWindow& window, double rank_tol) {
    const std::size_t m = window.columns.size();
    if (m == 0) throw ShapeError("condition_guard: empty window");
    for (std::size_t start = 0; start < m; ++start) {
        std::vector<Vector> suffix(window.columns.begin() + static_cast<std::ptrdiff_t>(start),
                                   window.columns.end());
        if (start + 1 == m)
            return GradientWindow{std::move(suffix), window.current};
        const QrFactors f = detail::qr_householder(suffix);
        if (detail::min_diag_ratio(f.r) >= rank_tol)
            return GradientWindow{std::move(suffix), window.current};
    }
    return GradientWindow{{window.columns.back()}, window.current};  // unreachable
}

}  // namespace gradlab

#endif
