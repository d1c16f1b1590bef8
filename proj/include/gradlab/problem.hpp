#ifndef GRADLAB_PROBLEM_HPP
#define GRADLAB_PROBLEM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/linalg.hpp"

namespace gradlab {

/// Strongly convex quadratic f(x) = 1/2 xᵀAx - bᵀx with SPD Hessian A.
///
/// The Hessian is stored either as a diagonal spectrum (eigenvalues in
/// nondecreasing order; the canonical form for the test problems) or as a
/// dense symmetric matrix. Instances are immutable after construction and
/// safe to share across concurrent runs.
class QuadraticProblem {
public:
    /// Diagonal Hessian from its spectrum. Eigenvalues must be strictly
    /// positive and nondecreasing.
    static QuadraticProblem diagonal(Vector spectrum, Vector rhs) {
        if (spectrum.empty()) throw InvalidSpectrumError("empty spectrum");
        if (spectrum.size() != rhs.size()) throw ShapeError("rhs length does not match dimension");
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            if (!(spectrum[i] > 0.0)) throw InvalidSpectrumError("eigenvalues must be positive");
            if (i > 0 && spectrum[i] < spectrum[i - 1])
                throw InvalidSpectrumError("diagonal spectrum must be nondecreasing");
        }
        QuadraticProblem p;
        p.spectrum_ = std::move(spectrum);
        p.rhs_ = std::move(rhs);
        p.diagonal_storage_ = true;
        return p;
    }

    /// Dense symmetric Hessian. The matrix is checked for symmetry, stored in
    /// exactly symmetrized form, and eigendecomposed once up front for the
    /// spectral queries.
    static QuadraticProblem dense(Matrix hessian, Vector rhs) {
        if (hessian.rows() != hessian.cols()) throw ShapeError("hessian must be square");
        if (hessian.rows() != rhs.size()) throw ShapeError("rhs length does not match dimension");
        double max_abs = 0.0;
        for (std::size_t i = 0; i < hessian.rows(); ++i)
            for (std::size_t j = 0; j < hessian.cols(); ++j)
                max_abs = std::max(max_abs, std::abs(hessian(i, j)));
        for (std::size_t i = 0; i < hessian.rows(); ++i)
            for (std::size_t j = i + 1; j < hessian.cols(); ++j) {
                if (std::abs(hessian(i, j) - hessian(j, i)) > 1e-12 * max_abs)
                    throw InvalidSpectrumError("dense hessian is not symmetric");
                const double sym = 0.5 * (hessian(i, j) + hessian(j, i));
                hessian(i, j) = sym;
                hessian(j, i) = sym;
            }
        QuadraticProblem p;
        p.dense_ = std::move(hessian);
        p.rhs_ = std::move(rhs);
        p.diagonal_storage_ = false;
        p.eig_ = sym_eigen(p.dense_);
        for (double lam : p.eig_.values)
            if (!(lam > 0.0)) throw InvalidSpectrumError("dense hessian is not positive definite");
        return p;
    }

    std::size_t dim() const { return rhs_.size(); }
    bool is_diagonal() const { return diagonal_storage_; }
    const Vector& rhs() const { return rhs_; }

    /// Eigenvalues in nondecreasing order.
    const Vector& spectrum() const { return diagonal_storage_ ? spectrum_ : eig_.values; }
    double lambda_min() const { return spectrum().front(); }
    double lambda_max() const { return spectrum().back(); }

    /// A·x.
    Vector apply_hessian(std::span<const double> x) const {
        check_dim(x.size());
        if (diagonal_storage_) {
            Vector y(dim());
            for (std::size_t i = 0; i < dim(); ++i) y[i] = spectrum_[i] * x[i];
            return y;
        }
        return matvec(dense_, x);
    }

    /// Gradient A·x - b.
    Vector gradient(std::span<const double> x) const {
        check_dim(x.size());
        Vector g = apply_hessian(x);
        for (std::size_t i = 0; i < dim(); ++i) g[i] -= rhs_[i];
        return g;
    }

    /// Objective 1/2 xᵀAx - bᵀx.
    double value(std::span<const double> x) const {
        check_dim(x.size());
        const Vector ax = apply_hessian(x);
        return 0.5 * dot(x, ax) - dot(rhs_, x);
    }

    /// Coefficients of g in the Hessian eigenbasis, ordered by nondecreasing
    /// eigenvalue. For a diagonal Hessian this is g itself.
    Vector spectral_components(std::span<const double> g) const {
        check_dim(g.size());
        if (diagonal_storage_) return Vector(g.begin(), g.end());
        Vector z(dim(), 0.0);
        for (std::size_t j = 0; j < dim(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < dim(); ++i) s += eig_.vectors(i, j) * g[i];
            z[j] = s;
        }
        return z;
    }

    /// The unique minimizer A⁻¹b.
    Vector minimizer() const {
        if (diagonal_storage_) {
            Vector x(dim());
            for (std::size_t i = 0; i < dim(); ++i) x[i] = rhs_[i] / spectrum_[i];
            return x;
        }
        Vector z = spectral_components(rhs_);
        for (std::size_t j = 0; j < dim(); ++j) z[j] /= eig_.values[j];
        Vector x(dim(), 0.0);
        for (std::size_t i = 0; i < dim(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim(); ++j) s += eig_.vectors(i, j) * z[j];
            x[i] = s;
        }
        return x;
    }

private:
    QuadraticProblem() = default;

    void check_dim(std::size_t n) const {
        if (n != dim()) throw ShapeError("vector length does not match problem dimension");
    }

    bool diagonal_storage_ = true;
    Vector spectrum_;
    Matrix dense_;
    SymmetricEigen eig_;
    Vector rhs_;
};

/// One point of a gradient run: position, gradient, objective, gradient norm
/// and iteration counter, kept mutually consistent by construction.
struct Iterate {
    Vector x;
    Vector g;
    double fval = 0.0;
    double gnorm = 0.0;
    int index = 0;
};

inline Iterate evaluate_iterate(const QuadraticProblem& p, Vector x, int index) {
    Iterate it;
    it.g = p.gradient(x);
    it.fval = p.value(x);
    it.gnorm = norm2(it.g);
    it.x = std::move(x);
    it.index = index;
    return it;
}

/// The standard benchmark problem: eigenvalues in geometric progression
/// lambda1 * ratio^(i-1) and a right-hand side drawn uniformly from
/// [b_low, b_high] by SeededUniform. Equal arguments give bitwise-equal
/// problems. Ratios below one are stored in reversed (nondecreasing) order.
inline QuadraticProblem make_fletcher_problem(int dim, double lambda1, double ratio,
                                              double b_low, double b_high, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("dim must be at least 1");
    if (!(lambda1 > 0.0)) throw InvalidSpectrumError("lambda1 must be positive");
    if (!(ratio > 0.0)) throw InvalidSpectrumError("ratio must be positive");
    if (b_low > b_high) throw std::invalid_argument("b_low must not exceed b_high");

    Vector spectrum(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        spectrum[static_cast<std::size_t>(i)] = lambda1 * std::pow(ratio, static_cast<double>(i));
    if (ratio < 1.0) std::reverse(spectrum.begin(), spectrum.end());

    SeededUniform rng(seed);
    Vector rhs(static_cast<std::size_t>(dim));
    for (auto& b : rhs) b = rng.next(b_low, b_high);
    return QuadraticProblem::diagonal(std::move(spectrum), std::move(rhs));
}

}  // namespace gradlab

#endif
