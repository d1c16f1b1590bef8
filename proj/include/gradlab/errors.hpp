#ifndef GRADLAB_ERRORS_HPP
#define GRADLAB_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gradlab {

/// Vector/matrix dimensions do not match the problem.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A Hessian specification is not symmetric positive definite.
struct InvalidSpectrumError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// sᵀy was nonpositive where positive curvature is required.
struct CurvatureError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A triangular factor has an effectively zero diagonal entry.
/// `index` is the first deficient column.
struct RankDeficiencyError : std::runtime_error {
    RankDeficiencyError(const std::string& what, std::size_t deficient_index)
        : std::runtime_error(what), index(deficient_index) {}
    std::size_t index;
};

/// A Gram or triangular factor is numerically unusable; the caller should
/// shrink the gradient window and retry.
struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The tridiagonal eigensolver did not converge within its iteration cap.
struct EigensolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A configuration document could not be parsed; `key` names the offender.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::string offending_key)
        : std::runtime_error(what), key(std::move(offending_key)) {}
    std::string key;
};

/// Output files could not be created or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gradlab

#endif
