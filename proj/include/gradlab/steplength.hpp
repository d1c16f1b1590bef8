#ifndef GRADLAB_STEPLENGTH_HPP
#define GRADLAB_STEPLENGTH_HPP

#include <cmath>
#include <span>
#include <stdexcept>

#include "gradlab/linalg.hpp"
#include "gradlab/problem.hpp"

namespace gradlab {

/// Exact line-search steplength gᵀg / gᵀAg, the minimizer of f along -g.
inline double sd_step(const QuadraticProblem& p, std::span<const double> g) {
    const double gg = dot(g, g);
    if (!(gg > 0.0)) throw std::domain_error("sd_step: zero gradient");
    const Vector ag = p.apply_hessian(g);
    return gg / dot(g, ag);
}

/// Barzilai-Borwein steplength sᵀs / sᵀy from the displacement s and the
/// gradient difference y of the previous iteration.
inline double bb_step(std::span<const double> s, std::span<const double> y) {
    const double sy = dot(s, y);
    if (!(sy > 0.0)) throw CurvatureError("bb_step: nonpositive curvature s'y");
    return dot(s, s) / sy;
}

/// Data for the Yuan steplength: the two most recent exact line-search
/// steplengths and the gradient norms at the iterates where they applied.
struct YuanInputs {
    double alpha_sd_prev = 0.0;
    double alpha_sd_curr = 0.0;
    double gnorm_prev = 0.0;
    double gnorm_curr = 0.0;
};

/// Yuan steplength 2 / (a + sqrt(a^2 - 4c)) with a = 1/prev + 1/curr and
/// c = 1/(prev*curr) - gnorm_curr^2 / (prev * gnorm_prev)^2. Its reciprocal
/// tends to the largest Hessian eigenvalue along exact line-search iterations.
/// The discriminant is nonnegative in exact arithmetic; a negative value from
/// rounding is clamped to zero and reported through `discriminant_clamped`.
inline double yuan_step(const YuanInputs& in, bool& discriminant_clamped) {
    if (!(in.alpha_sd_prev > 0.0) || !(in.alpha_sd_curr > 0.0))
        throw std::domain_error("yuan_step: steplengths must be positive");
    if (!(in.gnorm_prev > 0.0) || !(in.gnorm_curr >= 0.0))
        throw std::domain_error("yuan_step: invalid gradient norms");

    const double a = 1.0 / in.alpha_sd_prev + 1.0 / in.alpha_sd_curr;
    const double ratio = in.gnorm_curr / (in.alpha_sd_prev * in.gnorm_prev);
    const double c = 1.0 / (in.alpha_sd_prev * in.alpha_sd_curr) - ratio * ratio;
    double disc = a * a - 4.0 * c;
    discriminant_clamped = disc < 0.0;
    if (discriminant_clamped) disc = 0.0;
    const double alpha = 2.0 / (a + std::sqrt(disc));
    if (!(alpha > 0.0)) throw std::domain_error("yuan_step: nonpositive steplength");
    return alpha;
}

inline double yuan_step(const YuanInputs& in) {
    bool clamped = false;
    return yuan_step(in, clamped);
}

}  // namespace gradlab

#endif
