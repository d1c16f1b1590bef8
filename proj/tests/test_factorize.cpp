#include <catch2/catch.hpp>

#include <cmath>

#include "gradlab/factorize.hpp"
#include "gradlab/steplength.hpp"
#include "oracles.hpp"

using namespace gradlab;

namespace {

struct WindowWithSteps {
    GradientWindow window;
    std::vector<double> alphas;
};

/// Consecutive exact line-search gradients from the origin, paired with the
/// steplengths that produced each transition.
WindowWithSteps consecutive_gradients(const QuadraticProblem& p, int count) {
    WindowWithSteps out;
    Vector x(p.dim(), 0.0);
    Vector g = p.gradient(x);
    for (int i = 0; i < count; ++i) {
        const double a = sd_step(p, g);
        out.window.columns.push_back(g);
        out.alphas.push_back(a);
        x = add_scaled(x, -a, g);
        g = p.gradient(x);
    }
    out.window.current = g;
    return out;
}

std::vector<Vector> random_columns(SeededUniform& rng, std::size_t n, std::size_t m) {
    std::vector<Vector> cols(m, Vector(n));
    for (auto& c : cols)
        for (auto& x : c) x = rng.next(-1.0, 1.0);
    return cols;
}

double max_abs(double a, double b) { return std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("QR of a single column") {
    const auto f = qr_factor({Vector{3.0, 4.0}});
    REQUIRE(f.r.rows() == 1);
    CHECK(f.r(0, 0) == Approx(5.0).epsilon(1e-15));
    CHECK(f.q_columns[0][0] == Approx(0.6).epsilon(1e-14));
    CHECK(f.q_columns[0][1] == Approx(0.8).epsilon(1e-14));
}

TEST_CASE("QR of orthonormal columns returns the identity R") {
    std::vector<Vector> cols = {{1.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}};
    const auto f = qr_factor(cols);
    CHECK(f.r(0, 0) == Approx(1.0).epsilon(1e-12));
    CHECK(f.r(1, 1) == Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(f.r(0, 1)) <= 1e-12);
}

TEST_CASE("QR reconstruction and orthogonality on a seeded 20x4 window") {
    SeededUniform rng(2024);
    const auto cols = random_columns(rng, 20, 4);
    const auto f = qr_factor(cols);

    double gnorm = 0.0, err = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t i = 0; i < 20; ++i) {
            double qr_ij = 0.0;
            for (std::size_t k = 0; k <= j; ++k) qr_ij += f.q_columns[k][i] * f.r(k, j);
            err = std::max(err, std::abs(qr_ij - cols[j][i]));
            gnorm = std::max(gnorm, std::abs(cols[j][i]));
        }
    }
    CHECK(err <= 1e-12 * gnorm);

    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double qq = dot(f.q_columns[i], f.q_columns[j]);
            CHECK(std::abs(qq - (i == j ? 1.0 : 0.0)) <= 1e-12);
        }

    SECTION("factoring Q itself returns the identity") {
        const auto f2 = qr_factor(f.q_columns);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(std::abs(f2.r(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-12);
    }
}

TEST_CASE("QR flags effectively dependent windows") {
    SeededUniform rng(7);
    auto cols = random_columns(rng, 10, 2);
    cols.push_back(cols[0]);  // exact repeat of the first column
    try {
        qr_factor(cols);
        FAIL("expected RankDeficiencyError");
    } catch (const RankDeficiencyError& e) {
        CHECK(e.index == 2);
    }
}

TEST_CASE("explicit projection") {
    const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 5);

    SECTION("single column gives the Rayleigh quotient") {
        const auto ws = consecutive_gradients(p, 1);
        const auto f = qr_factor(ws.window.columns);
        const auto t = build_T_explicit(f.q_columns, p);
        const Vector& g = ws.window.columns[0];
        const double rayleigh = dot(g, p.apply_hessian(g)) / dot(g, g);
        CHECK(t.diag[0] == Approx(rayleigh).epsilon(1e-13));
    }

    SECTION("identity Hessian projects to the identity") {
        const auto id = QuadraticProblem::diagonal(Vector(6, 1.0), Vector(6, 0.0));
        SeededUniform rng(3);
        const auto f = qr_factor(random_columns(rng, 6, 3));
        const auto t = build_T_explicit(f.q_columns, id);
        for (double d : t.diag) CHECK(d == Approx(1.0).epsilon(1e-12));
        for (double e : t.offdiag) CHECK(std::abs(e) <= 1e-12);
    }

    SECTION("consecutive gradients give a numerically tridiagonal congruence") {
        const auto ws = consecutive_gradients(p, 4);
        const auto f = qr_factor(ws.window.columns);
        const auto t = build_T_explicit(f.q_columns, p);
        const Matrix full = oracle::congruence(f.q_columns, p);
        double tnorm = 0.0;
        for (double d : t.diag) tnorm = std::max(tnorm, std::abs(d));
        double worst = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                if (i + 1 < j || j + 1 < i) worst = std::max(worst, std::abs(full(i, j)));
        CHECK(worst <= 1e-8 * tnorm);
    }
}

TEST_CASE("partially extended Cholesky factorization") {
    SECTION("single column") {
        GradientWindow w;
        w.columns = {Vector{3.0, 4.0}};
        w.current = Vector{1.0, 2.0};
        const auto rf = cholesky_extend(w);
        CHECK(rf.r_matrix(0, 0) == Approx(5.0).epsilon(1e-15));
        CHECK(rf.r_col[0] == Approx((3.0 + 8.0) / 5.0).epsilon(1e-15));
    }

    SECTION("orthogonal columns give a diagonal factor of column norms") {
        GradientWindow w;
        w.columns = {Vector{2.0, 0.0, 0.0}, Vector{0.0, 0.0, -3.0}};
        w.current = Vector{1.0, 1.0, 1.0};
        const auto rf = cholesky_extend(w);
        CHECK(rf.r_matrix(0, 0) == 2.0);
        CHECK(rf.r_matrix(1, 1) == 3.0);
        CHECK(rf.r_matrix(0, 1) == 0.0);
    }

    SECTION("agrees with the QR factor on a seeded window") {
        const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 8);
        const auto ws = consecutive_gradients(p, 4);
        const auto rf = cholesky_extend(ws.window);
        const auto f = qr_factor(ws.window.columns);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i; j < 4; ++j)
                CHECK(rf.r_matrix(i, j) ==
                      Approx(f.r(i, j)).epsilon(1e-8).margin(1e-8 * max_abs(f.r(i, i), 1.0)));
    }

    SECTION("numerically indefinite Gram matrix is reported") {
        GradientWindow w;
        w.columns = {Vector{1.0, 0.0}, Vector{1.0, 0.0}};  // exactly singular Gram
        w.current = Vector{1.0, 0.0};
        CHECK_THROWS_AS(cholesky_extend(w), IllConditionedError);
    }
}

TEST_CASE("matrix-free projection") {
    SECTION("bidiagonal structure of the steplength matrix") {
        // With R = I and r = 0 the product reduces to the leading m x m block
        // of J itself: diagonal 1/alpha_j, subdiagonal -1/alpha_j.
        RFactorExtended rf{Matrix::identity(2), Vector{0.0, 0.0}};
        const std::vector<double> steps = {0.5, 0.25};
        const auto t = build_T_matrixfree(rf, steps);
        CHECK(t.diag[0] == 2.0);
        CHECK(t.diag[1] == 4.0);
        CHECK(t.offdiag[0] == -1.0);  // symmetrized (0 + -1/alpha_0)/2
    }

    SECTION("single column reduces to the Rayleigh quotient") {
        const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 4);
        const auto ws = consecutive_gradients(p, 1);
        const auto rf = cholesky_extend(ws.window);
        const auto t = build_T_matrixfree(rf, ws.alphas);
        const Vector& g = ws.window.columns[0];
        const double rayleigh = dot(g, p.apply_hessian(g)) / dot(g, g);
        CHECK(t.diag[0] == Approx(rayleigh).epsilon(1e-12));
    }

    SECTION("agrees with the explicit projection on seeded windows") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, seed);
            const auto ws = consecutive_gradients(p, 4);
            const auto rf = cholesky_extend(ws.window);
            const auto t_free = build_T_matrixfree(rf, ws.alphas);
            const auto f = qr_factor(ws.window.columns);
            const auto t_exp = build_T_explicit(f.q_columns, p);
            for (std::size_t i = 0; i < 4; ++i)
                CHECK(t_free.diag[i] == Approx(t_exp.diag[i]).epsilon(1e-8));
            for (std::size_t i = 0; i + 1 < 4; ++i)
                CHECK(t_free.offdiag[i] ==
                      Approx(t_exp.offdiag[i]).epsilon(1e-8).margin(1e-8 * std::abs(t_exp.diag[i])));
        }
    }

    SECTION("input validation") {
        RFactorExtended rf{Matrix::identity(2), Vector{0.0, 0.0}};
        CHECK_THROWS_AS(build_T_matrixfree(rf, std::vector<double>{1.0, -1.0}), std::domain_error);
        CHECK_THROWS_AS(build_T_matrixfree(rf, std::vector<double>{1.0}), ShapeError);
        RFactorExtended singular{Matrix(2, 2), Vector{0.0, 0.0}};
        CHECK_THROWS_AS(build_T_matrixfree(singular, std::vector<double>{1.0, 1.0}),
                        IllConditionedError);
    }
}

TEST_CASE("tridiagonal eigenvalues") {
    SECTION("1x1") {
        const auto r = ritz_values({Vector{3.5}, Vector{}});
        CHECK(r.values == Vector{3.5});
    }
    SECTION("2x2 analytic") {
        const auto r = ritz_values({Vector{2.0, 2.0}, Vector{1.0}});
        CHECK(r.values[0] == Approx(3.0).epsilon(1e-14));
        CHECK(r.values[1] == Approx(1.0).epsilon(1e-14));
    }
    SECTION("5x5 Toeplitz has the closed-form spectrum") {
        const auto r = ritz_values({Vector(5, 2.0), Vector(4, -1.0)});
        for (int k = 1; k <= 5; ++k) {
            const double expected = 2.0 - 2.0 * std::cos(k * M_PI / 6.0);
            CHECK(r.values[static_cast<std::size_t>(5 - k)] == Approx(expected).margin(1e-13));
        }
    }
    SECTION("non-finite input is rejected") {
        CHECK_THROWS_AS(ritz_values({Vector{1.0, std::nan("")}, Vector{0.0}}),
                        std::invalid_argument);
    }
    SECTION("matches Sturm bisection on random matrices up to size 6") {
        SeededUniform rng(123);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t m = 1 + static_cast<std::size_t>(rng.next() * 6.0) % 6;
            Vector d(m), e(m > 0 ? m - 1 : 0);
            for (auto& x : d) x = rng.next(-1.0, 1.0);
            for (auto& x : e) x = rng.next(-1.0, 1.0);
            const auto r = ritz_values({d, e});
            Vector ref = oracle::tridiag_eigen_bisect(d, e);
            std::reverse(ref.begin(), ref.end());
            for (std::size_t i = 0; i < m; ++i)
                CHECK(r.values[i] == Approx(ref[i]).margin(1e-10));
        }
    }
}

TEST_CASE("condition guard") {
    const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 6);

    SECTION("a well-conditioned window is unchanged") {
        const auto ws = consecutive_gradients(p, 4);
        const auto guarded = condition_guard(ws.window, 1e-10);
        CHECK(guarded.columns == ws.window.columns);
        CHECK(guarded.current == ws.window.current);
    }

    SECTION("the older copy of a duplicated column is dropped") {
        SeededUniform rng(15);
        auto cols = random_columns(rng, 8, 2);
        GradientWindow w;
        w.columns = {cols[0], cols[1], cols[0]};
        w.current = Vector(8, 1.0);
        const auto guarded = condition_guard(w, 1e-10);
        REQUIRE(guarded.columns.size() == 2);
        CHECK(guarded.columns[0] == cols[1]);
        CHECK(guarded.columns[1] == cols[0]);
        CHECK_NOTHROW(qr_factor(guarded.columns, 1e-10));
    }

    SECTION("a single-column window is always retained") {
        GradientWindow w;
        w.columns = {Vector{0.0, 0.0}};
        w.current = Vector{1.0, 1.0};
        const auto guarded = condition_guard(w, 0.5);
        CHECK(guarded.columns.size() == 1);
    }
}

TEST_CASE("both projection paths yield the same Ritz values") {
    for (std::uint64_t seed = 11; seed <= 20; ++seed) {
        const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, seed);
        const auto ws = consecutive_gradients(p, 4);
        const auto guarded = condition_guard(ws.window, 1e-10);
        REQUIRE(guarded.columns.size() == 4);

        const auto f = qr_factor(guarded.columns);
        const auto r_explicit = ritz_values(build_T_explicit(f.q_columns, p));
        const auto r_free = ritz_values(build_T_matrixfree(cholesky_extend(guarded), ws.alphas));
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(r_free.values[i] == Approx(r_explicit.values[i]).epsilon(1e-6));

        // Ritz containment: projections cannot escape the spectrum interval.
        for (double theta : r_explicit.values) {
            CHECK(theta >= p.lambda_min() - 1e-10 * p.lambda_max());
            CHECK(theta <= p.lambda_max() * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("memory-one window reproduces the Barzilai-Borwein steplength") {
    const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 31);
    Vector x0(20, 0.0);
    const Vector g0 = p.gradient(x0);
    const double a0 = sd_step(p, g0);
    const Vector x1 = add_scaled(x0, -a0, g0);
    const Vector g1 = p.gradient(x1);

    const auto f = qr_factor({g0});
    const auto t = build_T_explicit(f.q_columns, p);
    const auto r = ritz_values(t);

    const double rayleigh = dot(g0, p.apply_hessian(g0)) / dot(g0, g0);
    CHECK(r.values[0] == Approx(rayleigh).epsilon(1e-12));

    const double bb = bb_step(subtract(x1, x0), subtract(g1, g0));
    CHECK(1.0 / r.values[0] == Approx(bb).epsilon(1e-12));
}
