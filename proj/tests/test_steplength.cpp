#include <catch2/catch.hpp>

#include <cmath>

#include "gradlab/steplength.hpp"
#include "oracles.hpp"

using namespace gradlab;

TEST_CASE("exact line-search steplength") {
    SECTION("identity Hessian gives 1") {
        const auto p = QuadraticProblem::diagonal({1.0, 1.0, 1.0}, Vector(3, 0.0));
        CHECK(sd_step(p, Vector{0.3, -0.7, 2.0}) == 1.0);
    }
    SECTION("diag(1,2) with g = (1,1)") {
        const auto p = QuadraticProblem::diagonal({1.0, 2.0}, Vector(2, 0.0));
        CHECK(sd_step(p, Vector{1.0, 1.0}) == 2.0 / 3.0);
    }
    SECTION("an eigenvector gives the reciprocal eigenvalue") {
        const auto p = QuadraticProblem::diagonal({1.0, 4.0}, Vector(2, 0.0));
        CHECK(sd_step(p, Vector{0.0, 2.0}) == 0.25);
    }
    SECTION("zero gradient is a domain error") {
        const auto p = QuadraticProblem::diagonal({1.0}, {0.0});
        CHECK_THROWS_AS(sd_step(p, Vector{0.0}), std::domain_error);
    }
    SECTION("Rayleigh quotient bounds") {
        const auto p = make_fletcher_problem(15, 1.0, std::sqrt(2.0), 10.0, 20.0, 3);
        SeededUniform rng(77);
        for (int rep = 0; rep < 50; ++rep) {
            Vector g(15);
            for (auto& x : g) x = rng.next(-1.0, 1.0);
            const double a = sd_step(p, g);
            CHECK(a >= 1.0 / p.lambda_max() * (1.0 - 1e-12));
            CHECK(a <= 1.0 / p.lambda_min() * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("Barzilai-Borwein steplength") {
    CHECK(bb_step(Vector{1.0, 1.0}, Vector{1.0, 1.0}) == 1.0);
    CHECK(bb_step(Vector{1.0, 0.0}, Vector{2.0, 1.0}) == 0.5);
    CHECK_THROWS_AS(bb_step(Vector{1.0, 0.0}, Vector{-1.0, 0.0}), CurvatureError);

    SECTION("equals the previous exact steplength on a quadratic trajectory") {
        const auto p = make_fletcher_problem(12, 1.0, std::sqrt(2.0), 10.0, 20.0, 9);
        Vector x = Vector(12, 0.0);
        for (int n = 0; n < 30; ++n) {
            const Vector g = p.gradient(x);
            const double a = sd_step(p, g);
            const Vector x_next = add_scaled(x, -a, g);
            const Vector s = subtract(x_next, x);
            const Vector y = subtract(p.gradient(x_next), g);
            CHECK(bb_step(s, y) == Approx(a).epsilon(1e-12));
            x = x_next;
        }
    }
}

TEST_CASE("Yuan steplength") {
    SECTION("balanced inputs") {
        bool clamped = true;
        CHECK(yuan_step({1.0, 1.0, 1.0, 1.0}, clamped) == 0.5);
        CHECK_FALSE(clamped);
    }
    SECTION("invalid inputs") {
        CHECK_THROWS_AS(yuan_step({0.0, 1.0, 1.0, 1.0}), std::domain_error);
        CHECK_THROWS_AS(yuan_step({1.0, -1.0, 1.0, 1.0}), std::domain_error);
        CHECK_THROWS_AS(yuan_step({1.0, 1.0, 0.0, 1.0}), std::domain_error);
    }
    SECTION("rounding can push the discriminant just below zero") {
        bool clamped = false;
        const double a = yuan_step({1.0 / 7.0, 1.0 / 7.0, 1.0, 1e-9}, clamped);
        CHECK(clamped);
        CHECK(a == Approx(1.0 / 7.0).epsilon(1e-12));
    }
    SECTION("two exact steps on diag(1,4) recover the largest eigenvalue") {
        const auto p = QuadraticProblem::diagonal({1.0, 4.0}, Vector(2, 0.0));
        Vector x{1.0, 1.0};
        Vector g = p.gradient(x);
        const double a0 = sd_step(p, g);
        const double gn0 = norm2(g);
        x = add_scaled(x, -a0, g);
        g = p.gradient(x);
        const double a1 = sd_step(p, g);
        const double gn1 = norm2(g);

        const double ay = yuan_step({a0, a1, gn0, gn1});
        const long double ref = oracle::yuan_extended(a0, a1, gn0, gn1);
        CHECK(ay == Approx(static_cast<double>(ref)).epsilon(1e-13));
        CHECK(1.0 / ay == Approx(4.0).epsilon(1e-12));
    }
    SECTION("properties along exact line-search trajectories") {
        const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 13);
        const double lam_max = p.lambda_max();
        Vector x(20, 0.0);
        Vector g = p.gradient(x);
        double a_prev = 0.0, gn_prev = 0.0;
        for (int n = 0; n < 200; ++n) {
            const double a = sd_step(p, g);
            const double gn = norm2(g);
            if (n > 0) {
                const double ay = yuan_step({a_prev, a, gn_prev, gn});
                CHECK(ay <= std::min(a_prev, a) + 1e-12);
                CHECK(1.0 / ay >= p.lambda_min() - 1e-8 * lam_max);
                CHECK(1.0 / ay <= lam_max + 1e-8 * lam_max);
            }
            a_prev = a;
            gn_prev = gn;
            x = add_scaled(x, -a, g);
            g = p.gradient(x);
        }
    }
    SECTION("reciprocal approaches the largest eigenvalue along the run") {
        const auto p = make_fletcher_problem(20, 1.0, std::sqrt(2.0), 10.0, 20.0, 29);
        Vector x(20, 0.0);
        Vector g = p.gradient(x);
        double a_prev = 0.0, gn_prev = 0.0;
        double best_rel = 1.0;
        for (int n = 0; n < 400; ++n) {
            const double a = sd_step(p, g);
            const double gn = norm2(g);
            if (n > 0) {
                const double ay = yuan_step({a_prev, a, gn_prev, gn});
                best_rel = std::min(best_rel, std::abs(1.0 / ay - p.lambda_max()) / p.lambda_max());
            }
            a_prev = a;
            gn_prev = gn;
            x = add_scaled(x, -a, g);
            g = p.gradient(x);
        }
        CHECK(best_rel < 0.01);
    }
}
