#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "fixtures.hpp"
#include "hdplus/angular.hpp"
#include "hdplus/errors.hpp"

using namespace hdplus;
using namespace hdplus::angular;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Closed-form N = 0 spectrum of E4 s.Ip + E5 s.Id: F=2 (x5), F=0 (x1) and
// the two roots of the F=1 block in the (G1=1, G1=0) basis (x3 each).
std::vector<double> n0_oracle(double e4, double e5) {
    const double a = e4 / 4 - e5 / 2;
    const double d = -0.75 * e4;
    const double off = e5 / std::sqrt(2.0);
    const double mean = 0.5 * (a + d);
    const double half = std::sqrt(0.25 * (a - d) * (a - d) + off * off);
    std::vector<double> out;
    out.insert(out.end(), 5, e4 / 4 + e5 / 2);
    out.insert(out.end(), 1, e4 / 4 - e5);
    out.insert(out.end(), 3, mean + half);
    out.insert(out.end(), 3, mean - half);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("ladder, commutator and Casimir identities") {
    for (double j : {0.5, 1.0, 1.5, 2.0, 3.5}) {
        const auto s = jmatrices(j);
        const Matrix id = Matrix::Identity(s.dim(), s.dim());
        CHECK(max_abs(commutator(s.jz, s.jplus) - s.jplus) < 1e-12);
        CHECK(max_abs(commutator(s.jz, s.jminus) + s.jminus) < 1e-12);
        CHECK(max_abs(commutator(s.jplus, s.jminus) - 2.0 * s.jz) < 1e-12);
        CHECK(max_abs(s.casimir() - j * (j + 1) * id) < 1e-12);
        CHECK(max_abs(s.jminus - s.jplus.transpose()) < 1e-15);
    }
    CHECK_THROWS_AS(jmatrices(0.7), InputError);
    CHECK_THROWS_AS(jmatrices(-1.0), InputError);
}

TEST_CASE("product basis dimensions and total projection") {
    const ProductBasis b0(0), b1(1);
    CHECK(b0.dim() == 12);
    CHECK(b1.dim() == 36);
    for (int i = 0; i < b1.dim(); ++i) {
        const auto p = b1.projections(i);
        CHECK(b1.index(p[0], p[1], p[2], p[3]) == i);
        CHECK(b1.total_m(i) == doctest::Approx(p[0] + p[1] + p[2] + p[3]));
    }
}

TEST_CASE("Hamiltonian commutes with every component of F") {
    const auto c = testing::upper_coefficients();
    const ProductBasis basis(1);
    const Matrix h = build_hfs(c, basis);
    const auto m = coupled_momenta(basis);
    const double scale = max_abs(h);
    CHECK(max_abs(commutator(h, m.f.z)) < 1e-12 * scale);
    CHECK(max_abs(commutator(h, m.f.plus)) < 1e-12 * scale);
    CHECK(max_abs(commutator(h, m.f.minus)) < 1e-12 * scale);
    CHECK(max_abs(h - h.transpose()) == 0.0);
    CHECK(std::abs(h.trace()) < 1e-9 * scale);
}

TEST_CASE("N=0 spectrum matches the closed-form block for random E4, E5") {
    std::mt19937_64 rng(20201);
    std::uniform_real_distribution<double> d4(-2e6, 2e6);
    std::uniform_real_distribution<double> d5(-5e5, 5e5);
    const ProductBasis basis(0);
    for (int trial = 0; trial < 100; ++trial) {
        HyperfineCoefficients c;
        c.level = {0, 0};
        const double e4 = d4(rng), e5 = d5(rng);
        c.values[3] = e4;
        c.values[4] = e5;
        const Eigen::SelfAdjointEigenSolver<Matrix> es(build_hfs(c, basis));
        const auto oracle = n0_oracle(e4, e5);
        const double scale = std::max(std::abs(e4), std::abs(e5));
        for (int i = 0; i < basis.dim(); ++i) {
            CHECK(std::abs(es.eigenvalues()(i) - oracle[i]) < 1e-12 * scale);
        }
    }
}

TEST_CASE("level counts and degeneracies") {
    const auto lower = solve_level(testing::lower_coefficients());
    CHECK(lower.levels.size() == 4);
    int sum = 0;
    for (const auto& l : lower.levels) sum += l.degeneracy;
    CHECK(sum == 12);
    CHECK(lower.find({1, 2, 2}).degeneracy == 5);
    CHECK(lower.find({1, 0, 0}).degeneracy == 1);

    const auto upper = testing::solve_upper();
    CHECK(upper.levels.size() == 10);
    sum = 0;
    for (const auto& l : upper.levels) {
        REQUIRE(l.label);
        CHECK(l.degeneracy == 2 * l.label->f + 1);
        sum += l.degeneracy;
    }
    CHECK(sum == 36);
    CHECK_THROWS_AS(upper.find({1, 2, 4}), LookupError);
}

TEST_CASE("labels are exact for the pure stretched state") {
    const auto upper = testing::solve_upper();
    const auto& top = upper.find({1, 2, 3});
    CHECK(top.g1_sq == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(top.g2_sq == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(top.f_sq == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("vanishing Hamiltonian leaves one unlabeled manifold") {
    HyperfineCoefficients c;
    c.level = {0, 0};
    const auto s = solve_level(c);
    REQUIRE(s.levels.size() == 1);
    CHECK(s.levels[0].degeneracy == 12);
    CHECK_FALSE(s.levels[0].label.has_value());
}

TEST_CASE("rotational coefficients are rejected for N=0") {
    auto c = testing::lower_coefficients();
    c.values[0] = 1.0;
    CHECK_THROWS_AS(c.validate(), InputError);
    CHECK_THROWS_AS(solve_level(c), InputError);
}

TEST_CASE("Hellmann-Feynman sensitivities agree with central differences") {
    const HfsOptions opts = testing::dominant();
    const auto upper = testing::solve_upper();
    for (const SpinLabel label : {SpinLabel{1, 2, 1}, SpinLabel{1, 2, 3}, SpinLabel{0, 1, 1}, SpinLabel{1, 1, 2}}) {
        const auto hf = sensitivities(upper, label);
        const auto fd = finite_difference_sensitivities(upper.coeffs, label, 0.5, opts);
        for (int k = 0; k < coefficient_count; ++k) {
            const double floor = std::max({std::abs(hf[k]), std::abs(fd[k]), 1.0});
            CHECK(std::abs(hf[k] - fd[k]) <= 1e-6 * floor);
        }
    }
    const auto lower = solve_level(testing::lower_coefficients(), opts);
    const auto hf = sensitivities(lower, {1, 2, 2});
    CHECK(hf[3] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hf[4] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("level energies are sensitivity-weighted sums of the coefficients") {
    // H is linear in E_k, so E_level = sum_k gamma_k E_k exactly.
    const auto upper = testing::solve_upper();
    for (const auto& l : upper.levels) {
        const auto g = sensitivities(upper, *l.label);
        double e = 0.0;
        for (int k = 0; k < coefficient_count; ++k) e += g[k] * upper.coeffs.e(k + 1);
        CHECK(e == doctest::Approx(l.energy).epsilon(1e-10));
    }
}

TEST_CASE("spin uncertainty decomposes into absolute-value terms") {
    const auto t = testing::sensitivity_table();
    const SpinUncertaintyParams p;
    const auto terms = spin_uncertainty_terms(t, {"12", "16"}, p);
    for (double b : {0.0, 0.3, 0.5, 1.0}) {
        double sum = 0.0;
        for (const auto& term : terms) sum += std::abs(b * term.slope[0] + (1 - b) * term.slope[1]);
        CHECK(sum == doctest::Approx(weighted_spin_uncertainty(t, {{"12", b}, {"16", 1 - b}}, p)).epsilon(1e-12));
    }
    CHECK(spin_uncertainty("12", t, p) ==
          doctest::Approx(weighted_spin_uncertainty(t, {{"12", 1.0}}, p)).epsilon(1e-15));
}

TEST_CASE("coefficient file parsing") {
    const auto set = parse_coefficients(testing::coefficient_text());
    REQUIRE(set.size() == 2);
    CHECK(set.at({1, 1}).e(4) == 924568.0);
    CHECK_FALSE(set.at({0, 0}).has(1));
    CHECK_THROWS_AS(parse_coefficients("[v=0,N=0]\nE10 = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_coefficients("[v=0,N=0]\nE4 = abc\n"), ParseError);
    CHECK_THROWS_AS(parse_coefficients("E4 = 1\n"), ParseError);
    CHECK_THROWS_AS(load_coefficients("/nonexistent/coefficients.ini"), ConfigError);
}
