#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"
#include "hdplus/zeeman.hpp"

using namespace hdplus;
using namespace hdplus::zeeman;

namespace {

const angular::LevelStructure& lower() {
    static const auto s = angular::solve_level(testing::lower_coefficients(), testing::dominant());
    return s;
}

const angular::LevelStructure& upper() {
    static const auto s = testing::solve_upper();
    return s;
}

}  // namespace

TEST_CASE("coupling file parsing") {
    const auto c = parse_couplings("# kHz/G\nc_e = 2802.4951\nc_p = -4.2577\nc_d = -0.65359\nc_N = -0.55\n");
    CHECK(c.c_e == 2802.4951);
    CHECK(c.c_n == -0.55);
    CHECK_THROWS_AS(parse_couplings("c_x = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_couplings("c_e = 1\nc_e = 2\n"), ParseError);
    const auto bundled = load_couplings(std::string(HDPLUS_DATA_DIR) + "/zeeman_couplings.txt");
    CHECK(bundled.c_e == default_couplings().c_e);
}

TEST_CASE("Zeeman operator is diagonal in the product basis and rejects negative fields") {
    const angular::ProductBasis basis(1);
    const auto z = zeeman_operator(default_couplings(), basis);
    CHECK((z - Matrix(z.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(build_zeeman(default_couplings(), -0.1, basis), InputError);
}

TEST_CASE("grid validation") {
    const auto c = default_couplings();
    CHECK_THROWS_AS(zeeman_map(upper(), c, {0.05, 0.1, 0.2}), InputError);
    CHECK_THROWS_AS(zeeman_map(upper(), c, {0.0, 0.1, 0.1}), InputError);
}

TEST_CASE("map tracks every substate") {
    const auto m = zeeman_map(upper(), default_couplings(), default_grid());
    CHECK(m.states.size() == 36);
    CHECK(m.min_overlap > 0.99);
    for (const auto& s : m.states) CHECK(s.energies.size() == default_grid().size());
    CHECK_THROWS_AS(m.state({{1, 2, 3}, 4}), LookupError);
}

TEST_CASE("tracking fails loudly when the field reorganizes the levels") {
    CHECK_THROWS_AS(zeeman_map(upper(), default_couplings(), {0.0, 2000.0}), TrackingError);
}

TEST_CASE("stretched line is exactly linear with slope c_N") {
    const auto c = default_couplings();
    const auto ml = zeeman_map(lower(), c, default_grid());
    const auto mu = zeeman_map(upper(), c, default_grid());
    const auto plus = transition_coeffs(ml, mu, {{1, 2, 2}, 2}, {{1, 2, 3}, 3});
    const auto minus = transition_coeffs(ml, mu, {{1, 2, 2}, -2}, {{1, 2, 3}, -3});
    CHECK(plus.linear == doctest::Approx(c.c_n).epsilon(1e-9));
    CHECK(minus.linear == doctest::Approx(-c.c_n).epsilon(1e-9));
    CHECK(std::abs(plus.quadratic) < 1e-6);
    CHECK(plus.b_max == 0.2);
}

TEST_CASE("m_F = 0 lines have no linear term and mirror-symmetric partners") {
    const auto c = default_couplings();
    const auto ml = zeeman_map(lower(), c, default_grid());
    const auto mu = zeeman_map(upper(), c, default_grid());
    for (int f : {1, 3}) {
        const auto t = transition_coeffs(ml, mu, {{1, 2, 2}, 0}, {{1, 2, f}, 0});
        CHECK(t.linear == 0.0);
        CHECK(t.quadratic != 0.0);
    }
    const auto a = transition_coeffs(ml, mu, {{1, 2, 2}, 1}, {{1, 2, 1}, 1});
    const auto b = transition_coeffs(ml, mu, {{1, 2, 2}, -1}, {{1, 2, 1}, -1});
    CHECK(a.linear == doctest::Approx(-b.linear).epsilon(1e-12));
    CHECK(a.quadratic == doctest::Approx(b.quadratic).epsilon(1e-12));
}

TEST_CASE("fitted curvature agrees with second-order perturbation theory") {
    const auto c = default_couplings();
    const std::vector<double> fine = {0.0, 0.005, 0.01, 0.015, 0.02};
    const auto ml = zeeman_map(lower(), c, fine);
    const auto mu = zeeman_map(upper(), c, fine);
    for (int f : {1, 3}) {
        const StateLabel lo{{1, 2, 2}, 0};
        const StateLabel up{{1, 2, f}, 0};
        const auto fit = transition_coeffs(ml, mu, lo, up);
        const double pt = perturbative_shift(upper(), c, up).quadratic - perturbative_shift(lower(), c, lo).quadratic;
        CHECK(fit.quadratic == doctest::Approx(pt).epsilon(1e-4));
        CHECK(perturbative_shift(upper(), c, up).linear == doctest::Approx(0.0));
    }
}

TEST_CASE("zero-field extrapolation recovers a synthetic parabola") {
    std::vector<FieldPoint> pts;
    for (double b : {0.1, 0.2, 0.3, 0.4}) {
        pts.push_back({b, Quantity(1000.0 - 117.0 * b * b, "kHz", {{"exp", 0.1}})});
    }
    const auto fit = extrapolate_to_zero_field(pts);
    CHECK(fit.weighted);
    CHECK(fit.f0.value() == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(fit.curvature == doctest::Approx(-117.0).epsilon(1e-9));
    // Var(f0) = s^2 sum x^2 / (n sum x^2 - (sum x)^2) with x = B^2.
    double sx = 0.0, sxx = 0.0;
    for (const auto& p : pts) {
        sx += p.b_gauss * p.b_gauss;
        sxx += std::pow(p.b_gauss, 4);
    }
    CHECK(fit.f0.u("exp") == doctest::Approx(0.1 * std::sqrt(sxx / (4 * sxx - sx * sx))).epsilon(1e-9));

    for (auto& p : pts) p.f = Quantity(p.f.value());
    CHECK_FALSE(extrapolate_to_zero_field(pts).weighted);

    pts.push_back(pts.back());
    CHECK_THROWS_AS(extrapolate_to_zero_field(pts), SingularFitError);
    CHECK_THROWS_AS(extrapolate_to_zero_field({pts[0], pts[1]}), InputError);
}

TEST_CASE("bundled field scan extrapolates close to its generating curvature") {
    const auto pts = parse_field_points(text_util::read_file(std::string(HDPLUS_DATA_DIR) + "/measurements/line16_bfield.csv"));
    const auto fit = extrapolate_to_zero_field(pts);
    CHECK(std::abs(fit.curvature + 117.0) < 3.0 * fit.u_curvature);
    CHECK_THROWS_AS(parse_field_points("B_gauss,f_khz,u_khz\n0.1,1,-1\n"), ParseError);
}
