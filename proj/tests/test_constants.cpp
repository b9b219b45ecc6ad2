#include <cmath>

#include "doctest.h"
#include "hdplus/constants.hpp"
#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

using namespace hdplus;
using namespace hdplus::constants;

namespace {

const std::string data = HDPLUS_DATA_DIR;

ContributionTable bundled_table() { return parse_contributions(text_util::read_file(data + "/contributions.csv")); }

ScalingModel model(const std::string& profile) {
    return make_model(bundled_table(), load_constants(profile_path(data, "codata2018")),
                      load_constants(profile_path(data, profile)));
}

}  // namespace

TEST_CASE("constant file syntax") {
    const auto s = parse_constants("a = 1.5 ± 0.1 # src\nb = 2 +/- 0.2\nc = 3\n");
    CHECK(s.at("a").value == 1.5);
    CHECK(s.at("a").uncertainty == 0.1);
    CHECK(s.at("a").source == "src");
    CHECK(s.at("b").uncertainty == 0.2);
    CHECK(s.at("c").uncertainty == 0.0);
    CHECK_THROWS_AS(s.at("d"), ConfigError);
    CHECK_THROWS_AS(parse_constants("a = 1\na = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_constants("a = x\n"), ParseError);
    CHECK_THROWS_AS(profile_path(data, "codata2022"), ConfigError);
}

TEST_CASE("reduced mass ratio") {
    const double mp = 1836.15267343, r = 1.99900750139;
    const double md = mp * r;
    CHECK(reduced_mass_ratio(mp, r) == doctest::Approx(mp * md / (mp + md)).epsilon(1e-15));
    const auto m = mean_of({1.0, 3e-11, "a"}, {2.0, 4e-11, "b"}, "mean");
    CHECK(m.value == 1.5);
    CHECK(m.uncertainty == doctest::Approx(2.5e-11));
}

TEST_CASE("theory sum from the contribution list") {
    const double direct = 58604301249.69 + 1003554.55 - 250978.39 - 1770.95 + 109.52 - 0.77 + 0.26;
    const auto f = theory_frequency(bundled_table());
    CHECK(f.value() == doctest::Approx(direct).epsilon(1e-15));
    CHECK(std::abs(f.value() - 58605052163.9) < 0.05);
    CHECK(f.u("theor_QED") == 0.5);
    CHECK(f.u("CODATA") == 1.3);
    CHECK_THROWS_AS(theory_frequency(parse_contributions("name,value_khz,u_khz,bookkeeping\nalpha0,1,,0\n")), InputError);
    CHECK_THROWS_AS(parse_contributions("name,value_khz,u_khz,bookkeeping\nalpha0,1,,2\n"), ParseError);
}

TEST_CASE("scaling is a power law in the mass ratio") {
    const auto m = model("codata2018");
    const double delta = -5.28e-11;
    const double shift = scaled_theory(m, m.mu_p_ref * (1 + delta)) - m.f_ref;
    CHECK(shift == doctest::Approx(m.f_ref * m.beta * delta).epsilon(1e-6));
    CHECK(std::abs(shift - 1.50) < 0.02);
    CHECK_THROWS_AS(scaled_theory(m, m.mu_p_ref * 1.001), InputError);
}

TEST_CASE("extraction inverts the scaling") {
    const auto m = model("codata2018");
    for (double d : {-3e-9, 0.0, 2e-9}) {
        const double mu = m.mu_ref() * (1 + d);
        const Quantity f(scaled_theory_mu(m, mu), "kHz", {{"exp", 0.16}, {"theor_spin", 0.85}});
        CHECK(extract_mu_over_me(f, m).value.value() == doctest::Approx(mu).epsilon(1e-15));
    }
}

TEST_CASE("extraction budget follows dmu/mu = df / (beta f)") {
    const auto m = model("codata2018");
    const Quantity f(58605052164.255, "kHz", {{"exp", 0.161}, {"theor_spin", 0.85}});
    const auto r = extract_mu_over_me(f, m);
    const double mu = r.value.value();
    const double k = mu / (std::abs(m.beta) * f.value());
    CHECK(r.value.u("exp") == doctest::Approx(k * 0.161));
    CHECK(r.value.u("theor_QED") == doctest::Approx(k * 0.5));
    CHECK(r.value.u("theor_spin") == doctest::Approx(k * 0.85));
    CHECK(r.value.u("CODATA") == doctest::Approx(k * 0.07));
    CHECK(r.value.unit().empty());

    const Constant rr{1.9990075012475, 3.4e-11, "mean"};
    const auto p = extract_mp_over_me(f, m, rr);
    CHECK(p.value.value() == doctest::Approx(mu * (1 + rr.value) / rr.value).epsilon(1e-15));
    const double g = (1 + rr.value) / rr.value;
    CHECK(p.value.u("exp") == doctest::Approx(g * r.value.u("exp")));
    CHECK(p.value.u("CODATA") ==
          doctest::Approx(std::hypot(g * r.value.u("CODATA"), mu / (rr.value * rr.value) * rr.uncertainty)));
}

TEST_CASE("Penning profile rescales the reference frequency") {
    const auto a = model("codata2018");
    const auto b = model("penning");
    CHECK(b.mu_p_ref == 1836.152673374);
    CHECK(b.u_codata == 1.1);
    CHECK(b.f_ref - a.f_ref == doctest::Approx(a.f_ref * a.beta * std::log(b.mu_ref() / a.mu_ref())).epsilon(1e-6));
}

TEST_CASE("comparison pulls") {
    const auto dets = parse_determinations(text_util::read_file(data + "/determinations.csv"));
    REQUIRE(dets.size() == 4);
    const auto own = comparison_report(dets, 0, PullMode::own);
    const auto comb = comparison_report(dets, 0, PullMode::combined);
    CHECK(own[0].pull == 0.0);
    CHECK(own[1].pull == doctest::Approx((1836.152673374 - 1836.15267343) / 0.000000078));
    CHECK(comb[1].pull == doctest::Approx((1836.152673374 - 1836.15267343) / std::hypot(7.8e-8, 1.1e-7)));
    CHECK(std::abs(comb[2].pull) < std::abs(own[2].pull));
    CHECK_THROWS_AS(comparison_report(dets, 9), InputError);
    CHECK(comparison_csv(own).rfind("label,value,u,pull\n", 0) == 0);
}
