#include <random>

#include "doctest.h"
#include "hdplus/errors.hpp"
#include "hdplus/quantity.hpp"

using namespace hdplus;

namespace {

Quantity random_quantity(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> v(-1e3, 1e3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Quantity q(v(rng));
    q.set(component::exp, u(rng)).set(component::theor_spin, u(rng));
    if (u(rng) > 1.0) q.set("other:drift", u(rng));
    return q;
}

}  // namespace

TEST_CASE("components are validated") {
    CHECK_THROWS_AS(Quantity(1.0, "kHz", {{"exp", -0.1}}), InputError);
    CHECK_THROWS_AS(Quantity(1.0).with("exp", std::nan("")), InputError);
    Quantity q(5.0);
    CHECK(q.u("exp") == 0.0);
    CHECK_FALSE(q.has("exp"));
}

TEST_CASE("quadrature total never exceeds the absolute sum") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto q = random_quantity(rng);
        CHECK(q.total(TotalMode::quadrature) <= q.total(TotalMode::absolute_sum) * (1 + 1e-15));
    }
    const Quantity q(0.0, "kHz", {{"a", 3.0}, {"b", 4.0}});
    CHECK(q.total() == doctest::Approx(5.0));
    CHECK(q.total(TotalMode::absolute_sum) == 7.0);
}

TEST_CASE("combine_linear is associative up to rounding") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_quantity(rng);
        const auto b = random_quantity(rng);
        const auto d = random_quantity(rng);
        const double ca = c(rng), cb = c(rng), cd = c(rng);
        const auto flat = combine_linear({{ca, a}, {cb, b}, {cd, d}});
        const auto left = combine_linear({{1.0, combine_linear({{ca, a}, {cb, b}})}, {cd, d}});
        const auto right = combine_linear({{ca, a}, {1.0, combine_linear({{cb, b}, {cd, d}})}});
        for (const auto* q : {&left, &right}) {
            CHECK(q->value() == doctest::Approx(flat.value()).epsilon(1e-12));
            REQUIRE(q->components().size() == flat.components().size());
            for (const auto& [name, u] : flat.components()) {
                CHECK(q->u(name) == doctest::Approx(u).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("combine_linear keeps components separate and rejects unit mismatch") {
    const Quantity a(10.0, "kHz", {{"exp", 0.3}});
    const Quantity b(4.0, "kHz", {{"exp", 0.4}, {"theor_spin", 1.0}});
    const auto d = combine_linear({{1.0, a}, {-1.0, b}});
    CHECK(d.value() == 6.0);
    CHECK(d.u("exp") == doctest::Approx(0.5));
    CHECK(d.u("theor_spin") == 1.0);
    CHECK_THROWS_AS(combine_linear({{1.0, a}, {1.0, Quantity(1.0, "Hz")}}), InputError);
}

TEST_CASE("JSON roundtrip is lossless") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto q = random_quantity(rng);
        const auto text = nlohmann::json(q).dump();
        const auto back = nlohmann::json::parse(text).get<Quantity>();
        CHECK(back == q);
        CHECK(nlohmann::json(back).dump() == text);
    }
}

TEST_CASE("to_string shows two digits of the smallest component") {
    const Quantity q(58605052164.24, "kHz", {{"exp", 0.16}, {"theor_spin", 0.85}});
    CHECK(q.to_string() == "58605052164.24(16)_exp(85)_theor_spin kHz");
    CHECK(q.to_string(3) == "58605052164.240(160)_exp(850)_theor_spin kHz");
}
