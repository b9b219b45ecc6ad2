#include "hdplus/composite.hpp"

#include <algorithm>
#include <cmath>

#include "hdplus/errors.hpp"

namespace hdplus::composite {

namespace {

void check_weight(double b) {
    if (!(b >= 0.0 && b <= 1.0)) throw InputError("b12 must lie in [0, 1]");
}

double fallback_spin(const CompositeInput& in, double b) {
    return std::abs(b) * in.fspin12.u(component::theor_spin) +
           std::abs(1.0 - b) * in.fspin16.u(component::theor_spin);
}

// Objective as a sum of |b t12 + (1 - b) t16| terms.
using Terms = std::vector<std::pair<double, double>>;

Terms terms_of(const angular::SensitivityTable& tables, const angular::SpinUncertaintyParams& params) {
    Terms out;
    for (const auto& t : angular::spin_uncertainty_terms(tables, {"12", "16"}, params)) {
        out.emplace_back(t.slope[0], t.slope[1]);
    }
    return out;
}

Terms terms_of(const CompositeInput& in) {
    return {{in.fspin12.u(component::theor_spin), 0.0}, {0.0, in.fspin16.u(component::theor_spin)}};
}

double evaluate(const Terms& terms, double b) {
    double u = 0.0;
    for (const auto& [t12, t16] : terms) u += std::abs(b * t12 + (1.0 - b) * t16);
    return u;
}

WeightOptimum scan(const Terms& terms) {
    WeightOptimum opt;
    std::vector<double> candidates;
    for (int i = 0; i <= 100; ++i) {
        const double b = i / 100.0;
        opt.profile.emplace_back(b, evaluate(terms, b));
        candidates.push_back(b);
    }
    for (const auto& [t12, t16] : terms) {
        if (t12 == t16) continue;
        const double b = t16 / (t16 - t12);
        if (b > 0.0 && b < 1.0) candidates.push_back(b);
    }
    opt.u_star = evaluate(terms, opt.b_star);
    bool first = true;
    for (double b : candidates) {
        const double u = evaluate(terms, b);
        const bool better = u < opt.u_star - 1e-15 * std::max(1.0, opt.u_star);
        const bool tie = !better && std::abs(u - opt.u_star) <= 1e-15 * std::max(1.0, opt.u_star);
        if (first || better || (tie && std::abs(b - 0.5) < std::abs(opt.b_star - 0.5))) {
            opt.b_star = b;
            opt.u_star = u;
            first = false;
        }
    }
    return opt;
}

}  // namespace

double composite_spin_uncertainty(const angular::SensitivityTable& tables,
                                  const angular::SpinUncertaintyParams& params, double b12) {
    check_weight(b12);
    return evaluate(terms_of(tables, params), b12);
}

Quantity composite_frequency(const CompositeInput& in, double b12, const CompositeOptions& opts) {
    check_weight(b12);
    const double b16 = 1.0 - b12;
    if (in.f12.unit() != in.f16.unit()) throw InputError("composite: unit mismatch");
    const double value =
        b12 * (in.f12.value() - in.fspin12.value()) + b16 * (in.f16.value() - in.fspin16.value());

    const double u12 = in.f12.u(component::exp);
    const double u16 = in.f16.u(component::exp);
    const double s = opts.shared_exp;
    if (!(s >= 0.0) || s > u12 || s > u16) {
        throw InputError("shared exp uncertainty must lie in [0, min(u12, u16)]");
    }
    const double var = b12 * b12 * (u12 * u12 - s * s) + b16 * b16 * (u16 * u16 - s * s) +
                       (b12 + b16) * (b12 + b16) * s * s;

    const double spin = in.tables ? composite_spin_uncertainty(*in.tables, in.params, b12)
                                  : fallback_spin(in, b12);
    return Quantity(value, in.f12.unit(),
                    {{component::exp, std::sqrt(var)}, {component::theor_spin, spin}});
}

WeightOptimum optimize_weight(const angular::SensitivityTable& tables,
                              const angular::SpinUncertaintyParams& params) {
    return scan(terms_of(tables, params));
}

WeightOptimum optimize_weight(const CompositeInput& in) {
    return in.tables ? optimize_weight(*in.tables, in.params) : scan(terms_of(in));
}

double exp_optimal_weight(const CompositeInput& in) {
    const double a = in.f12.u(component::exp);
    const double b = in.f16.u(component::exp);
    if (a == 0.0 && b == 0.0) return 0.5;
    return b * b / (a * a + b * b);
}

SplittingComparison splitting_comparison(const Quantity& f12, const Quantity& f16,
                                         double theory_khz, double u_theory_khz) {
    if (!(u_theory_khz >= 0.0)) throw InputError("theory uncertainty must be >= 0");
    SplittingComparison s;
    s.experiment = combine_linear({{-1.0, f12}, {1.0, f16}});
    s.theory = theory_khz;
    s.u_theory = u_theory_khz;
    s.u_experiment = s.experiment.total(TotalMode::quadrature);
    const double sigma = std::hypot(s.u_experiment, u_theory_khz);
    const double diff = std::abs(s.experiment.value() - theory_khz);
    s.metric = sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : INFINITY);
    return s;
}

void to_json(nlohmann::json& j, const SplittingComparison& s) {
    j = nlohmann::json{{"experiment", s.experiment},     {"u_experiment_khz", s.u_experiment},
                       {"theory_khz", s.theory},         {"u_theory_khz", s.u_theory},
                       {"agreement_sigma", s.metric}};
}

nlohmann::json composite_report(const Quantity& value, double b12, const WeightOptimum& opt) {
    nlohmann::json profile = nlohmann::json::array();
    for (const auto& [b, u] : opt.profile) profile.push_back({{"b12", b}, {"u_spin_khz", u}});
    return nlohmann::json{{"b12", b12},
                          {"value_khz", value.value()},
                          {"u_exp_khz", value.u(component::exp)},
                          {"u_spin_khz", value.u(component::theor_spin)},
                          {"b_star", opt.b_star},
                          {"u_spin_min_khz", opt.u_star},
                          {"profile", profile}};
}

}  // namespace hdplus::composite
