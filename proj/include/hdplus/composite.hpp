#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hdplus/angular.hpp"
#include "hdplus/quantity.hpp"

namespace hdplus::composite {

struct CompositeInput {
    Quantity f12;      // corrected experimental frequencies, exp component
    Quantity f16;
    Quantity fspin12;  // theoretical spin frequencies, theor_spin component
    Quantity fspin16;
    /// Sensitivities and coefficients; when absent the spin uncertainty of
    /// the composite falls back to |b| u(fspin12) + |1 - b| u(fspin16).
    std::optional<angular::SensitivityTable> tables;
    angular::SpinUncertaintyParams params;
};

struct CompositeOptions {
    /// Part of the exp uncertainty shared by both lines (kHz). It adds
    /// linearly across the two lines instead of in quadrature.
    double shared_exp = 0.0;
};

/// b (f12 - fspin12) + (1 - b)(f16 - fspin16) with components exp and
/// theor_spin. Throws InputError for b outside [0, 1].
Quantity composite_frequency(const CompositeInput& in, double b12, const CompositeOptions& opts = {});

/// Spin-theory uncertainty of the composite with weights (b, 1 - b) on
/// lines 12 and 16.
double composite_spin_uncertainty(const angular::SensitivityTable& tables,
                                  const angular::SpinUncertaintyParams& params, double b12);

struct WeightOptimum {
    double b_star = 0.5;
    double u_star = 0.0;
    std::vector<std::pair<double, double>> profile;  // (b12, u) on the 0.01 grid
};

/// Grid scan over b12 in {0, 0.01, ..., 1} plus exact evaluation at every
/// breakpoint of the piecewise-linear objective. Ties go to the b closest
/// to 0.5.
WeightOptimum optimize_weight(const angular::SensitivityTable& tables,
                              const angular::SpinUncertaintyParams& params);

/// Same scan for the fallback model without tables.
WeightOptimum optimize_weight(const CompositeInput& in);

/// Weight minimizing the exp component: u16^2 / (u12^2 + u16^2).
double exp_optimal_weight(const CompositeInput& in);

struct SplittingComparison {
    Quantity experiment;  // f16 - f12
    double theory = 0.0;
    double u_theory = 0.0;
    double u_experiment = 0.0;
    double metric = 0.0;  // |diff| / combined sigma
};

SplittingComparison splitting_comparison(const Quantity& f12, const Quantity& f16,
                                         double theory_khz, double u_theory_khz);

void to_json(nlohmann::json& j, const SplittingComparison& s);

/// {b12, value_khz, u_exp_khz, u_spin_khz, profile[]}.
nlohmann::json composite_report(const Quantity& value, double b12, const WeightOptimum& opt);

}  // namespace hdplus::composite
