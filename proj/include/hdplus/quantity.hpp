#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace hdplus {

// Reserved uncertainty component names. Any other name (conventionally
// "other:<tag>") passes through the algebra untouched.
namespace component {
inline constexpr const char* exp = "exp";
inline constexpr const char* theor_qed = "theor_QED";
inline constexpr const char* theor_spin = "theor_spin";
inline constexpr const char* codata = "CODATA";
}  // namespace component

enum class TotalMode { quadrature, absolute_sum };

/// A value carrying separately tracked, named, non-negative uncertainty
/// components. Frequencies use kHz as the canonical unit.
class Quantity {
public:
    Quantity() = default;
    explicit Quantity(double value, std::string unit = "kHz");
    Quantity(double value, std::string unit, std::map<std::string, double> components);

    double value() const { return value_; }
    const std::string& unit() const { return unit_; }
    const std::map<std::string, double>& components() const { return components_; }

    /// Component value, 0 when absent.
    double u(const std::string& name) const;
    bool has(const std::string& name) const { return components_.count(name) != 0; }

    Quantity& set(const std::string& name, double uncertainty);
    Quantity with(const std::string& name, double uncertainty) const;
    Quantity with_value(double value) const;

    double total(TotalMode mode = TotalMode::quadrature) const;

    /// Renders e.g. "58605052164.24(16)_exp(85)_theor_spin kHz". When
    /// decimals < 0 the precision is chosen so that the smallest nonzero
    /// component shows two digits.
    std::string to_string(int decimals = -1) const;

    friend bool operator==(const Quantity&, const Quantity&) = default;

private:
    double value_ = 0.0;
    std::string unit_ = "kHz";
    std::map<std::string, double> components_;
};

/// value = sum coeff_i * value_i; each component combined in quadrature
/// across terms. Throws InputError on unit mismatch.
Quantity combine_linear(const std::vector<std::pair<double, Quantity>>& terms);

double total_uncertainty(const Quantity& q, TotalMode mode);

void to_json(nlohmann::json& j, const Quantity& q);
void from_json(const nlohmann::json& j, Quantity& q);

}  // namespace hdplus
