#include "hdplus/quantity.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hdplus/errors.hpp"

namespace hdplus {

namespace {

void check_component(const std::string& name, double u) {
    if (!(u >= 0.0) || !std::isfinite(u)) {
        throw InputError("uncertainty component '" + name + "' must be finite and >= 0");
    }
}

}  // namespace

Quantity::Quantity(double value, std::string unit) : value_(value), unit_(std::move(unit)) {}

Quantity::Quantity(double value, std::string unit, std::map<std::string, double> components)
    : value_(value), unit_(std::move(unit)), components_(std::move(components)) {
    for (const auto& [name, u] : components_) check_component(name, u);
}

double Quantity::u(const std::string& name) const {
    auto it = components_.find(name);
    return it == components_.end() ? 0.0 : it->second;
}

Quantity& Quantity::set(const std::string& name, double uncertainty) {
    check_component(name, uncertainty);
    components_[name] = uncertainty;
    return *this;
}

Quantity Quantity::with(const std::string& name, double uncertainty) const {
    Quantity q = *this;
    q.set(name, uncertainty);
    return q;
}

Quantity Quantity::with_value(double value) const {
    Quantity q = *this;
    q.value_ = value;
    return q;
}

double Quantity::total(TotalMode mode) const { return total_uncertainty(*this, mode); }

std::string Quantity::to_string(int decimals) const {
    if (decimals < 0) {
        double smallest = std::numeric_limits<double>::infinity();
        for (const auto& [name, u] : components_) {
            if (u > 0.0) smallest = std::min(smallest, u);
        }
        if (std::isinf(smallest)) {
            decimals = 6;
        } else {
            // two significant digits on the smallest component
            decimals = std::max(0, 1 - static_cast<int>(std::floor(std::log10(smallest))));
        }
    }
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << value_;
    const double scale = std::pow(10.0, decimals);
    for (const auto& [name, u] : components_) {
        os << '(' << std::llround(u * scale) << ")_" << name;
    }
    os << ' ' << unit_;
    return os.str();
}

Quantity combine_linear(const std::vector<std::pair<double, Quantity>>& terms) {
    if (terms.empty()) return Quantity{};
    const std::string& unit = terms.front().second.unit();
    double value = 0.0;
    std::map<std::string, double> sq;
    for (const auto& [coeff, q] : terms) {
        if (q.unit() != unit) {
            throw InputError("combine_linear: unit mismatch '" + q.unit() + "' vs '" + unit + "'");
        }
        value += coeff * q.value();
        for (const auto& [name, u] : q.components()) {
            const double c = coeff * u;
            sq[name] += c * c;
        }
    }
    std::map<std::string, double> comps;
    for (const auto& [name, s] : sq) comps[name] = std::sqrt(s);
    return Quantity(value, unit, std::move(comps));
}

double total_uncertainty(const Quantity& q, TotalMode mode) {
    double acc = 0.0;
    for (const auto& [name, u] : q.components()) {
        acc += mode == TotalMode::quadrature ? u * u : u;
    }
    return mode == TotalMode::quadrature ? std::sqrt(acc) : acc;
}

void to_json(nlohmann::json& j, const Quantity& q) {
    j = nlohmann::json{{"value", q.value()}, {"unit", q.unit()}, {"components", q.components()}};
}

void from_json(const nlohmann::json& j, Quantity& q) {
    std::map<std::string, double> comps;
    if (j.contains("components")) comps = j.at("components").get<std::map<std::string, double>>();
    q = Quantity(j.at("value").get<double>(), j.value("unit", std::string("kHz")), std::move(comps));
}

}  // namespace hdplus
