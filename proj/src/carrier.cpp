#include "hdplus/carrier.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::carrier {

void CarrierModel::validate() const {
    if (!(delta_rho_um > 0.0) || !std::isfinite(delta_rho_um)) {
        throw InputError("radial spread must be positive");
    }
}

double critical_wavelength(double delta_rho_um) {
    CarrierModel{delta_rho_um}.validate();
    return 2.0 * std::numbers::pi * delta_rho_um;
}

double carrier_strength(double lambda_um, const CarrierModel& model) {
    model.validate();
    if (!(lambda_um > 0.0)) throw InputError("wavelength must be positive");
    const double q = critical_wavelength(model.delta_rho_um) / lambda_um;
    return std::exp(-std::numbers::ln2 * q * q);
}

std::vector<std::pair<double, double>> carrier_sweep(const CarrierModel& model, double lambda_min_um,
                                                     double lambda_max_um, int points) {
    if (!(lambda_min_um > 0.0) || !(lambda_max_um > lambda_min_um) || points < 2) {
        throw InputError("sweep needs 0 < lambda_min < lambda_max and at least 2 points");
    }
    std::vector<std::pair<double, double>> out;
    const double lo = std::log10(lambda_min_um);
    const double hi = std::log10(lambda_max_um);
    for (int i = 0; i < points; ++i) {
        const double l = i == points - 1 ? lambda_max_um : std::pow(10.0, lo + (hi - lo) * i / (points - 1));
        out.emplace_back(l, carrier_strength(l, model));
    }
    return out;
}

std::string sweep_csv(const std::vector<std::pair<double, double>>& sweep) {
    std::ostringstream os;
    os << "lambda_um,strength\n";
    for (const auto& [l, s] : sweep) os << text_util::format_double(l) << ',' << text_util::format_double(s) << '\n';
    return os.str();
}

}  // namespace hdplus::carrier
