#pragma once

#include <string>
#include <utility>
#include <vector>

namespace hdplus::carrier {

/// Gaussian Debye-Waller model S = exp(-kappa (lambda_c / lambda)^2) with
/// lambda_c = 2 pi delta_rho and kappa = ln 2, so that S(lambda_c) = 1/2.
struct CarrierModel {
    double delta_rho_um = 0.0;

    void validate() const;
};

/// 2 pi delta_rho in um. Throws InputError for delta_rho <= 0.
double critical_wavelength(double delta_rho_um);

double carrier_strength(double lambda_um, const CarrierModel& model);

/// (lambda, S) pairs on a logarithmic grid.
std::vector<std::pair<double, double>> carrier_sweep(const CarrierModel& model, double lambda_min_um,
                                                     double lambda_max_um, int points);

std::string sweep_csv(const std::vector<std::pair<double, double>>& sweep);

}  // namespace hdplus::carrier
