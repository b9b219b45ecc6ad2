#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdplus/quantity.hpp"

namespace hdplus::lineshape {

struct DecayRecord {
    double detuning_khz = 0.0;
    std::string run_id;
    bool laser_on = false;
    double depletion = 0.0;  // fractional loss of intact ions, in [0, 1]
};

struct SpectrumPoint {
    double detuning_khz = 0.0;
    double signal = 0.0;
    /// Standard error of the difference; empty when either class has a
    /// single record.
    std::optional<double> sem;
};

/// Background-subtracted spectrum, one point per distinct detuning, sorted.
/// Throws InputError when a detuning lacks laser-on or background records.
std::vector<SpectrumPoint> build_spectrum(const std::vector<DecayRecord>& records);

/// CSV columns detuning_khz, run_id, laser_on (0|1), depletion.
std::vector<DecayRecord> parse_decay_records(const std::string& csv_text);
/// CSV columns detuning_khz, signal, sem (empty sem allowed).
std::vector<SpectrumPoint> parse_spectrum(const std::string& csv_text);
std::string spectrum_csv(const std::vector<SpectrumPoint>& points);

struct LineFit {
    double center = 0.0;     // kHz
    double fwhm = 0.0;       // kHz
    double amplitude = 0.0;  // >= 0, sign carried by polarity
    double offset = 0.0;
    int polarity = +1;       // -1 for dips
    /// Order: center, fwhm, amplitude, offset.
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    double chi_square = 0.0;
    double residual_norm = 0.0;
    int dof = 0;
    int iterations = 0;
    bool converged = false;
    bool weighted = false;
    std::vector<double> cost_trace;  // accepted iterations

    double sigma(int i) const { return std::sqrt(covariance(i, i)); }
};

/// offset + polarity * amplitude * (G^2/4) / ((d - d0)^2 + G^2/4)
double lorentzian(double detuning, const LineFit& p);

struct FitOptions {
    int max_iterations = 200;
    double initial_damping = 1e-3;
    double cost_tolerance = 1e-12;  // relative cost change
    double step_tolerance = 1e-10;
    double low_signal_sigmas = 2.0;
};

/// Damped Gauss-Newton fit minimizing inverse-variance weighted residuals
/// (unit weights unless every point has sem > 0). Throws InputError for
/// fewer than 5 points, FitError on non-convergence and LowSignalError for
/// flat data or |A| < 2 sigma_A.
LineFit fit_lorentzian(const std::vector<SpectrumPoint>& points,
                       const std::optional<LineFit>& init = std::nullopt,
                       const FitOptions& opts = {});

/// Starting values: extremal point, half the span, max - min, median of the
/// outer quartiles.
LineFit initial_guess(const std::vector<SpectrumPoint>& points);

/// absolute_offset + center, with exp = fwhm / 2.
Quantity line_frequency(const LineFit& fit, double absolute_offset_khz);

/// f / FWHM.
double resolution(double frequency_khz, double fwhm_khz);

void to_json(nlohmann::json& j, const LineFit& f);

}  // namespace hdplus::lineshape
