#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hdplus/quantity.hpp"

namespace hdplus::systematics {

enum class ShiftBasis { measured_extrapolation, theoretical_bound, set_to_zero };

std::string to_string(ShiftBasis b);
ShiftBasis parse_basis(const std::string& s);

struct ShiftEntry {
    std::string name;
    double correction = 0.0;   // kHz, added to the raw frequency
    double uncertainty = 0.0;  // kHz
    ShiftBasis basis = ShiftBasis::set_to_zero;
    std::string note;

    /// Throws InputError for negative/non-finite uncertainty or a nonzero
    /// correction on a set-to-zero entry.
    void validate() const;
};

// ---------------------------------------------------------------------------
// RF amplitude extrapolation

struct AmplitudePoint {
    double amplitude = 0.0;  // arbitrary units
    Quantity f;
};

enum class RfModel { quadratic, linear };

struct RfExtrapolation {
    Quantity f_zero;  // exp from the fit covariance
    double slope = 0.0;    // kHz per A^2 (or per A for the linear model)
    double u_slope = 0.0;
    double nominal_amplitude = 0.0;
    ShiftEntry entry;      // correction = f0 - f(nominal)
};

/// Least squares of f = f0 + k A^2 (or k A). The nominal amplitude
/// defaults to the largest measured one.
RfExtrapolation rf_extrapolate(const std::vector<AmplitudePoint>& points,
                               std::optional<double> nominal_amplitude = std::nullopt,
                               RfModel model = RfModel::quadratic);

/// CSV columns amplitude, f_khz, u_khz.
std::vector<AmplitudePoint> parse_amplitude_points(const std::string& csv_text);

// ---------------------------------------------------------------------------
// Light shift

inline constexpr double atomic_unit_polarizability = 1.64877727436e-41;  // C m^2 / V

/// Frequency shift in kHz of a polarizability difference (atomic units) at
/// intensity I (W/m^2): delta_alpha * I / (2 eps0 c h).
double light_shift_khz(double delta_alpha_au, double intensity_w_m2);

struct LightShiftInput {
    double alpha_s_upper = 4.475;   // a.u.
    double alpha_t_upper = -1.442;  // a.u.
    double alpha_lower = 0.0;       // a.u.
    double intensity_w_m2 = 0.0;
    double measured_bound_khz = 0.2;
};

/// Set-to-zero entry. The polarizability difference is bounded by
/// |alpha_s' - alpha| + |alpha_t'|; its shift becomes the uncertainty unless
/// it is below 1e-3 kHz. The note records the estimate and the measured bound.
ShiftEntry light_shift_entry(const LightShiftInput& in);

/// Black-body and electric-quadrupole entries plus the trap-displacement note.
std::vector<ShiftEntry> mandatory_entries();

// ---------------------------------------------------------------------------
// Ledger

struct ShiftLedger {
    Quantity raw;
    std::vector<ShiftEntry> entries;
    Quantity corrected;
};

/// corrected = raw + sum of corrections; exp combines raw exp and the entry
/// uncertainties in quadrature. Throws InputError on duplicate names.
ShiftLedger apply_ledger(const Quantity& raw, const std::vector<ShiftEntry>& entries);

void to_json(nlohmann::json& j, const ShiftEntry& e);
void from_json(const nlohmann::json& j, ShiftEntry& e);
void to_json(nlohmann::json& j, const ShiftLedger& l);

}  // namespace hdplus::systematics
