#pragma once

// Zeeman structure of a single (v, N) level in a static field along z.

#include <string>
#include <vector>

#include "hdplus/angular.hpp"
#include "hdplus/quantity.hpp"

namespace hdplus::zeeman {

using angular::Matrix;

/// Linear couplings in kHz/G multiplying B*s_ez, B*I_pz, B*I_dz and B*N_z.
struct ZeemanCouplings {
    double c_e = 0.0;
    double c_p = 0.0;
    double c_d = 0.0;
    double c_n = 0.0;

    void validate() const;
};

/// Free-electron, proton and deuteron moments plus the rotational term.
ZeemanCouplings default_couplings();

/// Key-value text with keys c_e, c_p, c_d, c_N. Missing keys keep the default.
ZeemanCouplings parse_couplings(const std::string& text);
ZeemanCouplings load_couplings(const std::string& path);

/// Zeeman operator per gauss (kHz/G).
Matrix zeeman_operator(const ZeemanCouplings& c, const angular::ProductBasis& basis);

/// B * zeeman_operator. Throws InputError for B < 0 or non-finite B.
Matrix build_zeeman(const ZeemanCouplings& c, double b_gauss, const angular::ProductBasis& basis);

struct StateLabel {
    angular::SpinLabel level;
    int m_f = 0;
    friend auto operator<=>(const StateLabel&, const StateLabel&) = default;
};

std::string to_string(const StateLabel& s);

struct TrackedState {
    StateLabel label;
    std::vector<double> energies;  // kHz, one per grid point
};

struct ZeemanMap {
    std::vector<double> fields;  // G
    std::vector<TrackedState> states;
    double min_overlap = 1.0;

    /// Throws LookupError when the state is not in the map.
    const TrackedState& state(const StateLabel& label) const;
};

struct MapOptions {
    double min_overlap = 0.9;
};

/// Adiabatic map over a field grid starting at 0. States are followed per
/// m_F block by maximal eigenvector overlap. Throws TrackingError naming
/// the field where the overlap drops to the threshold or below.
ZeemanMap zeeman_map(const angular::LevelStructure& level, const ZeemanCouplings& c,
                     const std::vector<double>& grid, const MapOptions& opts = {});

/// {0, 0.05, 0.1, 0.15, 0.2} G.
std::vector<double> default_grid();

struct TransitionZeemanModel {
    double linear = 0.0;     // kHz/G
    double quadratic = 0.0;  // kHz/G^2
    double b_max = 0.0;      // G
};

/// Least-squares fit of df(B) = a B + c B^2 to the tracked transition
/// frequency shift. Needs at least 3 grid points shared by both maps.
TransitionZeemanModel transition_coeffs(const ZeemanMap& lower_map, const ZeemanMap& upper_map,
                                        const StateLabel& lower, const StateLabel& upper);

/// Second-order perturbation theory for one field-free substate:
/// linear = <s|Z|s>, quadratic = sum_n |<n|Z|s>|^2 / (E_s - E_n).
struct PerturbativeShift {
    double linear = 0.0;
    double quadratic = 0.0;
};

PerturbativeShift perturbative_shift(const angular::LevelStructure& level, const ZeemanCouplings& c,
                                     const StateLabel& state);

// ---------------------------------------------------------------------------
// Zero-field extrapolation

struct FieldPoint {
    double b_gauss = 0.0;
    Quantity f;
};

struct ZeroFieldFit {
    Quantity f0;                // exp component from the fit covariance
    double curvature = 0.0;     // kHz/G^2
    double u_curvature = 0.0;
    bool weighted = false;
};

/// Least squares of f = f0 + c B^2. Inverse-variance weights come from the
/// exp components when every point has one > 0; otherwise unweighted.
ZeroFieldFit extrapolate_to_zero_field(const std::vector<FieldPoint>& points);

/// CSV with columns B_gauss, f_khz, u_khz.
std::vector<FieldPoint> parse_field_points(const std::string& csv_text);

}  // namespace hdplus::zeeman
