#include "hdplus/systematics.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/fitting.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::systematics {

std::string to_string(ShiftBasis b) {
    switch (b) {
        case ShiftBasis::measured_extrapolation: return "measured-extrapolation";
        case ShiftBasis::theoretical_bound: return "theoretical-bound";
        case ShiftBasis::set_to_zero: return "set-to-zero";
    }
    return "set-to-zero";
}

ShiftBasis parse_basis(const std::string& s) {
    if (s == "measured-extrapolation") return ShiftBasis::measured_extrapolation;
    if (s == "theoretical-bound") return ShiftBasis::theoretical_bound;
    if (s == "set-to-zero") return ShiftBasis::set_to_zero;
    throw ParseError("unknown shift basis '" + s + "'");
}

void ShiftEntry::validate() const {
    if (name.empty()) throw InputError("shift entry without a name");
    if (!std::isfinite(correction)) throw InputError("shift '" + name + "': non-finite correction");
    if (!(uncertainty >= 0.0) || !std::isfinite(uncertainty)) {
        throw InputError("shift '" + name + "': uncertainty must be finite and >= 0");
    }
    if (basis == ShiftBasis::set_to_zero && correction != 0.0) {
        throw InputError("shift '" + name + "': set-to-zero entry with nonzero correction");
    }
}

RfExtrapolation rf_extrapolate(const std::vector<AmplitudePoint>& points,
                               std::optional<double> nominal_amplitude, RfModel model) {
    if (points.size() < 3) throw InputError("RF extrapolation needs at least 3 points");
    std::set<double> seen;
    bool weighted = true;
    double a_max = 0.0;
    const std::string& unit = points.front().f.unit();
    for (const auto& p : points) {
        if (!std::isfinite(p.amplitude) || p.amplitude < 0.0) {
            throw InputError("RF amplitudes must be finite and >= 0");
        }
        if (!seen.insert(p.amplitude).second) {
            throw SingularFitError("duplicate RF amplitude " + text_util::format_double(p.amplitude));
        }
        if (p.f.unit() != unit) throw InputError("RF extrapolation: unit mismatch");
        if (!(p.f.u(component::exp) > 0.0)) weighted = false;
        a_max = std::max(a_max, p.amplitude);
    }
    const double a_nom = nominal_amplitude.value_or(a_max);
    if (!std::isfinite(a_nom) || a_nom < 0.0) throw InputError("nominal amplitude must be >= 0");
    const auto regressor = [model](double a) { return model == RfModel::quadratic ? a * a : a; };

    const double ref = points.front().f.value();
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = regressor(p.amplitude);
        y(i) = p.f.value() - ref;
        const double u = p.f.u(component::exp);
        w(i) = weighted ? 1.0 / (u * u) : 1.0;
    }
    const auto fit = fitting::linear_least_squares(
        design, y, weighted ? std::optional<Eigen::VectorXd>(w) : std::nullopt);

    RfExtrapolation out;
    out.f_zero = Quantity(ref + fit.params(0), unit, {{component::exp, std::sqrt(fit.covariance(0, 0))}});
    out.slope = fit.params(1);
    out.u_slope = std::sqrt(fit.covariance(1, 1));
    out.nominal_amplitude = a_nom;
    const double x_nom = regressor(a_nom);
    out.entry.name = "rf_amplitude";
    out.entry.correction = -out.slope * x_nom;
    out.entry.uncertainty = out.u_slope * x_nom;
    out.entry.basis = ShiftBasis::measured_extrapolation;
    out.entry.note = std::string("extrapolation to zero RF amplitude, ") +
                     (model == RfModel::quadratic ? "f0 + k A^2" : "f0 + k A") +
                     " model, nominal A = " + text_util::format_double(a_nom);
    return out;
}

std::vector<AmplitudePoint> parse_amplitude_points(const std::string& csv_text) {
    const auto t = text_util::parse_csv(csv_text, {"amplitude", "f_khz", "u_khz"});
    const auto ca = t.column("amplitude");
    const auto cf = t.column("f_khz");
    const auto cu = t.column("u_khz");
    std::vector<AmplitudePoint> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "amplitude CSV line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        const double u = text_util::parse_double(row[cu], where);
        if (u < 0.0) throw ParseError(where + ": negative uncertainty");
        out.push_back({text_util::parse_double(row[ca], where),
                       Quantity(text_util::parse_double(row[cf], where), "kHz", {{component::exp, u}})});
    }
    return out;
}

double light_shift_khz(double delta_alpha_au, double intensity_w_m2) {
    if (!(intensity_w_m2 >= 0.0)) throw InputError("intensity must be >= 0");
    constexpr double eps0 = 8.8541878128e-12;
    constexpr double c = 299792458.0;
    constexpr double h = 6.62607015e-34;
    const double hz = delta_alpha_au * atomic_unit_polarizability * intensity_w_m2 / (2.0 * eps0 * c * h);
    return hz * 1e-3;
}

ShiftEntry light_shift_entry(const LightShiftInput& in) {
    if (!(in.measured_bound_khz >= 0.0)) throw InputError("measured light-shift bound must be >= 0");
    const double delta_alpha = std::abs(in.alpha_s_upper - in.alpha_lower) + std::abs(in.alpha_t_upper);
    const double estimate = light_shift_khz(delta_alpha, in.intensity_w_m2);

    ShiftEntry e;
    e.name = "light_shift";
    e.basis = ShiftBasis::set_to_zero;
    e.uncertainty = estimate < 1e-3 ? 0.0 : estimate;
    std::ostringstream os;
    os << "alpha_s' = " << in.alpha_s_upper << " a.u., alpha_t' = " << in.alpha_t_upper
       << " a.u., alpha = " << in.alpha_lower << " a.u.; |delta alpha| <= " << delta_alpha
       << " a.u. at " << in.intensity_w_m2 << " W/m^2 gives " << text_util::format_double(estimate)
       << " kHz; measured: no effect at the " << in.measured_bound_khz << " kHz level";
    e.note = os.str();
    return e;
}

std::vector<ShiftEntry> mandatory_entries() {
    return {
        {"black_body", 0.0, 0.0, ShiftBasis::set_to_zero, "negligible"},
        {"electric_quadrupole", 0.0, 0.0, ShiftBasis::set_to_zero, "negligible"},
        {"trap_displacement", 0.0, 0.0, ShiftBasis::set_to_zero,
         "displacement test showed no significant shift; no correction or uncertainty applied"},
    };
}

ShiftLedger apply_ledger(const Quantity& raw, const std::vector<ShiftEntry>& entries) {
    std::set<std::string> names;
    double value = raw.value();
    double var = raw.u(component::exp) * raw.u(component::exp);
    for (const auto& e : entries) {
        e.validate();
        if (!names.insert(e.name).second) throw InputError("duplicate ledger entry '" + e.name + "'");
        value += e.correction;
        var += e.uncertainty * e.uncertainty;
    }
    ShiftLedger l;
    l.raw = raw;
    l.entries = entries;
    l.corrected = raw.with_value(value).with(component::exp, std::sqrt(var));
    return l;
}

void to_json(nlohmann::json& j, const ShiftEntry& e) {
    j = nlohmann::json{{"name", e.name},
                       {"correction_khz", e.correction},
                       {"uncertainty_khz", e.uncertainty},
                       {"basis", to_string(e.basis)},
                       {"note", e.note}};
}

void from_json(const nlohmann::json& j, ShiftEntry& e) {
    e.name = j.at("name").get<std::string>();
    e.correction = j.value("correction_khz", 0.0);
    e.uncertainty = j.value("uncertainty_khz", 0.0);
    e.basis = parse_basis(j.value("basis", std::string("set-to-zero")));
    e.note = j.value("note", std::string());
    e.validate();
}

void to_json(nlohmann::json& j, const ShiftLedger& l) {
    j = nlohmann::json{{"raw", l.raw}, {"entries", l.entries}, {"corrected", l.corrected}};
}

}  // namespace hdplus::systematics
