#pragma once

// Theory frequency assembly, mass-ratio scaling and extraction of mu/m_e and
// m_p/m_e with a component-wise budget.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdplus/quantity.hpp"

namespace hdplus::constants {

struct Constant {
    double value = 0.0;
    double uncertainty = 0.0;
    std::string source;
};

class ConstantSet {
public:
    void set(const std::string& name, Constant c);
    bool has(const std::string& name) const { return values_.count(name) != 0; }
    /// Throws ConfigError when absent.
    const Constant& at(const std::string& name) const;
    double value(const std::string& name) const { return at(name).value; }
    const std::map<std::string, Constant>& all() const { return values_; }

    /// Requires mp_over_me and md_over_mp; checks alpha when present.
    void validate() const;

private:
    std::map<std::string, Constant> values_;
};

/// Lines "name = value [± uncertainty] [# source]". "+/-" is accepted for ±.
ConstantSet parse_constants(const std::string& text);
ConstantSet load_constants(const std::string& path);

/// Path of a bundled profile ("codata2018" or "penning") below data_dir.
std::string profile_path(const std::string& data_dir, const std::string& profile);

/// Reduced nuclear mass over electron mass from m_p/m_e and r = m_d/m_p.
double reduced_mass_ratio(double mp_over_me, double md_over_mp);

/// Mean of two determinations; uncertainty sqrt(u1^2 + u2^2) / 2.
Constant mean_of(const Constant& a, const Constant& b, const std::string& source);

// ---------------------------------------------------------------------------
// Contribution table

struct Contribution {
    std::string name;
    double value = 0.0;  // kHz
    std::optional<double> uncertainty;
    bool bookkeeping = false;  // already contained in another term
};

struct ContributionTable {
    std::vector<Contribution> terms;
};

/// Names every table must contain.
const std::vector<std::string>& mandatory_contributions();

/// CSV columns name, value_khz, u_khz (may be empty), bookkeeping (0|1).
ContributionTable parse_contributions(const std::string& csv_text);

/// Sum of the non-bookkeeping terms with theor_QED and CODATA components.
Quantity theory_frequency(const ContributionTable& table, double u_qed_khz = 0.5,
                          double u_codata_khz = 1.3);

// ---------------------------------------------------------------------------
// Scaling and extraction

struct ScalingModel {
    double f_ref = 0.0;       // kHz, theory at the reference masses
    double mu_p_ref = 0.0;    // m_p/m_e at the reference
    double md_over_mp_ref = 0.0;
    double beta = -0.4846;    // d ln f / d ln mu_p at constant m_d/m_p
    double u_qed = 0.5;       // kHz
    double u_codata = 1.3;    // kHz, mass constants share of the theory budget
    double u_codata_other = 0.07;  // kHz, charge radii and R_inf

    double mu_ref() const { return reduced_mass_ratio(mu_p_ref, md_over_mp_ref); }
    void validate() const;
};

/// Model at the masses of `profile`, built from the contribution table that
/// was evaluated at the masses of `reference`. Model keys beta, u_qed_khz,
/// u_codata_khz and u_codata_other_khz are read from `profile` when present.
ScalingModel make_model(const ContributionTable& table, const ConstantSet& reference,
                        const ConstantSet& profile);

/// f_ref (mu_p / mu_p_ref)^beta. Throws InputError when |ln ratio| >= 1e-6.
double scaled_theory(const ScalingModel& m, double mu_p);

/// Same with the reduced mass ratio as argument.
double scaled_theory_mu(const ScalingModel& m, double mu_over_me);

struct ExtractionResult {
    Quantity value;  // dimensionless, components exp, theor_QED, theor_spin, CODATA
    double fractional_total = 0.0;
};

/// mu/m_e = (mu/m_e)_ref (f_exp / f_ref)^(1/beta); each component maps as
/// |1/beta| (u/f) mu.
ExtractionResult extract_mu_over_me(const Quantity& f_exp, const ScalingModel& m);

/// m_p/m_e = (mu/m_e)(1 + r)/r with r = m_d/m_p; u(r) folds into CODATA.
ExtractionResult extract_mp_over_me(const Quantity& f_exp, const ScalingModel& m,
                                    const Constant& md_over_mp);

void to_json(nlohmann::json& j, const ExtractionResult& r);

// ---------------------------------------------------------------------------
// Comparison of determinations

struct Determination {
    std::string label;
    double value = 0.0;
    double uncertainty = 0.0;
};

enum class PullMode {
    own,       // (value - ref) / u
    combined,  // (value - ref) / sqrt(u^2 + u_ref^2)
};

struct ComparisonRow {
    Determination det;
    double pull = 0.0;
};

/// Pulls of every determination against determinations[reference].
std::vector<ComparisonRow> comparison_report(const std::vector<Determination>& dets,
                                             std::size_t reference = 0,
                                             PullMode mode = PullMode::own);

std::vector<Determination> parse_determinations(const std::string& csv_text);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace hdplus::constants
