#include "hdplus/constants.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::constants {

void ConstantSet::set(const std::string& name, Constant c) {
    if (!std::isfinite(c.value) || !(c.uncertainty >= 0.0) || !std::isfinite(c.uncertainty)) {
        throw InputError("constant '" + name + "' must have a finite value and uncertainty >= 0");
    }
    values_[name] = std::move(c);
}

const Constant& ConstantSet::at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("constant '" + name + "' not defined");
    return it->second;
}

void ConstantSet::validate() const {
    for (const char* k : {"mp_over_me", "md_over_mp"}) {
        if (!(value(k) > 0.0)) throw ConfigError(std::string(k) + " must be positive");
    }
    if (has("alpha")) {
        const double a = value("alpha");
        if (!(a > 0.00729 && a < 0.0073)) throw ConfigError("alpha outside (0.00729, 0.0073)");
    }
}

ConstantSet parse_constants(const std::string& text) {
    ConstantSet set;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = "constants line " + std::to_string(line_no);
        std::string source;
        if (auto hash = raw.find('#'); hash != std::string::npos) {
            source = text_util::trim(raw.substr(hash + 1));
            raw = raw.substr(0, hash);
        }
        const std::string line = text_util::trim(raw);
        if (line.empty()) continue;
        auto [name, rest] = text_util::split_key_value(line, where);
        if (!seen.insert(name).second) throw ParseError(where + ": duplicate constant '" + name + "'");
        Constant c;
        c.source = source;
        std::size_t pm = rest.find("±");
        std::size_t pm_len = 2;
        if (pm == std::string::npos) {
            pm = rest.find("+/-");
            pm_len = 3;
        }
        if (pm == std::string::npos) {
            c.value = text_util::parse_double(text_util::trim(rest), where);
        } else {
            c.value = text_util::parse_double(text_util::trim(rest.substr(0, pm)), where);
            c.uncertainty = text_util::parse_double(text_util::trim(rest.substr(pm + pm_len)), where);
            if (c.uncertainty < 0.0) throw ParseError(where + ": negative uncertainty");
        }
        set.set(name, c);
    }
    return set;
}

ConstantSet load_constants(const std::string& path) {
    auto s = parse_constants(text_util::read_file(path));
    s.validate();
    return s;
}

std::string profile_path(const std::string& data_dir, const std::string& profile) {
    if (profile != "codata2018" && profile != "penning") {
        throw ConfigError("unknown constants profile '" + profile + "' (codata2018|penning)");
    }
    return data_dir + "/constants/" + profile + ".txt";
}

double reduced_mass_ratio(double mp_over_me, double md_over_mp) {
    if (!(md_over_mp > 0.0) || !(mp_over_me > 0.0)) throw InputError("mass ratios must be positive");
    return mp_over_me * md_over_mp / (1.0 + md_over_mp);
}

Constant mean_of(const Constant& a, const Constant& b, const std::string& source) {
    return {0.5 * (a.value + b.value), 0.5 * std::hypot(a.uncertainty, b.uncertainty), source};
}

const std::vector<std::string>& mandatory_contributions() {
    static const std::vector<std::string> names = {"alpha0", "alpha2", "alpha3", "alpha4",
                                                   "alpha5", "alpha6", "further"};
    return names;
}

ContributionTable parse_contributions(const std::string& csv_text) {
    const auto t = text_util::parse_csv(csv_text, {"name", "value_khz", "u_khz", "bookkeeping"});
    const auto cn = t.column("name");
    const auto cv = t.column("value_khz");
    const auto cu = t.column("u_khz");
    const auto cb = t.column("bookkeeping");
    ContributionTable table;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "contributions line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        Contribution c;
        c.name = row[cn];
        if (!seen.insert(c.name).second) throw ParseError(where + ": duplicate term '" + c.name + "'");
        c.value = text_util::parse_double(row[cv], where);
        if (!row[cu].empty()) c.uncertainty = text_util::parse_double(row[cu], where);
        const auto flag = text_util::parse_integer(row[cb], where);
        if (flag != 0 && flag != 1) throw ParseError(where + ": bookkeeping must be 0 or 1");
        c.bookkeeping = flag == 1;
        table.terms.push_back(std::move(c));
    }
    return table;
}

Quantity theory_frequency(const ContributionTable& table, double u_qed_khz, double u_codata_khz) {
    for (const auto& name : mandatory_contributions()) {
        bool found = false;
        for (const auto& t : table.terms) found = found || (t.name == name && !t.bookkeeping);
        if (!found) throw InputError("contribution table lacks mandatory term '" + name + "'");
    }
    double sum = 0.0;
    for (const auto& t : table.terms) {
        if (!t.bookkeeping) sum += t.value;
    }
    return Quantity(sum, "kHz", {{component::theor_qed, u_qed_khz}, {component::codata, u_codata_khz}});
}

void ScalingModel::validate() const {
    if (beta == 0.0) throw InputError("degenerate scaling model: beta = 0");
    if (!(f_ref > 0.0) || !(mu_p_ref > 0.0) || !(md_over_mp_ref > 0.0)) {
        throw InputError("scaling model needs positive f_ref and reference mass ratios");
    }
    for (double u : {u_qed, u_codata, u_codata_other}) {
        if (!(u >= 0.0)) throw InputError("scaling model uncertainties must be >= 0");
    }
}

ScalingModel make_model(const ContributionTable& table, const ConstantSet& reference,
                        const ConstantSet& profile) {
    ScalingModel ref;
    auto opt = [&](const char* key, double fallback) {
        return profile.has(key) ? profile.value(key) : fallback;
    };
    ref.beta = opt("beta", ref.beta);
    ref.u_qed = opt("u_qed_khz", ref.u_qed);
    ref.u_codata = opt("u_codata_khz", ref.u_codata);
    ref.u_codata_other = opt("u_codata_other_khz", ref.u_codata_other);
    ref.f_ref = theory_frequency(table, ref.u_qed, ref.u_codata).value();
    ref.mu_p_ref = reference.value("mp_over_me");
    ref.md_over_mp_ref = reference.value("md_over_mp");
    ref.validate();

    ScalingModel m = ref;
    m.mu_p_ref = profile.value("mp_over_me");
    m.md_over_mp_ref = profile.value("md_over_mp");
    m.f_ref = scaled_theory_mu(ref, m.mu_ref());
    return m;
}

namespace {

double scaled(const ScalingModel& m, double ratio) {
    m.validate();
    if (!(ratio > 0.0) || !(std::abs(std::log(ratio)) < 1e-6)) {
        throw InputError("mass ratio too far from the reference for the linearized model");
    }
    return m.f_ref * std::pow(ratio, m.beta);
}

}  // namespace

double scaled_theory(const ScalingModel& m, double mu_p) { return scaled(m, mu_p / m.mu_p_ref); }

double scaled_theory_mu(const ScalingModel& m, double mu_over_me) {
    return scaled(m, mu_over_me / m.mu_ref());
}

namespace {

ExtractionResult finish(double value, std::map<std::string, double> comps) {
    ExtractionResult r;
    r.value = Quantity(value, "", std::move(comps));
    r.fractional_total = r.value.total(TotalMode::quadrature) / std::abs(value);
    return r;
}

}  // namespace

ExtractionResult extract_mu_over_me(const Quantity& f_exp, const ScalingModel& m) {
    m.validate();
    if (!(f_exp.value() > 0.0)) throw InputError("experimental frequency must be positive");
    const double ratio = f_exp.value() / m.f_ref;
    if (!(std::abs(std::log(ratio)) < 1e-6)) {
        throw InputError("experimental frequency too far from the theory reference");
    }
    const double mu = m.mu_ref() * std::pow(ratio, 1.0 / m.beta);
    const double k = std::abs(1.0 / m.beta) * mu / f_exp.value();
    return finish(mu, {{component::exp, k * f_exp.u(component::exp)},
                       {component::theor_qed, k * m.u_qed},
                       {component::theor_spin, k * f_exp.u(component::theor_spin)},
                       {component::codata, k * m.u_codata_other}});
}

ExtractionResult extract_mp_over_me(const Quantity& f_exp, const ScalingModel& m,
                                    const Constant& md_over_mp) {
    const double r = md_over_mp.value;
    if (!(r > 0.0)) throw InputError("m_d/m_p must be positive");
    const auto mu = extract_mu_over_me(f_exp, m);
    const double g = (1.0 + r) / r;
    const double mu_v = mu.value.value();
    std::map<std::string, double> comps;
    for (const auto& [name, u] : mu.value.components()) comps[name] = g * u;
    // d(m_p/m_e)/dr = -mu / r^2
    comps[component::codata] = std::hypot(comps[component::codata], mu_v / (r * r) * md_over_mp.uncertainty);
    return finish(mu_v * g, std::move(comps));
}

void to_json(nlohmann::json& j, const ExtractionResult& r) {
    j = nlohmann::json{{"value", r.value.value()},
                       {"components", r.value.components()},
                       {"fractional_total", r.fractional_total},
                       {"text", r.value.to_string(12)}};
}

std::vector<ComparisonRow> comparison_report(const std::vector<Determination>& dets,
                                             std::size_t reference, PullMode mode) {
    if (dets.empty()) throw InputError("comparison needs at least one determination");
    if (reference >= dets.size()) throw InputError("reference index out of range");
    const auto& ref = dets[reference];
    std::vector<ComparisonRow> rows;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto& d = dets[i];
        ComparisonRow row{d, 0.0};
        if (i != reference) {
            const double u = mode == PullMode::own ? d.uncertainty : std::hypot(d.uncertainty, ref.uncertainty);
            if (!(u > 0.0)) throw InputError("determination '" + d.label + "' has zero uncertainty");
            row.pull = (d.value - ref.value) / u;
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<Determination> parse_determinations(const std::string& csv_text) {
    const auto t = text_util::parse_csv(csv_text, {"label", "value", "u"});
    const auto cl = t.column("label");
    const auto cv = t.column("value");
    const auto cu = t.column("u");
    std::vector<Determination> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "determinations line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        Determination d{row[cl], text_util::parse_double(row[cv], where),
                        text_util::parse_double(row[cu], where)};
        if (d.uncertainty < 0.0) throw ParseError(where + ": negative uncertainty");
        out.push_back(std::move(d));
    }
    return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "label,value,u,pull\n";
    for (const auto& r : rows) {
        os << r.det.label << ',' << text_util::format_double(r.det.value) << ','
           << text_util::format_double(r.det.uncertainty) << ',' << text_util::format_double(r.pull)
           << '\n';
    }
    return os.str();
}

}  // namespace hdplus::constants
