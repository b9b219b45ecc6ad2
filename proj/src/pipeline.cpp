#include "hdplus/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "hdplus/carrier.hpp"
#include "hdplus/composite.hpp"
#include "hdplus/constants.hpp"
#include "hdplus/errors.hpp"
#include "hdplus/lineshape.hpp"
#include "hdplus/text_util.hpp"
#include "hdplus/zeeman.hpp"

namespace hdplus::pipeline {

namespace {

std::map<std::string, Quantity> load_keyed(const std::string& path, const char* value_col,
                                           const char* u_col, const char* comp) {
    const auto t = text_util::parse_csv(text_util::read_file(path), {"transition", value_col, u_col});
    const auto cn = t.column("transition");
    const auto cv = t.column(value_col);
    const auto cu = t.column(u_col);
    std::map<std::string, Quantity> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = path + " line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        const double u = text_util::parse_double(row[cu], where);
        if (u < 0.0) throw ParseError(where + ": negative uncertainty");
        if (!out.emplace(row[cn], Quantity(text_util::parse_double(row[cv], where), "kHz", {{comp, u}})).second) {
            throw ParseError(where + ": duplicate transition '" + row[cn] + "'");
        }
    }
    return out;
}

const Quantity& need(const std::map<std::string, Quantity>& m, const std::string& key,
                     const std::string& what) {
    auto it = m.find(key);
    if (it == m.end()) throw ConfigError(what + " lacks transition '" + key + "'");
    return it->second;
}

}  // namespace

std::map<std::string, Quantity> load_lines(const std::string& path) {
    return load_keyed(path, "f_khz", "u_exp_khz", component::exp);
}

std::map<std::string, Quantity> load_spin_theory(const std::string& path) {
    return load_keyed(path, "f_spin_khz", "u_spin_khz", component::theor_spin);
}

LedgerInput load_ledger(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text_util::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        LedgerInput in;
        in.raw = j.at("raw").get<Quantity>();
        if (j.contains("entries")) in.entries = j.at("entries").get<std::vector<systematics::ShiftEntry>>();
        return in;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const InputError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::optional<std::string> find_coefficients(const std::string& data_dir) {
    if (const char* env = std::getenv("HDPLUS_COEFFICIENTS"); env && *env) return std::string(env);
    const std::string path = data_dir + "/coefficients.ini";
    if (!std::filesystem::exists(path)) return std::nullopt;
    return path;
}

BandStructure solve_band(const angular::CoefficientSet& coeffs) {
    auto lo = coeffs.find({0, 0});
    auto up = coeffs.find({1, 1});
    if (lo == coeffs.end() || up == coeffs.end()) {
        throw ConfigError("coefficient file must define [v=0,N=0] and [v=1,N=1]");
    }
    angular::HfsOptions opts;
    opts.labels.mode = angular::LabelMode::dominant;
    return {angular::solve_level(lo->second, opts), angular::solve_level(up->second, opts)};
}

std::string to_string(Status s) {
    switch (s) {
        case Status::pass: return "PASS";
        case Status::fail: return "FAIL";
        case Status::skip: return "SKIP";
    }
    return "SKIP";
}

Anchor check(std::string id, std::string description, double computed, double expected, double tolerance) {
    Anchor a{std::move(id), std::move(description), computed, expected, tolerance, Status::fail, {}};
    a.status = std::abs(computed - expected) <= tolerance ? Status::pass : Status::fail;
    std::ostringstream os;
    os.precision(15);
    os << "computed " << computed << ", expected " << expected << " +/- " << tolerance;
    a.detail = os.str();
    return a;
}

Anchor skipped(std::string id, std::string description, std::string reason) {
    return {std::move(id), std::move(description), 0.0, 0.0, 0.0, Status::skip, std::move(reason)};
}

std::vector<Anchor> reproduce_paper(const std::string& data_dir, const std::string& profile) {
    std::vector<Anchor> out;
    const auto table = constants::parse_contributions(text_util::read_file(data_dir + "/contributions.csv"));
    const auto ref = constants::load_constants(constants::profile_path(data_dir, "codata2018"));
    const auto prof = constants::load_constants(constants::profile_path(data_dir, profile));
    const auto lines = load_lines(data_dir + "/lines.csv");
    const auto spin = load_spin_theory(data_dir + "/spin_theory.csv");

    // Theory side.
    const Quantity f_theor = constants::theory_frequency(table);
    out.push_back(check("theory-sum", "spin-averaged theory frequency (kHz)", f_theor.value(),
                        58605052163.9, 0.05));
    out.push_back(check("theory-12", "f12 theory = spin-avg + spin shift (kHz)",
                        f_theor.value() + need(spin, "12", "spin theory").value(), 58605013477.8, 0.1));
    out.push_back(check("theory-16", "f16 theory = spin-avg + spin shift (kHz)",
                        f_theor.value() + need(spin, "16", "spin theory").value(), 58605054771.6, 0.1));

    // Experimental lines from the illustrative budgets.
    for (const auto& [line, expected, u] :
         {std::tuple{"12", 58605013478.03, 0.19}, std::tuple{"16", 58605054772.08, 0.26}}) {
        const auto in = load_ledger(data_dir + "/measurements/ledger" + line + ".json");
        const auto l = systematics::apply_ledger(in.raw, in.entries);
        out.push_back(check(std::string("ledger-") + line, std::string("corrected f") + line + " (kHz)",
                            l.corrected.value(), expected, 0.005));
        out.push_back(check(std::string("ledger-u-") + line, std::string("u_exp of f") + line + " (kHz)",
                            l.corrected.u(component::exp), u, 0.005));
    }

    // Composite frequency.
    composite::CompositeInput ci;
    ci.f12 = need(lines, "12", "lines");
    ci.f16 = need(lines, "16", "lines");
    ci.fspin12 = need(spin, "12", "spin theory");
    ci.fspin16 = need(spin, "16", "spin theory");
    const Quantity f_comp = composite::composite_frequency(ci, 0.5);
    out.push_back(check("composite", "composite frequency at b12 = 0.5 (kHz)", f_comp.value(),
                        58605052164.24, 0.05));
    out.push_back(check("composite-u-exp", "composite u_exp (kHz)", f_comp.u(component::exp), 0.16, 0.005));

    // Hyperfine splitting.
    const auto& split = need(spin, "16-12", "spin theory");
    const auto sc = composite::splitting_comparison(ci.f12, ci.f16, split.value(), split.u(component::theor_spin));
    out.push_back(check("splitting", "f16 - f12 experimental (kHz)", sc.experiment.value(), 41294.06, 0.02));
    out.push_back(check("splitting-u", "u(f16 - f12) (kHz)", sc.u_experiment, 0.32, 0.005));
    {
        Anchor a = check("splitting-agreement", "theory/experiment splitting agreement (sigma)", sc.metric, 0.45, 0.05);
        a.status = sc.metric < 1.0 && a.status == Status::pass ? Status::pass : Status::fail;
        out.push_back(a);
    }

    // Mass scenarios.
    const auto model_ref = constants::make_model(table, ref, ref);
    const double shift = constants::scaled_theory(model_ref, model_ref.mu_p_ref * (1.0 - 5.28e-11)) - model_ref.f_ref;
    out.push_back(check("case-II-shift", "theory shift for a -5.28e-11 mass change (kHz)", shift, 1.5, 0.02));
    const auto pen = constants::load_constants(constants::profile_path(data_dir, "penning"));
    const auto model_pen = constants::make_model(table, ref, pen);
    out.push_back(check("case-II-profile", "theory shift with Penning-trap masses (kHz)",
                        model_pen.f_ref - model_ref.f_ref, 1.5, 0.05));

    // Mass-ratio extraction with the weight b12 = 0.5 and the table-free
    // spin uncertainty.
    const auto model = constants::make_model(table, ref, prof);
    const Quantity f_exp = f_comp;
    const auto mu = constants::extract_mu_over_me(f_exp, model);
    out.push_back(check("mu", "mu/m_e", mu.value.value(), 1223.899228668, 1e-8));
    out.push_back(check("mu-u-exp", "mu/m_e exp component", mu.value.u(component::exp), 7e-9, 1.05e-9));
    out.push_back(check("mu-u-qed", "mu/m_e theor_QED component", mu.value.u(component::theor_qed), 20e-9, 3e-9));
    out.push_back(check("mu-u-spin", "mu/m_e theor_spin component", mu.value.u(component::theor_spin), 37e-9, 5.55e-9));
    out.push_back(check("mu-u-codata", "mu/m_e CODATA component", mu.value.u(component::codata), 3e-9, 0.5e-9));
    out.push_back(check("mu-ur", "mu/m_e total fractional uncertainty", mu.fractional_total, 3.5e-11, 0.35e-11));

    const auto r = constants::mean_of(ref.at("md_over_mp_fink"), ref.at("md_over_mp_rau"), "Fink-Rau mean");
    const auto mp = constants::extract_mp_over_me(f_exp, model, r);
    out.push_back(check("mp", "m_p/m_e", mp.value.value(), 1836.152673384, 1.5e-8));
    out.push_back(check("mp-u-exp", "m_p/m_e exp component", mp.value.u(component::exp), 11e-9, 1.65e-9));
    out.push_back(check("mp-u-qed", "m_p/m_e theor_QED component", mp.value.u(component::theor_qed), 31e-9, 4.65e-9));
    out.push_back(check("mp-u-spin", "m_p/m_e theor_spin component", mp.value.u(component::theor_spin), 55e-9, 8.25e-9));
    out.push_back(check("mp-u-codata", "m_p/m_e CODATA component", mp.value.u(component::codata), 12e-9, 1.8e-9));

    // Carrier and resolution anchors.
    const carrier::CarrierModel cm{2.0};
    out.push_back(check("carrier-half", "carrier strength at lambda_c", carrier::carrier_strength(carrier::critical_wavelength(2.0), cm), 0.5, 1e-15));
    {
        const double s = carrier::carrier_strength(5.1, cm);
        Anchor a = check("carrier-5.1um", "carrier strength at 5.1 um, delta_rho = 2 um", s, 0.0149, 0.0005);
        if (!(s < 0.02)) a.status = Status::fail;
        out.push_back(a);
    }
    {
        const double res = lineshape::resolution(58605052164.0, 0.195);
        Anchor a = check("resolution", "line resolution f/FWHM at 0.195 kHz", res, 3.0e11, 0.0);
        a.status = res >= 3.0e11 ? Status::pass : Status::fail;
        a.detail = "computed " + text_util::format_double(res) + ", required >= 3e11";
        out.push_back(a);
    }

    // Coefficient-dependent anchors.
    const auto coeff_path = find_coefficients(data_dir);
    if (!coeff_path) {
        const std::string why = "hyperfine coefficient file not provided (see data/coefficients.template.ini)";
        out.push_back(skipped("spin-frequencies", "f_spin,12 and f_spin,16 from coefficients", why));
        out.push_back(skipped("spin-uncertainties", "spin uncertainties of lines 12 and 16", why));
        out.push_back(skipped("zeeman", "Zeeman coefficients of lines 12 and 16", why));
        return out;
    }
    const auto band = solve_band(angular::load_coefficients(*coeff_path));
    std::map<std::string, double> fs;
    for (const auto& t : angular::known_transitions()) {
        fs[t.name] = angular::spin_frequency(band.upper, t.upper, band.lower, t.lower);
    }
    out.push_back(check("spin-12", "f_spin,12 from coefficients (kHz)", fs["12"], -38686.1, 0.5));
    out.push_back(check("spin-16", "f_spin,16 from coefficients (kHz)", fs["16"], 2607.7, 0.5));
    const auto tables = angular::build_sensitivity_table(band.lower, band.upper, angular::known_transitions());
    const angular::SpinUncertaintyParams params;
    out.push_back(check("spin-u-12", "u(f_spin,12) (kHz)", angular::spin_uncertainty("12", tables, params), 0.8, 0.1));
    out.push_back(check("spin-u-16", "u(f_spin,16) (kHz)", angular::spin_uncertainty("16", tables, params), 0.9, 0.1));
    const auto opt = composite::optimize_weight(tables, params);
    out.push_back(check("composite-spin-min", "minimum composite spin uncertainty (kHz)", opt.u_star, 0.85, 0.1));
    double lo = INFINITY, hi = 0.0;
    for (const auto& [b, u] : opt.profile) {
        if (b < 0.2 - 1e-12 || b > 0.8 + 1e-12) continue;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    Anchor flat = check("composite-spin-flat", "relative spread of the spin uncertainty over b12 in [0.2, 0.8]",
                        (hi - lo) / lo, 0.0, 0.1);
    flat.status = (hi - lo) / lo < 0.1 ? Status::pass : Status::fail;
    out.push_back(flat);

    const auto couplings = zeeman::load_couplings(data_dir + "/zeeman_couplings.txt");
    const auto ml = zeeman::zeeman_map(band.lower, couplings, zeeman::default_grid());
    const auto mu_map = zeeman::zeeman_map(band.upper, couplings, zeeman::default_grid());
    const auto z12 = zeeman::transition_coeffs(ml, mu_map, {{1, 2, 2}, 0}, {{1, 2, 1}, 0});
    const auto z16 = zeeman::transition_coeffs(ml, mu_map, {{1, 2, 2}, 0}, {{1, 2, 3}, 0});
    const auto zs = zeeman::transition_coeffs(ml, mu_map, {{1, 2, 2}, 2}, {{1, 2, 3}, 3});
    out.push_back(check("zeeman-12", "quadratic Zeeman coefficient, line 12 (kHz/G^2)", z12.quadratic, -2.9, 0.145));
    out.push_back(check("zeeman-16", "quadratic Zeeman coefficient, line 16 (kHz/G^2)", z16.quadratic, -117.0, 5.85));
    out.push_back(check("zeeman-stretched", "linear Zeeman coefficient, stretched line (kHz/G)", zs.linear, -0.55, 0.0275));
    return out;
}

}  // namespace hdplus::pipeline
