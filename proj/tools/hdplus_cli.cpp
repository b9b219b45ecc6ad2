// Command-line front end for the HD+ analysis chain.
//
// Every command validates and parses all of its inputs before computing,
// prints its result to stdout and, with --out-dir, also writes it there.
// Exit codes: 0 ok, 1 data error, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hdplus/angular.hpp"
#include "hdplus/carrier.hpp"
#include "hdplus/composite.hpp"
#include "hdplus/constants.hpp"
#include "hdplus/errors.hpp"
#include "hdplus/lineshape.hpp"
#include "hdplus/metrology.hpp"
#include "hdplus/pipeline.hpp"
#include "hdplus/systematics.hpp"
#include "hdplus/text_util.hpp"
#include "hdplus/zeeman.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hdplus;

namespace {

struct Globals {
    std::string out_dir;
    std::string profile = "codata2018";
    std::string format = "json";
    std::string data_dir = HDPLUS_DATA_DIR;
};

Globals g;

void write_file(const std::string& name, const std::string& content) {
    if (g.out_dir.empty()) return;
    fs::create_directories(g.out_dir);
    const fs::path p = fs::path(g.out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << content;
}

// Writes <stem>.json (and <stem>.csv when given) and prints the one that
// matches --format.
void emit(const std::string& stem, const json& j, const std::string& csv = {}) {
    const std::string text = j.dump(2) + "\n";
    write_file(stem + ".json", text);
    if (!csv.empty()) write_file(stem + ".csv", csv);
    std::cout << (g.format == "csv" && !csv.empty() ? csv : text);
}

std::string data_path(const std::string& rel) { return g.data_dir + "/" + rel; }

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(text_util::parse_double(text_util::trim(item), what));
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

zeeman::StateLabel parse_state(const std::string& s) {
    const auto v = parse_list(s, "state label");
    if (v.size() != 4) throw ConfigError("state label must be G1,G2,F,mF");
    return {{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])}, static_cast<int>(v[3])};
}

std::string coefficient_path(const std::string& given) {
    if (!given.empty()) return given;
    if (auto p = pipeline::find_coefficients(g.data_dir)) return *p;
    throw ConfigError("no coefficient file: pass --coefficients or populate " + data_path("coefficients.ini") +
                      " from coefficients.template.ini");
}

json levels_json(const angular::LevelStructure& s) {
    json arr = json::array();
    for (const auto& l : s.levels) {
        arr.push_back({{"label", l.label ? angular::to_string(*l.label) : std::string()},
                       {"energy_khz", l.energy},
                       {"degeneracy", l.degeneracy},
                       {"g1_sq", l.g1_sq},
                       {"g2_sq", l.g2_sq},
                       {"f_sq", l.f_sq}});
    }
    return {{"level", angular::to_string(s.coeffs.level)}, {"levels", arr}};
}

json row_json(const angular::SensitivityRow& r) {
    json a = json::array();
    for (double x : r) a.push_back(x);
    return a;
}

// ---------------------------------------------------------------------------

struct SpinOpts {
    std::string coefficients;
    std::string label_mode = "dominant";
    double eps_fermi = 1e-6;
    double eps0 = 5.3251e-5;
    double u1 = 0.05;
};

void cmd_spin_structure(const SpinOpts& o) {
    angular::SpinUncertaintyParams params{o.eps_fermi, o.eps0, o.u1};
    params.validate();
    const auto coeffs = angular::load_coefficients(coefficient_path(o.coefficients));
    auto lo = coeffs.find({0, 0});
    auto up = coeffs.find({1, 1});
    if (lo == coeffs.end() || up == coeffs.end()) throw ConfigError("coefficients need [v=0,N=0] and [v=1,N=1]");
    angular::HfsOptions opts;
    opts.labels.mode = o.label_mode == "expectation" ? angular::LabelMode::expectation : angular::LabelMode::dominant;
    const auto lower = angular::solve_level(lo->second, opts);
    const auto upper = angular::solve_level(up->second, opts);

    const auto& trs = angular::known_transitions();
    const auto tables = angular::build_sensitivity_table(lower, upper, trs);
    json lines = json::object();
    std::ostringstream csv;
    csv << "transition,level,k,gamma\n";
    for (const auto& t : trs) {
        const auto& row = tables.row(t.name);
        lines[t.name] = {{"lower", angular::to_string(t.lower)},
                         {"upper", angular::to_string(t.upper)},
                         {"f_spin_khz", angular::spin_frequency(upper, t.upper, lower, t.lower)},
                         {"u_spin_khz", angular::spin_uncertainty(t.name, tables, params)},
                         {"gamma_lower", row_json(row.lower)},
                         {"gamma_upper", row_json(row.upper)}};
        for (int k = 0; k < angular::coefficient_count; ++k) {
            csv << t.name << ",lower," << k + 1 << ',' << text_util::format_double(row.lower[k]) << '\n';
            csv << t.name << ",upper," << k + 1 << ',' << text_util::format_double(row.upper[k]) << '\n';
        }
    }
    const auto opt = composite::optimize_weight(tables, params);
    json profile = json::array();
    for (const auto& [b, u] : opt.profile) profile.push_back({{"b12", b}, {"u_spin_khz", u}});
    emit("spin_structure",
         {{"lower", levels_json(lower)},
          {"upper", levels_json(upper)},
          {"transitions", lines},
          {"composite_spin", {{"b_star", opt.b_star}, {"u_min_khz", opt.u_star}, {"profile", profile}}}},
         csv.str());
}

struct ZeemanOpts {
    std::string coefficients;
    std::string couplings;
    std::string grid = "0,0.05,0.1,0.15,0.2";
    std::string level = "1,1";
    std::vector<std::string> lower_states;
    std::vector<std::string> upper_states;
};

zeeman::ZeemanCouplings couplings_of(const ZeemanOpts& o) {
    return zeeman::load_couplings(o.couplings.empty() ? data_path("zeeman_couplings.txt") : o.couplings);
}

void cmd_zeeman_map(const ZeemanOpts& o) {
    const auto c = couplings_of(o);
    const auto grid = parse_list(o.grid, "--grid");
    const auto lv = parse_list(o.level, "--level");
    if (lv.size() != 2) throw ConfigError("--level must be v,N");
    const auto coeffs = angular::load_coefficients(coefficient_path(o.coefficients));
    auto it = coeffs.find({static_cast<int>(lv[0]), static_cast<int>(lv[1])});
    if (it == coeffs.end()) throw ConfigError("level not present in coefficient file");
    angular::HfsOptions opts;
    opts.labels.mode = angular::LabelMode::dominant;
    const auto s = angular::solve_level(it->second, opts);
    const auto map = zeeman::zeeman_map(s, c, grid);

    std::ostringstream csv;
    csv << "state,B_gauss,energy_khz\n";
    json states = json::array();
    for (const auto& st : map.states) {
        states.push_back({{"state", zeeman::to_string(st.label)}, {"energies_khz", st.energies}});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv << '"' << zeeman::to_string(st.label) << "\"," << text_util::format_double(grid[i]) << ','
                << text_util::format_double(st.energies[i]) << '\n';
        }
    }
    emit("zeeman_map", {{"fields_gauss", grid}, {"min_overlap", map.min_overlap}, {"states", states}}, csv.str());
}

void cmd_zeeman_coeffs(const ZeemanOpts& o) {
    const auto c = couplings_of(o);
    const auto grid = parse_list(o.grid, "--grid");
    if (o.lower_states.size() != o.upper_states.size()) {
        throw ConfigError("--lower and --upper must be given the same number of times");
    }
    std::vector<std::pair<zeeman::StateLabel, zeeman::StateLabel>> pairs;
    for (std::size_t i = 0; i < o.lower_states.size(); ++i) {
        pairs.emplace_back(parse_state(o.lower_states[i]), parse_state(o.upper_states[i]));
    }
    if (pairs.empty()) {
        pairs = {{{{1, 2, 2}, 0}, {{1, 2, 1}, 0}},
                 {{{1, 2, 2}, 0}, {{1, 2, 3}, 0}},
                 {{{1, 2, 2}, 2}, {{1, 2, 3}, 3}},
                 {{{1, 2, 2}, -2}, {{1, 2, 3}, -3}}};
    }
    const auto band = pipeline::solve_band(angular::load_coefficients(coefficient_path(o.coefficients)));
    const auto ml = zeeman::zeeman_map(band.lower, c, grid);
    const auto mu = zeeman::zeeman_map(band.upper, c, grid);
    json arr = json::array();
    std::ostringstream csv;
    csv << "lower,upper,linear_khz_per_g,quadratic_khz_per_g2\n";
    for (const auto& [l, u] : pairs) {
        const auto m = zeeman::transition_coeffs(ml, mu, l, u);
        const auto pl = zeeman::perturbative_shift(band.lower, c, l);
        const auto pu = zeeman::perturbative_shift(band.upper, c, u);
        arr.push_back({{"lower", zeeman::to_string(l)},
                       {"upper", zeeman::to_string(u)},
                       {"linear_khz_per_g", m.linear},
                       {"quadratic_khz_per_g2", m.quadratic},
                       {"perturbative_quadratic_khz_per_g2", pu.quadratic - pl.quadratic},
                       {"b_max_gauss", m.b_max}});
        csv << '"' << zeeman::to_string(l) << "\",\"" << zeeman::to_string(u) << "\","
            << text_util::format_double(m.linear) << ',' << text_util::format_double(m.quadratic) << '\n';
    }
    emit("zeeman_coeffs", {{"transitions", arr}}, csv.str());
}

void cmd_extrapolate_b(const std::string& input) {
    const auto pts = zeeman::parse_field_points(text_util::read_file(input));
    const auto fit = zeeman::extrapolate_to_zero_field(pts);
    emit("extrapolate_b", {{"f0", fit.f0},
                           {"curvature_khz_per_g2", fit.curvature},
                           {"u_curvature_khz_per_g2", fit.u_curvature},
                           {"weighted", fit.weighted}});
}

struct FitOpts {
    std::string input;
    std::string spectrum;
    double offset_khz = 0.0;
};

void cmd_fit_line(const FitOpts& o) {
    if (o.input.empty() == o.spectrum.empty()) throw ConfigError("give exactly one of --input or --spectrum");
    const auto points = o.input.empty() ? lineshape::parse_spectrum(text_util::read_file(o.spectrum))
                                        : lineshape::build_spectrum(lineshape::parse_decay_records(text_util::read_file(o.input)));
    const auto fit = lineshape::fit_lorentzian(points);
    const auto f = lineshape::line_frequency(fit, o.offset_khz);
    json j = {{"fit", fit}, {"line_frequency", f}};
    if (f.value() > 0.0) j["resolution"] = lineshape::resolution(f.value(), fit.fwhm);
    write_file("spectrum.csv", lineshape::spectrum_csv(points));
    emit("fit_line", j, lineshape::spectrum_csv(points));
}

struct RfOpts {
    std::string input;
    std::optional<double> nominal;
    std::string model = "quadratic";
};

void cmd_extrapolate_rf(const RfOpts& o) {
    if (o.model != "quadratic" && o.model != "linear") throw ConfigError("--model must be quadratic or linear");
    const auto pts = systematics::parse_amplitude_points(text_util::read_file(o.input));
    const auto r = systematics::rf_extrapolate(pts, o.nominal,
                                               o.model == "linear" ? systematics::RfModel::linear : systematics::RfModel::quadratic);
    emit("extrapolate_rf", {{"f_zero", r.f_zero},
                            {"slope", r.slope},
                            {"u_slope", r.u_slope},
                            {"nominal_amplitude", r.nominal_amplitude},
                            {"entry", r.entry}});
}

struct LedgerOpts {
    std::string input;
    std::optional<double> intensity;
    double alpha_lower = 0.0;
    double bound = 0.2;
};

void cmd_ledger(const LedgerOpts& o) {
    auto in = pipeline::load_ledger(o.input);
    auto has = [&](const std::string& name) {
        for (const auto& e : in.entries) if (e.name == name) return true;
        return false;
    };
    if (o.intensity) {
        if (has("light_shift")) throw ConfigError("ledger already has a light_shift entry");
        systematics::LightShiftInput ls;
        ls.intensity_w_m2 = *o.intensity;
        ls.alpha_lower = o.alpha_lower;
        ls.measured_bound_khz = o.bound;
        in.entries.push_back(systematics::light_shift_entry(ls));
    }
    for (const auto& e : systematics::mandatory_entries()) {
        if (!has(e.name)) in.entries.push_back(e);
    }
    const auto l = systematics::apply_ledger(in.raw, in.entries);
    json j = l;
    j["corrected_text"] = l.corrected.to_string(2);
    emit("ledger", j);
}

struct CompositeOpts {
    std::string lines;
    std::string spin;
    std::string coefficients;
    double b12 = 0.5;
    double shared_exp = 0.0;
};

composite::CompositeInput composite_input(const CompositeOpts& o) {
    const auto lines = pipeline::load_lines(o.lines.empty() ? data_path("lines.csv") : o.lines);
    const auto spin = pipeline::load_spin_theory(o.spin.empty() ? data_path("spin_theory.csv") : o.spin);
    composite::CompositeInput in;
    auto get = [](const auto& m, const char* k, const char* what) {
        auto it = m.find(k);
        if (it == m.end()) throw ConfigError(std::string(what) + " lacks transition " + k);
        return it->second;
    };
    in.f12 = get(lines, "12", "lines");
    in.f16 = get(lines, "16", "lines");
    in.fspin12 = get(spin, "12", "spin theory");
    in.fspin16 = get(spin, "16", "spin theory");
    if (!o.coefficients.empty()) {
        const auto band = pipeline::solve_band(angular::load_coefficients(o.coefficients));
        in.tables = angular::build_sensitivity_table(band.lower, band.upper, angular::known_transitions());
    }
    return in;
}

void cmd_composite(const CompositeOpts& o) {
    const auto in = composite_input(o);
    const auto q = composite::composite_frequency(in, o.b12, {o.shared_exp});
    const auto opt = composite::optimize_weight(in);
    json j = composite::composite_report(q, o.b12, opt);
    j["text"] = q.to_string(3);
    j["spin_model"] = in.tables ? "coefficients" : "table-free bound";
    std::ostringstream csv;
    csv << "b12,u_spin_khz\n";
    for (const auto& [b, u] : opt.profile) csv << text_util::format_double(b) << ',' << text_util::format_double(u) << '\n';
    emit("composite", j, csv.str());
}

void cmd_extract(const CompositeOpts& o, const std::string& contributions) {
    const auto table = constants::parse_contributions(
        text_util::read_file(contributions.empty() ? data_path("contributions.csv") : contributions));
    const auto ref = constants::load_constants(constants::profile_path(g.data_dir, "codata2018"));
    const auto prof = constants::load_constants(constants::profile_path(g.data_dir, g.profile));
    const auto in = composite_input(o);

    const auto f_exp = composite::composite_frequency(in, o.b12, {o.shared_exp});
    const auto model = constants::make_model(table, ref, prof);
    const auto r = constants::mean_of(prof.at("md_over_mp_fink"), prof.at("md_over_mp_rau"), "Fink-Rau mean");
    const auto mu = constants::extract_mu_over_me(f_exp, model);
    const auto mp = constants::extract_mp_over_me(f_exp, model, r);
    emit("extract", {{"profile", g.profile},
                     {"f_exp", f_exp},
                     {"model", {{"f_ref_khz", model.f_ref},
                                {"mu_p_ref", model.mu_p_ref},
                                {"md_over_mp_ref", model.md_over_mp_ref},
                                {"beta", model.beta}}},
                     {"md_over_mp", {{"value", r.value}, {"u", r.uncertainty}}},
                     {"mu_over_me", mu},
                     {"mp_over_me", mp}});
}

struct CompareOpts {
    std::string input;
    std::size_t reference = 0;
    std::string mode = "own";
};

void cmd_compare(const CompareOpts& o) {
    const auto dets = constants::parse_determinations(
        text_util::read_file(o.input.empty() ? data_path("determinations.csv") : o.input));
    if (o.mode != "own" && o.mode != "combined") throw ConfigError("--mode must be own or combined");
    const auto rows = constants::comparison_report(
        dets, o.reference, o.mode == "own" ? constants::PullMode::own : constants::PullMode::combined);
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"label", r.det.label}, {"value", r.det.value}, {"u", r.det.uncertainty}, {"pull", r.pull}});
    }
    emit("compare", {{"reference", dets[o.reference].label}, {"mode", o.mode}, {"rows", arr}},
         constants::comparison_csv(rows));
}

struct AdevOpts {
    std::string input;
    std::string taus;
    std::optional<double> carrier;
};

void cmd_adev(const AdevOpts& o) {
    const auto series = metrology::parse_counter_log(text_util::read_file(o.input), o.carrier);
    const auto taus = o.taus.empty() ? metrology::default_taus(series) : parse_list(o.taus, "--tau-list");
    const auto pts = metrology::allan_deviation(series, taus);
    json arr = json::array();
    for (const auto& p : pts) {
        arr.push_back({{"tau_s", p.tau}, {"adev", p.adev}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high}, {"edf", p.edf}});
    }
    emit("adev", {{"tau0_s", series.tau0}, {"samples", series.y.size()}, {"points", arr}},
         metrology::adev_csv(pts));
}

struct DfgOpts {
    std::string input;
    double maser_offset = 0.0;
};

void cmd_dfg(const DfgOpts& o) {
    json j;
    try {
        j = json::parse(text_util::read_file(o.input.empty() ? data_path("measurements/comb.json") : o.input));
    } catch (const json::exception& e) {
        throw ParseError(std::string("comb file: ") + e.what());
    }
    metrology::CombParams comb;
    try {
        comb.f_rep = j.at("f_rep_hz").get<double>();
        comb.f_ceo = j.value("f_ceo_hz", 0.0);
        for (const auto& l : j.at("lasers")) {
            comb.lasers.push_back({l.at("mode").get<long long>(), l.value("f_beat_hz", 0.0),
                                   l.value("beat_sign", 1), l.value("ceo_sign", 1)});
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("comb file: ") + e.what());
    }
    if (comb.lasers.size() < 2) throw ConfigError("comb file needs two lasers");
    comb.validate();
    const double f1 = metrology::laser_frequency(comb, 0);
    const double f2 = metrology::laser_frequency(comb, 1);
    const double f0 = metrology::maser_correct(metrology::dfg_frequency(comb), o.maser_offset);
    constexpr double c = 299792458.0;
    emit("dfg", {{"f1_hz", f1},
                 {"f2_hz", f2},
                 {"f0_hz", f0},
                 {"lambda1_um", c / f1 * 1e6},
                 {"lambda2_um", c / f2 * 1e6},
                 {"lambda0_um", c / f0 * 1e6},
                 {"maser_offset", o.maser_offset}});
}

struct CarrierOpts {
    double lambda = 5.1;
    double delta_rho = 2.0;
    std::string sweep;
};

void cmd_carrier(const CarrierOpts& o) {
    const carrier::CarrierModel m{o.delta_rho};
    m.validate();
    std::string csv;
    if (!o.sweep.empty()) {
        const auto v = parse_list(o.sweep, "--sweep");
        if (v.size() != 3) throw ConfigError("--sweep must be min,max,points");
        csv = carrier::sweep_csv(carrier::carrier_sweep(m, v[0], v[1], static_cast<int>(v[2])));
    }
    emit("carrier", {{"lambda_um", o.lambda},
                     {"delta_rho_um", o.delta_rho},
                     {"lambda_c_um", carrier::critical_wavelength(o.delta_rho)},
                     {"strength", carrier::carrier_strength(o.lambda, m)}},
         csv);
}

void cmd_reproduce(bool strict) {
    const auto anchors = pipeline::reproduce_paper(g.data_dir, g.profile);
    json arr = json::array();
    std::ostringstream table;
    std::ostringstream csv;
    csv << "id,status,computed,expected,tolerance\n";
    int failed = 0;
    for (const auto& a : anchors) {
        arr.push_back({{"id", a.id},
                       {"description", a.description},
                       {"status", pipeline::to_string(a.status)},
                       {"computed", a.computed},
                       {"expected", a.expected},
                       {"tolerance", a.tolerance},
                       {"detail", a.detail}});
        table << pipeline::to_string(a.status) << "  " << a.id << "  " << a.description << "  [" << a.detail << "]\n";
        csv << a.id << ',' << pipeline::to_string(a.status) << ',' << text_util::format_double(a.computed) << ','
            << text_util::format_double(a.expected) << ',' << text_util::format_double(a.tolerance) << '\n';
        failed += a.status == pipeline::Status::fail;
    }
    write_file("reproduce_paper.json", json{{"profile", g.profile}, {"anchors", arr}}.dump(2) + "\n");
    write_file("reproduce_paper.csv", csv.str());
    std::cout << (g.format == "csv" ? csv.str() : table.str());
    if (strict && failed > 0) throw Error(std::to_string(failed) + " reproduction anchors failed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HD+ precision spectroscopy analysis"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too
    app.add_option("--out-dir", g.out_dir, "Directory for JSON/CSV outputs");
    app.add_option("--constants-profile", g.profile, "Mass-constant profile")
        ->check(CLI::IsMember({"codata2018", "penning"}));
    app.add_option("--format", g.format, "Format printed to stdout")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--data-dir", g.data_dir, "Directory with the bundled inputs");

    std::function<void()> run;

    SpinOpts spin;
    auto* s = app.add_subcommand("spin-structure", "Levels, spin frequencies, sensitivities, spin uncertainties");
    s->add_option("--coefficients", spin.coefficients, "Coefficient file (default: data/coefficients.ini)");
    s->add_option("--label-mode", spin.label_mode, "Level labeling")->check(CLI::IsMember({"dominant", "expectation"}));
    s->add_option("--eps-fermi", spin.eps_fermi, "Fractional uncertainty of E4, E5");
    s->add_option("--eps0", spin.eps0, "Fractional uncertainty of the Breit-Pauli coefficients");
    s->add_option("--u1", spin.u1, "Absolute uncertainty of E1' (kHz)");
    s->callback([&] { run = [&] { cmd_spin_structure(spin); }; });

    ZeemanOpts zo;
    auto* zm = app.add_subcommand("zeeman-map", "Field-dependent level map of one level");
    zm->add_option("--coefficients", zo.coefficients, "Coefficient file");
    zm->add_option("--couplings", zo.couplings, "Zeeman couplings file");
    zm->add_option("--grid", zo.grid, "Comma-separated fields in G, starting at 0");
    zm->add_option("--level", zo.level, "v,N of the level to map");
    zm->callback([&] { run = [&] { cmd_zeeman_map(zo); }; });

    auto* zc = app.add_subcommand("zeeman-coeffs", "Linear and quadratic Zeeman coefficients of transitions");
    zc->add_option("--coefficients", zo.coefficients, "Coefficient file");
    zc->add_option("--couplings", zo.couplings, "Zeeman couplings file");
    zc->add_option("--grid", zo.grid, "Comma-separated fields in G, starting at 0");
    zc->add_option("--lower", zo.lower_states, "Lower state G1,G2,F,mF (repeatable)");
    zc->add_option("--upper", zo.upper_states, "Upper state G1,G2,F,mF (repeatable)");
    zc->callback([&] { run = [&] { cmd_zeeman_coeffs(zo); }; });

    std::string b_input;
    auto* eb = app.add_subcommand("extrapolate-b", "Extrapolate line centers to zero field");
    eb->add_option("--input", b_input, "CSV B_gauss,f_khz,u_khz")->required();
    eb->callback([&] { run = [&] { cmd_extrapolate_b(b_input); }; });

    FitOpts fo;
    auto* fl = app.add_subcommand("fit-line", "Build a spectrum and fit a Lorentzian");
    fl->add_option("--input", fo.input, "Decay records CSV detuning_khz,run_id,laser_on,depletion");
    fl->add_option("--spectrum", fo.spectrum, "Spectrum CSV detuning_khz,signal,sem");
    fl->add_option("--absolute-offset-khz", fo.offset_khz, "Frequency of zero detuning (kHz)");
    fl->callback([&] { run = [&] { cmd_fit_line(fo); }; });

    RfOpts ro;
    auto* er = app.add_subcommand("extrapolate-rf", "Extrapolate to zero RF amplitude");
    er->add_option("--input", ro.input, "CSV amplitude,f_khz,u_khz")->required();
    er->add_option("--nominal", ro.nominal, "Nominal amplitude (default: largest)");
    er->add_option("--model", ro.model, "quadratic or linear");
    er->callback([&] { run = [&] { cmd_extrapolate_rf(ro); }; });

    LedgerOpts lo;
    auto* lg = app.add_subcommand("ledger", "Apply a systematic-shift ledger");
    lg->add_option("--input", lo.input, "Ledger JSON {raw, entries}")->required();
    lg->add_option("--light-intensity", lo.intensity, "Add a light-shift entry for this intensity (W/m^2)");
    lg->add_option("--alpha-lower", lo.alpha_lower, "Lower-level polarizability (a.u.)");
    lg->add_option("--light-bound", lo.bound, "Measured light-shift bound (kHz)");
    lg->callback([&] { run = [&] { cmd_ledger(lo); }; });

    CompositeOpts co;
    auto add_composite_opts = [&](CLI::App* c) {
        c->add_option("--lines", co.lines, "Corrected line frequencies CSV");
        c->add_option("--spin-theory", co.spin, "Spin shifts CSV");
        c->add_option("--coefficients", co.coefficients, "Coefficient file for the full spin model");
        c->add_option("--b12", co.b12, "Weight of line 12");
        c->add_option("--shared-exp", co.shared_exp, "Correlated part of the exp uncertainties (kHz)");
    };
    auto* cp = app.add_subcommand("composite", "Composite spin-averaged frequency and weight profile");
    add_composite_opts(cp);
    cp->callback([&] { run = [&] { cmd_composite(co); }; });

    std::string contributions;
    auto* ex = app.add_subcommand("extract", "Extract mu/m_e and m_p/m_e");
    add_composite_opts(ex);
    ex->add_option("--contributions", contributions, "Theory contribution CSV");
    ex->callback([&] { run = [&] { cmd_extract(co, contributions); }; });

    CompareOpts cmpo;
    auto* cm = app.add_subcommand("compare", "Pull table of determinations");
    cm->add_option("--input", cmpo.input, "CSV label,value,u");
    cm->add_option("--reference", cmpo.reference, "Row index of the reference");
    cm->add_option("--mode", cmpo.mode, "own or combined");
    cm->callback([&] { run = [&] { cmd_compare(cmpo); }; });

    AdevOpts ao;
    auto* ad = app.add_subcommand("adev", "Overlapping Allan deviation of a counter log");
    ad->add_option("--input", ao.input, "CSV t_s,f_hz")->required();
    ad->add_option("--tau-list", ao.taus, "Comma-separated averaging times (s)");
    ad->add_option("--carrier-hz", ao.carrier, "Carrier for fractional conversion (default: mean)");
    ad->callback([&] { run = [&] { cmd_adev(ao); }; });

    DfgOpts dfo;
    auto* dg = app.add_subcommand("dfg", "Difference frequency from comb parameters");
    dg->add_option("--input", dfo.input, "Comb JSON");
    dg->add_option("--maser-offset", dfo.maser_offset, "Fractional maser offset");
    dg->callback([&] { run = [&] { cmd_dfg(dfo); }; });

    CarrierOpts cao;
    auto* ca = app.add_subcommand("carrier", "Resolved-carrier strength");
    ca->add_option("--lambda-um", cao.lambda, "Wavelength (um)");
    ca->add_option("--delta-rho-um", cao.delta_rho, "Radial spread (um)");
    ca->add_option("--sweep", cao.sweep, "min,max,points for a CSV sweep");
    ca->callback([&] { run = [&] { cmd_carrier(cao); }; });

    bool strict = false;
    auto* rp = app.add_subcommand("reproduce-paper", "Run the chain on bundled inputs and check published values");
    rp->add_flag("--strict", strict, "Exit 1 when any check fails");
    rp->callback([&] { run = [&] { cmd_reproduce(strict); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        run();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
