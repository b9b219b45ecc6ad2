#include "hdplus/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::lineshape {

namespace {

struct Moments {
    double mean = 0.0;
    std::optional<double> sem;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    if (x.size() > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - m.mean) * (v - m.mean);
        const double n = static_cast<double>(x.size());
        m.sem = std::sqrt(ss / (n - 1.0) / n);
    }
    return m;
}

double median(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace

std::vector<SpectrumPoint> build_spectrum(const std::vector<DecayRecord>& records) {
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
        if (!std::isfinite(r.detuning_khz)) throw InputError("non-finite detuning");
        if (!(r.depletion >= 0.0 && r.depletion <= 1.0)) {
            throw InputError("depletion " + text_util::format_double(r.depletion) +
                             " outside [0, 1] in run '" + r.run_id + "'");
        }
        auto& g = groups[r.detuning_khz];
        (r.laser_on ? g.first : g.second).push_back(r.depletion);
    }
    std::vector<SpectrumPoint> out;
    for (const auto& [det, g] : groups) {
        if (g.first.empty() || g.second.empty()) {
            throw InputError("detuning " + text_util::format_double(det) + " kHz has no " +
                             (g.first.empty() ? "laser-on" : "background") + " records");
        }
        const Moments on = moments(g.first);
        const Moments off = moments(g.second);
        SpectrumPoint p;
        p.detuning_khz = det;
        p.signal = on.mean - off.mean;
        if (on.sem && off.sem) p.sem = std::hypot(*on.sem, *off.sem);
        out.push_back(p);
    }
    return out;
}

std::vector<DecayRecord> parse_decay_records(const std::string& csv_text) {
    const auto t = text_util::parse_csv(csv_text, {"detuning_khz", "run_id", "laser_on", "depletion"});
    const auto cd = t.column("detuning_khz");
    const auto cr = t.column("run_id");
    const auto cl = t.column("laser_on");
    const auto cp = t.column("depletion");
    std::vector<DecayRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "decay CSV line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        DecayRecord r;
        r.detuning_khz = text_util::parse_double(row[cd], where);
        r.run_id = row[cr];
        const auto flag = text_util::parse_integer(row[cl], where);
        if (flag != 0 && flag != 1) throw ParseError(where + ": laser_on must be 0 or 1");
        r.laser_on = flag == 1;
        r.depletion = text_util::parse_double(row[cp], where);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SpectrumPoint> parse_spectrum(const std::string& csv_text) {
    const auto t = text_util::parse_csv(csv_text, {"detuning_khz", "signal", "sem"});
    const auto cd = t.column("detuning_khz");
    const auto cs = t.column("signal");
    const auto ce = t.column("sem");
    std::vector<SpectrumPoint> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "spectrum CSV line " + std::to_string(t.line_numbers[i]);
        const auto& row = t.rows[i];
        SpectrumPoint p;
        p.detuning_khz = text_util::parse_double(row[cd], where);
        p.signal = text_util::parse_double(row[cs], where);
        if (!row[ce].empty()) {
            p.sem = text_util::parse_double(row[ce], where);
            if (*p.sem < 0.0) throw ParseError(where + ": negative sem");
        }
        out.push_back(p);
    }
    return out;
}

std::string spectrum_csv(const std::vector<SpectrumPoint>& points) {
    std::ostringstream os;
    os << "detuning_khz,signal,sem\n";
    for (const auto& p : points) {
        os << text_util::format_double(p.detuning_khz) << ',' << text_util::format_double(p.signal)
           << ',' << (p.sem ? text_util::format_double(*p.sem) : "") << '\n';
    }
    return os.str();
}

double lorentzian(double detuning, const LineFit& p) {
    const double h = 0.25 * p.fwhm * p.fwhm;
    const double d = detuning - p.center;
    return p.offset + p.polarity * p.amplitude * h / (d * d + h);
}

LineFit initial_guess(const std::vector<SpectrumPoint>& points) {
    if (points.empty()) throw InputError("empty spectrum");
    std::vector<SpectrumPoint> pts = points;
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.detuning_khz < b.detuning_khz; });
    const std::size_t n = pts.size();
    const std::size_t q = std::max<std::size_t>(1, (n + 3) / 4);
    std::vector<double> outer;
    for (std::size_t i = 0; i < q; ++i) {
        outer.push_back(pts[i].signal);
        outer.push_back(pts[n - 1 - i].signal);
    }
    const double base = median(outer);
    auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.signal < b.signal;
    });

    LineFit g;
    // A dip is a peak whose minimum departs further from the baseline.
    g.polarity = (base - lo->signal) > (hi->signal - base) ? -1 : +1;
    g.center = (g.polarity > 0 ? hi : lo)->detuning_khz;
    g.fwhm = 0.5 * (pts.back().detuning_khz - pts.front().detuning_khz);
    g.amplitude = hi->signal - lo->signal;
    g.offset = base;
    return g;
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Problem {
    Vec x, y, sw;  // detunings, signals (polarity applied), sqrt weights
};

Vec residuals(const Problem& pr, const Eigen::Vector4d& p) {
    const double h = 0.25 * p(1) * p(1);
    Vec r(pr.x.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double d = pr.x(i) - p(0);
        r(i) = pr.sw(i) * (pr.y(i) - (p(3) + p(2) * h / (d * d + h)));
    }
    return r;
}

// Jacobian of the model (not the residual), weighted.
Mat jacobian(const Problem& pr, const Eigen::Vector4d& p) {
    const double h = 0.25 * p(1) * p(1);
    Mat j(pr.x.size(), 4);
    for (Eigen::Index i = 0; i < j.rows(); ++i) {
        const double d = pr.x(i) - p(0);
        const double den = d * d + h;
        const double den2 = den * den;
        j(i, 0) = p(2) * h * 2.0 * d / den2;
        j(i, 1) = p(2) * 0.5 * p(1) * d * d / den2;
        j(i, 2) = h / den;
        j(i, 3) = 1.0;
        j.row(i) *= pr.sw(i);
    }
    return j;
}

}  // namespace

LineFit fit_lorentzian(const std::vector<SpectrumPoint>& points, const std::optional<LineFit>& init,
                       const FitOptions& opts) {
    if (points.size() < 5) throw InputError("Lorentzian fit needs at least 5 points");
    auto [lo, hi] = std::minmax_element(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.signal < b.signal;
    });
    if (!(hi->signal > lo->signal)) throw LowSignalError("flat spectrum, no line to fit");

    const LineFit start = init ? *init : initial_guess(points);
    double xmin = points.front().detuning_khz;
    double xmax = xmin;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.detuning_khz);
        xmax = std::max(xmax, p.detuning_khz);
    }
    if (!(start.fwhm > 0.0)) throw InputError("initial FWHM must be positive");
    if (!(xmax - xmin > start.fwhm)) {
        throw InputError("detuning span does not cover one initial FWHM");
    }

    bool weighted = true;
    for (const auto& p : points) {
        if (!p.sem || !(*p.sem > 0.0)) weighted = false;
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    Problem pr{Vec(n), Vec(n), Vec(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        pr.x(i) = p.detuning_khz;
        pr.y(i) = start.polarity * p.signal;  // fit an upward peak
        pr.sw(i) = weighted ? 1.0 / *p.sem : 1.0;
    }

    Eigen::Vector4d p(start.center, start.fwhm, start.amplitude, start.polarity * start.offset);
    Vec r = residuals(pr, p);
    double cost = r.squaredNorm();
    double lambda = opts.initial_damping;

    LineFit fit;
    fit.polarity = start.polarity;
    fit.weighted = weighted;
    fit.cost_trace.push_back(cost);

    for (int it = 1; it <= opts.max_iterations && !fit.converged; ++it) {
        fit.iterations = it;
        const Mat j = jacobian(pr, p);
        const Eigen::Matrix4d jtj = j.transpose() * j;
        const Eigen::Vector4d g = j.transpose() * r;
        while (true) {
            Eigen::Matrix4d a = jtj;
            a.diagonal() += lambda * jtj.diagonal();
            const Eigen::Vector4d step = a.ldlt().solve(g);
            if (!step.allFinite()) throw FitError("Lorentzian fit: singular normal matrix");
            if (step.norm() < opts.step_tolerance) {
                fit.converged = true;
                break;
            }
            const Eigen::Vector4d trial = p + step;
            const Vec rt = residuals(pr, trial);
            const double ct = rt.squaredNorm();
            if (std::isfinite(ct) && ct <= cost) {
                const double rel = cost > 0.0 ? (cost - ct) / cost : 0.0;
                p = trial;
                r = rt;
                cost = ct;
                fit.cost_trace.push_back(cost);
                lambda = std::max(lambda * 0.1, 1e-15);
                if (rel < opts.cost_tolerance) fit.converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e20) {
                // No downhill direction left at working precision.
                fit.converged = true;
                break;
            }
        }
    }
    if (!fit.converged) {
        std::ostringstream os;
        os << "Lorentzian fit did not converge in " << opts.max_iterations
           << " iterations; last costs:";
        const std::size_t k = fit.cost_trace.size();
        for (std::size_t i = k > 5 ? k - 5 : 0; i < k; ++i) os << ' ' << fit.cost_trace[i];
        throw FitError(os.str());
    }

    fit.center = p(0);
    fit.fwhm = std::abs(p(1));
    fit.amplitude = p(2);
    fit.offset = fit.polarity * p(3);
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.polarity = -fit.polarity;
    }
    fit.chi_square = cost;
    fit.residual_norm = std::sqrt(cost);
    fit.dof = static_cast<int>(n) - 4;

    const Mat j = jacobian(pr, p);
    const Eigen::Matrix4d normal = j.transpose() * j;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(normal);
    if (!lu.isInvertible()) throw FitError("Lorentzian fit: singular covariance at optimum");
    fit.covariance = lu.inverse();
    if (fit.dof > 0) fit.covariance *= cost / fit.dof;
    // The sign flips of fwhm and offset leave variances unchanged; restore
    // the matching covariance signs.
    Eigen::Vector4d s(1.0, p(1) < 0 ? -1.0 : 1.0, 1.0, static_cast<double>(start.polarity));
    if (p(2) < 0.0) s(2) = -1.0;
    fit.covariance = s.asDiagonal() * fit.covariance * s.asDiagonal();

    if (fit.amplitude < opts.low_signal_sigmas * fit.sigma(2) || fit.amplitude == 0.0) {
        throw LowSignalError("fitted amplitude " + text_util::format_double(fit.amplitude) +
                             " is consistent with zero (sigma " +
                             text_util::format_double(fit.sigma(2)) + ")");
    }
    return fit;
}

Quantity line_frequency(const LineFit& fit, double absolute_offset_khz) {
    if (!fit.converged) throw FitError("line frequency requested from an unconverged fit");
    return Quantity(absolute_offset_khz + fit.center, "kHz", {{component::exp, 0.5 * fit.fwhm}});
}

double resolution(double frequency_khz, double fwhm_khz) {
    if (!(fwhm_khz > 0.0)) throw InputError("FWHM must be positive");
    return frequency_khz / fwhm_khz;
}

void to_json(nlohmann::json& j, const LineFit& f) {
    nlohmann::json cov = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(f.covariance(r, c));
        cov.push_back(row);
    }
    j = nlohmann::json{{"center_khz", f.center},       {"fwhm_khz", f.fwhm},
                       {"amplitude", f.amplitude},     {"offset", f.offset},
                       {"polarity", f.polarity},       {"covariance", cov},
                       {"chi_square", f.chi_square},   {"residual_norm", f.residual_norm},
                       {"dof", f.dof},                 {"iterations", f.iterations},
                       {"converged", f.converged},     {"weighted", f.weighted}};
}

}  // namespace hdplus::lineshape
