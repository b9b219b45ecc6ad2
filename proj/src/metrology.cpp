#include "hdplus/metrology.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::metrology {

void CombParams::validate() const {
    if (!(f_rep > 0.0) || !std::isfinite(f_rep)) throw InputError("f_rep must be positive");
    if (!std::isfinite(f_ceo)) throw InputError("f_ceo must be finite");
    for (const auto& l : lasers) {
        if (l.mode <= 0) throw InputError("comb mode numbers must be positive");
        if (std::abs(l.beat_sign) != 1 || std::abs(l.ceo_sign) != 1) {
            throw InputError("comb signs must be +1 or -1");
        }
        if (!std::isfinite(l.f_beat)) throw InputError("beat frequency must be finite");
    }
}

double laser_frequency(const CombParams& comb, std::size_t index) {
    comb.validate();
    if (index >= comb.lasers.size()) throw InputError("laser index out of range");
    const auto& l = comb.lasers[index];
    return static_cast<double>(l.mode) * comb.f_rep + l.ceo_sign * comb.f_ceo + l.beat_sign * l.f_beat;
}

double dfg_frequency(const CombParams& comb, std::size_t first, std::size_t second) {
    comb.validate();
    if (first >= comb.lasers.size() || second >= comb.lasers.size()) {
        throw InputError("laser index out of range");
    }
    const auto& a = comb.lasers[first];
    const auto& b = comb.lasers[second];
    if (a.ceo_sign != b.ceo_sign) {
        throw ConfigError("lasers use different f_ceo signs; the offset would not cancel");
    }
    return static_cast<double>(a.mode - b.mode) * comb.f_rep + a.beat_sign * a.f_beat -
           b.beat_sign * b.f_beat;
}

double maser_correct(double f_hz, double fractional_offset) {
    if (!(std::abs(fractional_offset) < 1e-9)) {
        throw InputError("maser fractional offset outside the plausibility window |x| < 1e-9");
    }
    return f_hz * (1.0 - fractional_offset);
}

FrequencyTimeSeries parse_counter_log(const std::string& csv_text, std::optional<double> carrier_hz) {
    const auto t = text_util::parse_csv(csv_text, {"t_s", "f_hz"});
    const auto ct = t.column("t_s");
    const auto cf = t.column("f_hz");
    std::vector<double> times;
    std::vector<double> f;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string where = "counter log line " + std::to_string(t.line_numbers[i]);
        times.push_back(text_util::parse_double(t.rows[i][ct], where));
        f.push_back(text_util::parse_double(t.rows[i][cf], where));
    }
    if (f.size() < 2) throw InputError("counter log needs at least 2 samples");
    FrequencyTimeSeries s;
    s.tau0 = times[1] - times[0];
    if (!(s.tau0 > 0.0)) throw InputError("counter log timestamps must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - s.tau0) > 1e-6 * s.tau0) {
            throw InputError("counter log is not uniformly sampled at t = " +
                             text_util::format_double(times[i]) + " s");
        }
    }
    const double carrier =
        carrier_hz.value_or(std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size()));
    if (!(carrier > 0.0)) throw InputError("carrier frequency must be positive");
    for (double x : f) s.y.push_back((x - carrier) / carrier);
    return s;
}

double white_fm_edf(std::size_t n_phase, std::size_t m) {
    const double n = static_cast<double>(n_phase);
    const double mm = static_cast<double>(m);
    return (3.0 * (n - 1.0) / (2.0 * mm) - 2.0 * (n - 2.0) / n) * 4.0 * mm * mm / (4.0 * mm * mm + 5.0);
}

std::vector<AdevPoint> allan_deviation(const FrequencyTimeSeries& series, const std::vector<double>& taus) {
    if (!(series.tau0 > 0.0)) throw InputError("sample interval must be positive");
    const std::size_t n = series.y.size();
    if (n < 2) throw InputError("Allan deviation needs at least 2 samples");

    // Phase (time error) data x_k = tau0 * sum_{i<k} y_i, n + 1 points.
    std::vector<double> x(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i + 1] = x[i] + series.tau0 * series.y[i];

    constexpr double p68 = 0.682689492137086;
    std::vector<AdevPoint> out;
    for (double tau : taus) {
        const double ratio = tau / series.tau0;
        const auto m = static_cast<std::size_t>(std::llround(ratio));
        if (m == 0 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio) {
            throw InputError("tau = " + text_util::format_double(tau) +
                             " s is not an integer multiple of tau0");
        }
        if (2 * m > n) {
            throw InputError("tau = " + text_util::format_double(tau) +
                             " s leaves fewer than 2 averaging bins");
        }
        const std::size_t terms = n + 1 - 2 * m;
        double acc = 0.0;
        for (std::size_t k = 0; k < terms; ++k) {
            const double d = x[k + 2 * m] - 2.0 * x[k + m] + x[k];
            acc += d * d;
        }
        const double mt = static_cast<double>(m) * series.tau0;
        AdevPoint p;
        p.tau = mt;
        p.adev = std::sqrt(acc / (2.0 * mt * mt * static_cast<double>(terms)));
        p.edf = white_fm_edf(n + 1, m);
        if (p.edf > 0.0) {
            const boost::math::chi_squared chi(p.edf);
            p.ci_low = p.adev * std::sqrt(p.edf / boost::math::quantile(chi, 0.5 + 0.5 * p68));
            p.ci_high = p.adev * std::sqrt(p.edf / boost::math::quantile(chi, 0.5 - 0.5 * p68));
        } else {
            p.ci_low = 0.0;
            p.ci_high = INFINITY;
        }
        out.push_back(p);
    }
    return out;
}

std::vector<double> default_taus(const FrequencyTimeSeries& series) {
    std::vector<double> taus;
    for (std::size_t m = 1; 2 * m <= series.y.size(); m *= 2) {
        taus.push_back(static_cast<double>(m) * series.tau0);
    }
    return taus;
}

double drift_adev(double drift_per_s, double tau) { return std::abs(drift_per_s) * tau / std::sqrt(2.0); }

std::string adev_csv(const std::vector<AdevPoint>& points) {
    std::ostringstream os;
    os << "tau_s,adev,ci_low,ci_high\n";
    for (const auto& p : points) {
        os << text_util::format_double(p.tau) << ',' << text_util::format_double(p.adev) << ','
           << text_util::format_double(p.ci_low) << ',' << text_util::format_double(p.ci_high) << '\n';
    }
    return os.str();
}

}  // namespace hdplus::metrology
