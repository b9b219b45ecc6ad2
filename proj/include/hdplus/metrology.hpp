#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hdplus::metrology {

struct CombLaser {
    long long mode = 0;     // n_i
    double f_beat = 0.0;    // Hz
    int beat_sign = +1;
    int ceo_sign = +1;
};

struct CombParams {
    double f_rep = 0.0;  // Hz
    double f_ceo = 0.0;  // Hz
    std::vector<CombLaser> lasers;

    void validate() const;
};

/// n f_rep + s_ceo f_ceo + s_beat f_beat for laser `index`.
double laser_frequency(const CombParams& comb, std::size_t index);

/// f1 - f2 = (n1 - n2) f_rep + s1 fb1 - s2 fb2. f_ceo never enters, so the
/// result is bit-identical for any f_ceo. Throws ConfigError when the two
/// lasers use different ceo signs.
double dfg_frequency(const CombParams& comb, std::size_t first = 0, std::size_t second = 1);

/// f (1 - x) for a reference running fast by the fraction x.
/// Throws InputError for |x| >= 1e-9.
double maser_correct(double f_hz, double fractional_offset);

struct FrequencyTimeSeries {
    double tau0 = 1.0;           // s
    std::vector<double> y;       // fractional frequency
};

/// CSV columns t_s, f_hz. Samples become (f - carrier) / carrier; the mean
/// is used as carrier when none is given. Sampling must be uniform.
FrequencyTimeSeries parse_counter_log(const std::string& csv_text,
                                      std::optional<double> carrier_hz = std::nullopt);

struct AdevPoint {
    double tau = 0.0;
    double adev = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double edf = 0.0;
};

/// Equivalent degrees of freedom of the overlapping estimator for white
/// frequency noise with n phase points and averaging factor m.
double white_fm_edf(std::size_t n_phase, std::size_t m);

/// Overlapping Allan deviation with a 68 % chi-squared interval. Each tau
/// must be an integer multiple m of tau0 with 2m <= number of samples.
std::vector<AdevPoint> allan_deviation(const FrequencyTimeSeries& series,
                                       const std::vector<double>& taus);

/// Octave-spaced taus from tau0 up to half the span.
std::vector<double> default_taus(const FrequencyTimeSeries& series);

/// Closed form for a linear fractional drift d (1/s): d tau / sqrt(2).
double drift_adev(double drift_per_s, double tau);

std::string adev_csv(const std::vector<AdevPoint>& points);

}  // namespace hdplus::metrology
