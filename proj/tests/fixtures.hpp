#pragma once

// Shared test inputs. The coefficient set is a rough, rounded stand-in for
// real ab initio values: good enough to exercise the algebra, not to
// reproduce published spin frequencies.

#include <string>

#include "hdplus/angular.hpp"

namespace testing {

inline std::string coefficient_text() {
    return "# rough values, kHz\n"
           "[v=0,N=0]\n"
           "E4 = 925394.2\n"
           "E5 = 142287.5\n"
           "\n"
           "[v=1,N=1]\n"
           "E1 = 31985\nE2 = -31.3\nE3 = -4.8\nE4 = 924568\nE5 = 142157\n"
           "E6 = 8650\nE7 = 1320\nE8 = -3.0\nE9 = 2.9\n";
}

inline hdplus::angular::HfsOptions dominant() {
    hdplus::angular::HfsOptions o;
    o.labels.mode = hdplus::angular::LabelMode::dominant;
    return o;
}

inline hdplus::angular::HyperfineCoefficients lower_coefficients() {
    return hdplus::angular::parse_coefficients(coefficient_text()).at({0, 0});
}

inline hdplus::angular::HyperfineCoefficients upper_coefficients() {
    return hdplus::angular::parse_coefficients(coefficient_text()).at({1, 1});
}

inline hdplus::angular::LevelStructure solve_upper() {
    return hdplus::angular::solve_level(upper_coefficients(), dominant());
}

inline hdplus::angular::SensitivityTable sensitivity_table() {
    const auto lower = hdplus::angular::solve_level(lower_coefficients(), dominant());
    return hdplus::angular::build_sensitivity_table(lower, solve_upper(),
                                                    hdplus::angular::known_transitions());
}

}  // namespace testing
