#pragma once

// Loading of bundled inputs and the end-to-end reproduction table.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdplus/angular.hpp"
#include "hdplus/quantity.hpp"
#include "hdplus/systematics.hpp"

namespace hdplus::pipeline {

/// transition -> corrected frequency (exp component). CSV transition, f_khz, u_exp_khz.
std::map<std::string, Quantity> load_lines(const std::string& path);

/// transition -> spin shift (theor_spin component). CSV transition, f_spin_khz, u_spin_khz.
std::map<std::string, Quantity> load_spin_theory(const std::string& path);

struct LedgerInput {
    Quantity raw;
    std::vector<systematics::ShiftEntry> entries;
};

/// JSON {"raw": Quantity, "entries": [ShiftEntry...]}.
LedgerInput load_ledger(const std::string& path);

/// Coefficient file from $HDPLUS_COEFFICIENTS, else data_dir/coefficients.ini
/// when it exists and defines both levels.
std::optional<std::string> find_coefficients(const std::string& data_dir);

/// Level structures of (v=0,N=0) and (v=1,N=1) labeled by dominant coupling.
struct BandStructure {
    angular::LevelStructure lower;
    angular::LevelStructure upper;
};

BandStructure solve_band(const angular::CoefficientSet& coeffs);

enum class Status { pass, fail, skip };

std::string to_string(Status s);

struct Anchor {
    std::string id;
    std::string description;
    double computed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    Status status = Status::skip;
    std::string detail;
};

/// Checks |computed - expected| <= tolerance.
Anchor check(std::string id, std::string description, double computed, double expected,
             double tolerance);
Anchor skipped(std::string id, std::string description, std::string reason);

/// Runs the chain on the bundled inputs and compares every published
/// number that the inputs allow to recompute.
std::vector<Anchor> reproduce_paper(const std::string& data_dir, const std::string& profile = "codata2018");

}  // namespace hdplus::pipeline
