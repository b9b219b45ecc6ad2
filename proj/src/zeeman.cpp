#include "hdplus/zeeman.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/fitting.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::zeeman {

using angular::ProductBasis;
using angular::Slot;
using angular::Vector;

void ZeemanCouplings::validate() const {
    for (double x : {c_e, c_p, c_d, c_n}) {
        if (!std::isfinite(x)) throw InputError("Zeeman couplings must be finite");
    }
}

ZeemanCouplings default_couplings() {
    // g * mu_B / h and -g * mu_N / h in kHz/G (2018 constants); the
    // rotational term is set to the stretched-state linear coefficient.
    return ZeemanCouplings{2802.4951, -4.2577, -0.65359, -0.55};
}

ZeemanCouplings parse_couplings(const std::string& text) {
    ZeemanCouplings c = default_couplings();
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = text_util::trim(text_util::strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = "couplings line " + std::to_string(line_no);
        auto [key, value] = text_util::split_key_value(line, where);
        if (!seen.insert(key).second) throw ParseError(where + ": duplicate key '" + key + "'");
        const double x = text_util::parse_double(value, where);
        if (key == "c_e") {
            c.c_e = x;
        } else if (key == "c_p") {
            c.c_p = x;
        } else if (key == "c_d") {
            c.c_d = x;
        } else if (key == "c_N") {
            c.c_n = x;
        } else {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

ZeemanCouplings load_couplings(const std::string& path) {
    return parse_couplings(text_util::read_file(path));
}

Matrix zeeman_operator(const ZeemanCouplings& c, const ProductBasis& basis) {
    c.validate();
    Matrix z = c.c_e * angular::embed(basis.momentum(Slot::electron).jz, Slot::electron, basis);
    z += c.c_p * angular::embed(basis.momentum(Slot::proton).jz, Slot::proton, basis);
    z += c.c_d * angular::embed(basis.momentum(Slot::deuteron).jz, Slot::deuteron, basis);
    z += c.c_n * angular::embed(basis.momentum(Slot::rotation).jz, Slot::rotation, basis);
    return z;
}

Matrix build_zeeman(const ZeemanCouplings& c, double b_gauss, const ProductBasis& basis) {
    if (!std::isfinite(b_gauss) || b_gauss < 0.0) {
        throw InputError("magnetic field must be finite and >= 0 G");
    }
    return b_gauss * zeeman_operator(c, basis);
}

std::string to_string(const StateLabel& s) {
    return angular::to_string(s.level) + "[mF=" + std::to_string(s.m_f) + "]";
}

const TrackedState& ZeemanMap::state(const StateLabel& label) const {
    for (const auto& s : states) {
        if (s.label == label) return s;
    }
    throw LookupError("state " + to_string(label) + " not in Zeeman map");
}

std::vector<double> default_grid() { return {0.0, 0.05, 0.1, 0.15, 0.2}; }

namespace {

// One m_F block of the product space with its field-free eigenbasis.
struct Block {
    int m_f = 0;
    std::vector<int> indices;
    Matrix h;   // hyperfine part restricted to the block
    Matrix z;   // Zeeman operator per gauss restricted to the block
    std::vector<StateLabel> labels;
    std::vector<double> energies;  // field-free
    Matrix vectors;                // block-local columns
};

Matrix restrict(const Matrix& m, const std::vector<int>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Matrix r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) r(i, j) = m(idx[i], idx[j]);
    }
    return r;
}

void fix_sign(Eigen::Ref<Vector> v) {
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
}

std::vector<Block> field_free_blocks(const angular::LevelStructure& level, const Matrix& zop) {
    const auto& basis = level.basis;
    std::map<int, std::vector<int>> by_m;
    for (int i = 0; i < basis.dim(); ++i) {
        by_m[static_cast<int>(std::lround(basis.total_m(i)))].push_back(i);
    }
    std::vector<Block> blocks;
    for (auto& [m, idx] : by_m) {
        Block b;
        b.m_f = m;
        b.indices = idx;
        b.h = restrict(level.hamiltonian, idx);
        b.z = restrict(zop, idx);
        b.vectors = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), 0);
        for (const auto& lv : level.levels) {
            if (!lv.label) {
                throw ClassificationError(
                    "Zeeman map needs labeled field-free levels; found an unlabeled "
                    "degenerate manifold at E = " + std::to_string(lv.energy) + " kHz");
            }
            if (lv.label->f < std::abs(m)) continue;
            const Matrix p = restrict(lv.vectors * lv.vectors.transpose(), idx);
            Eigen::SelfAdjointEigenSolver<Matrix> es(p);
            const auto top = p.rows() - 1;
            if (std::abs(es.eigenvalues()(top) - 1.0) > 1e-8) {
                throw ClassificationError("level " + angular::to_string(*lv.label) +
                                                   " is not a single F multiplet");
            }
            Vector v = es.eigenvectors().col(top);
            fix_sign(v);
            b.vectors.conservativeResize(Eigen::NoChange, b.vectors.cols() + 1);
            b.vectors.col(b.vectors.cols() - 1) = v;
            b.labels.push_back({*lv.label, m});
            b.energies.push_back(lv.energy);
        }
        if (b.vectors.cols() != static_cast<Eigen::Index>(idx.size())) {
            throw ClassificationError("m_F = " + std::to_string(m) +
                                               " block is not spanned by the labeled levels");
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

}  // namespace

ZeemanMap zeeman_map(const angular::LevelStructure& level, const ZeemanCouplings& c,
                     const std::vector<double>& grid, const MapOptions& opts) {
    if (grid.empty() || grid.front() != 0.0) throw InputError("Zeeman grid must start at B = 0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i])) {
            throw InputError("Zeeman grid must be strictly increasing");
        }
    }
    const Matrix zop = zeeman_operator(c, level.basis);
    auto blocks = field_free_blocks(level, zop);

    ZeemanMap map;
    map.fields = grid;
    for (auto& b : blocks) {
        const auto n = b.vectors.cols();
        std::vector<TrackedState> states(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            states[i].label = b.labels[i];
            states[i].energies.reserve(grid.size());
            states[i].energies.push_back(b.energies[i]);
        }
        Matrix prev = b.vectors;
        for (std::size_t g = 1; g < grid.size(); ++g) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(b.h + grid[g] * b.z);
            const Matrix overlap = (prev.transpose() * es.eigenvectors()).cwiseAbs();
            Matrix next(prev.rows(), n);
            std::vector<bool> taken(static_cast<std::size_t>(n), false);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index j = 0;
                const double best = overlap.row(i).maxCoeff(&j);
                if (best <= opts.min_overlap || taken[j]) {
                    std::ostringstream os;
                    os << "lost track of " << to_string(states[i].label) << " at B = " << grid[g]
                       << " G (overlap " << best << "); refine the grid near this field";
                    throw TrackingError(os.str());
                }
                taken[j] = true;
                map.min_overlap = std::min(map.min_overlap, best);
                Vector v = es.eigenvectors().col(j);
                if (prev.col(i).dot(v) < 0) v = -v;
                next.col(i) = v;
                states[i].energies.push_back(es.eigenvalues()(j));
            }
            prev = next;
        }
        for (auto& s : states) map.states.push_back(std::move(s));
    }
    std::sort(map.states.begin(), map.states.end(),
              [](const TrackedState& a, const TrackedState& b) { return a.label < b.label; });
    return map;
}

TransitionZeemanModel transition_coeffs(const ZeemanMap& lower_map, const ZeemanMap& upper_map,
                                        const StateLabel& lower, const StateLabel& upper) {
    if (lower_map.fields != upper_map.fields) {
        throw InputError("transition_coeffs: lower and upper maps use different grids");
    }
    const auto& b = lower_map.fields;
    if (b.size() < 3) throw InputError("transition_coeffs: need at least 3 grid points");
    const auto& el = lower_map.state(lower).energies;
    const auto& eu = upper_map.state(upper).energies;
    // E_m(-B) = E_{-m}(B) for a field along z, so the mirrored substates
    // extend the grid to negative fields. The odd and even parts of the fit
    // then decouple and m_F = 0 lines get an exactly vanishing linear term.
    const auto& el_m = lower_map.state({lower.level, -lower.m_f}).energies;
    const auto& eu_m = upper_map.state({upper.level, -upper.m_f}).energies;
    const double f_zero = eu[0] - el[0];

    const auto n = static_cast<Eigen::Index>(b.size());
    Matrix design(2 * n - 1, 2);
    Vector y(2 * n - 1);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int sign : {+1, -1}) {
            if (i == 0 && sign < 0) continue;
            const double field = sign * b[i];
            design(row, 0) = field;
            design(row, 1) = field * field;
            y(row) = (sign > 0 ? eu[i] - el[i] : eu_m[i] - el_m[i]) - f_zero;
            ++row;
        }
    }
    const auto fit = fitting::linear_least_squares(design, y, std::nullopt);
    return {fit.params(0), fit.params(1), b.back()};
}

PerturbativeShift perturbative_shift(const angular::LevelStructure& level, const ZeemanCouplings& c,
                                     const StateLabel& state) {
    const Matrix zop = zeeman_operator(c, level.basis);
    for (const auto& b : field_free_blocks(level, zop)) {
        if (b.m_f != state.m_f) continue;
        const auto it = std::find(b.labels.begin(), b.labels.end(), state);
        if (it == b.labels.end()) break;
        const auto s = static_cast<Eigen::Index>(it - b.labels.begin());
        const Matrix zb = b.vectors.transpose() * b.z * b.vectors;
        PerturbativeShift out;
        out.linear = zb(s, s);
        for (Eigen::Index k = 0; k < zb.rows(); ++k) {
            if (k == s) continue;
            out.quadratic += zb(k, s) * zb(k, s) / (b.energies[s] - b.energies[k]);
        }
        return out;
    }
    throw LookupError("state " + to_string(state) + " not found among field-free levels");
}

ZeroFieldFit extrapolate_to_zero_field(const std::vector<FieldPoint>& points) {
    if (points.size() < 3) throw InputError("zero-field extrapolation needs at least 3 points");
    std::set<double> seen;
    bool weighted = true;
    const std::string& unit = points.front().f.unit();
    for (const auto& p : points) {
        if (!std::isfinite(p.b_gauss) || p.b_gauss < 0.0) {
            throw InputError("field values must be finite and >= 0 G");
        }
        if (!seen.insert(p.b_gauss).second) {
            throw SingularFitError("duplicate field value " + text_util::format_double(p.b_gauss) +
                                   " G makes the design matrix singular");
        }
        if (p.f.unit() != unit) throw InputError("zero-field extrapolation: unit mismatch");
        if (!(p.f.u(component::exp) > 0.0)) weighted = false;
    }

    // Fit relative to the first point so that 11-digit frequencies do not
    // cancel inside the normal equations.
    const double ref = points.front().f.value();
    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix design(n, 2);
    Vector y(n);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = p.b_gauss * p.b_gauss;
        y(i) = p.f.value() - ref;
        const double u = p.f.u(component::exp);
        w(i) = weighted ? 1.0 / (u * u) : 1.0;
    }
    const auto fit = fitting::linear_least_squares(
        design, y, weighted ? std::optional<Vector>(w) : std::nullopt);

    ZeroFieldFit out;
    out.weighted = weighted;
    out.f0 = Quantity(ref + fit.params(0), unit, {{component::exp, std::sqrt(fit.covariance(0, 0))}});
    out.curvature = fit.params(1);
    out.u_curvature = std::sqrt(fit.covariance(1, 1));
    return out;
}

std::vector<FieldPoint> parse_field_points(const std::string& csv_text) {
    const auto table = text_util::parse_csv(csv_text, {"B_gauss", "f_khz", "u_khz"});
    const auto cb = table.column("B_gauss");
    const auto cf = table.column("f_khz");
    const auto cu = table.column("u_khz");
    std::vector<FieldPoint> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = "field CSV line " + std::to_string(table.line_numbers[r]);
        const auto& row = table.rows[r];
        FieldPoint p;
        p.b_gauss = text_util::parse_double(row[cb], where);
        const double u = text_util::parse_double(row[cu], where);
        if (u < 0.0) throw ParseError(where + ": negative uncertainty");
        p.f = Quantity(text_util::parse_double(row[cf], where), "kHz", {{component::exp, u}});
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace hdplus::zeeman
