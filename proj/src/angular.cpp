#include "hdplus/angular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "hdplus/errors.hpp"
#include "hdplus/text_util.hpp"

namespace hdplus::angular {

// ---------------------------------------------------------------------------
// Single angular momentum

Matrix AngularMomentumSet::casimir() const {
    return jz * jz + 0.5 * (jplus * jminus + jminus * jplus);
}

AngularMomentumSet jmatrices(double j) {
    const double twice = 2.0 * j;
    const double rounded = std::round(twice);
    if (!(j >= 0.0) || std::abs(twice - rounded) > 1e-12) {
        std::ostringstream os;
        os << "jmatrices: j = " << j << " is not a non-negative half-integer";
        throw InputError(os.str());
    }
    AngularMomentumSet s;
    s.two_j = static_cast<int>(rounded);
    const int d = s.two_j + 1;
    const double jj = 0.5 * s.two_j;
    s.jz = Matrix::Zero(d, d);
    s.jplus = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double m = jj - i;
        s.jz(i, i) = m;
        if (i > 0) s.jplus(i - 1, i) = std::sqrt(jj * (jj + 1.0) - m * (m + 1.0));
    }
    s.jminus = s.jplus.transpose();
    return s;
}

// ---------------------------------------------------------------------------
// Product basis

ProductBasis::ProductBasis(int rotational_n) : n_(rotational_n) {
    if (rotational_n < 0) throw InputError("ProductBasis: N must be >= 0");
    sets_ = {jmatrices(0.5), jmatrices(0.5), jmatrices(1.0), jmatrices(rotational_n)};
    for (int s = 0; s < 4; ++s) dims_[s] = sets_[s].dim();
    dim_ = dims_[0] * dims_[1] * dims_[2] * dims_[3];
}

namespace {

std::array<int, 4> strides(const ProductBasis& b) {
    std::array<int, 4> st{};
    st[3] = 1;
    for (int s = 2; s >= 0; --s) st[s] = st[s + 1] * b.slot_dim(all_slots[s + 1]);
    return st;
}

}  // namespace

int ProductBasis::index(double m_se, double m_sp, double m_sd, double m_n) const {
    const std::array<double, 4> ms{m_se, m_sp, m_sd, m_n};
    const auto st = strides(*this);
    int idx = 0;
    for (int s = 0; s < 4; ++s) {
        const double offset = sets_[s].j() - ms[s];
        const double r = std::round(offset);
        if (std::abs(offset - r) > 1e-12 || r < 0 || r >= dims_[s]) {
            std::ostringstream os;
            os << "ProductBasis::index: projection " << ms[s] << " invalid for slot " << s;
            throw InputError(os.str());
        }
        idx += static_cast<int>(r) * st[s];
    }
    return idx;
}

std::array<double, 4> ProductBasis::projections(int index) const {
    const auto st = strides(*this);
    std::array<double, 4> ms{};
    for (int s = 0; s < 4; ++s) {
        const int i = (index / st[s]) % dims_[s];
        ms[s] = sets_[s].j() - i;
    }
    return ms;
}

double ProductBasis::total_m(int index) const {
    const auto ms = projections(index);
    return ms[0] + ms[1] + ms[2] + ms[3];
}

Matrix embed(const Matrix& op, Slot slot, const ProductBasis& basis) {
    const int s = static_cast<int>(slot);
    const int ds = basis.slot_dim(slot);
    if (op.rows() != ds || op.cols() != ds) {
        std::ostringstream os;
        os << "embed: operator is " << op.rows() << "x" << op.cols() << ", slot " << s
           << " needs " << ds << "x" << ds;
        throw InputError(os.str());
    }
    const auto st = strides(basis);
    const int d = basis.dim();
    Matrix out = Matrix::Zero(d, d);
    for (int row = 0; row < d; ++row) {
        const int a = (row / st[s]) % ds;
        const int base = row - a * st[s];
        for (int b = 0; b < ds; ++b) {
            const double v = op(a, b);
            if (v != 0.0) out(row, base + b * st[s]) = v;
        }
    }
    return out;
}

VectorOperator& VectorOperator::operator+=(const VectorOperator& o) {
    z += o.z;
    plus += o.plus;
    minus += o.minus;
    return *this;
}

VectorOperator vector_operator(Slot slot, const ProductBasis& basis) {
    const auto& m = basis.momentum(slot);
    return {embed(m.jz, slot, basis), embed(m.jplus, slot, basis), embed(m.jminus, slot, basis)};
}

Matrix dot(const VectorOperator& a, const VectorOperator& b) {
    return a.z * b.z + 0.5 * (a.plus * b.minus + a.minus * b.plus);
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// Coefficients

std::string to_string(const LevelId& id) {
    return "[v=" + std::to_string(id.v) + ",N=" + std::to_string(id.n) + "]";
}

bool is_rotational_coefficient(int k) { return k != 4 && k != 5; }

double HyperfineCoefficients::e(int k) const { return values.at(k - 1).value_or(0.0); }

bool HyperfineCoefficients::has(int k) const { return values.at(k - 1).has_value(); }

HyperfineCoefficients HyperfineCoefficients::with(int k, double value) const {
    HyperfineCoefficients c = *this;
    c.values.at(k - 1) = value;
    return c;
}

void HyperfineCoefficients::validate() const {
    if (level.n < 0) throw InputError("coefficients: N must be >= 0");
    if (level.n != 0) return;
    for (int k = 1; k <= coefficient_count; ++k) {
        if (is_rotational_coefficient(k) && e(k) != 0.0) {
            throw InputError("coefficients " + to_string(level) + ": E" + std::to_string(k) +
                             " must be absent or zero for N = 0");
        }
    }
}

double default_tensor_normalization(int n) {
    return 1.0 / static_cast<double>((2 * n - 1) * (2 * n + 3));
}

double TensorNormalization::tensor_for(int n) const {
    return tensor.value_or(default_tensor_normalization(n));
}

double TensorNormalization::quadrupole_for(int n) const {
    return quadrupole.value_or(default_tensor_normalization(n));
}

Matrix spin_rotation_term(Slot partner, const ProductBasis& basis) {
    return dot(vector_operator(Slot::rotation, basis), vector_operator(partner, basis));
}

Matrix contact_term(Slot a, Slot b, const ProductBasis& basis) {
    return dot(vector_operator(a, basis), vector_operator(b, basis));
}

Matrix tensor_term(Slot a, Slot b, const ProductBasis& basis, double norm) {
    const auto nv = vector_operator(Slot::rotation, basis);
    const auto av = vector_operator(a, basis);
    const auto bv = vector_operator(b, basis);
    const Matrix n_sq = dot(nv, nv);
    const Matrix na = dot(nv, av);
    const Matrix nb = dot(nv, bv);
    return norm * (2.0 * n_sq * dot(av, bv) - 3.0 * (na * nb + nb * na));
}

Matrix quadrupole_term(const ProductBasis& basis, double norm) {
    const auto nv = vector_operator(Slot::rotation, basis);
    const auto dv = vector_operator(Slot::deuteron, basis);
    const Matrix nd = dot(nv, dv);
    return norm * (2.0 * dot(nv, nv) * dot(dv, dv) - 3.0 * nd - 6.0 * nd * nd);
}

Matrix hfs_operator(int k, const ProductBasis& basis, const TensorNormalization& norm) {
    const int n = basis.n();
    switch (k) {
        case 1: return spin_rotation_term(Slot::electron, basis);
        case 2: return spin_rotation_term(Slot::proton, basis);
        case 3: return spin_rotation_term(Slot::deuteron, basis);
        case 4: return contact_term(Slot::proton, Slot::electron, basis);
        case 5: return contact_term(Slot::deuteron, Slot::electron, basis);
        case 6: return tensor_term(Slot::proton, Slot::electron, basis, norm.tensor_for(n));
        case 7: return tensor_term(Slot::deuteron, Slot::electron, basis, norm.tensor_for(n));
        case 8: return tensor_term(Slot::proton, Slot::deuteron, basis, norm.tensor_for(n));
        case 9: return quadrupole_term(basis, norm.quadrupole_for(n));
        default: throw InputError("hfs_operator: coefficient index must be 1..9");
    }
}

Matrix build_hfs(const HyperfineCoefficients& coeffs, const ProductBasis& basis,
                 const TensorNormalization& norm) {
    coeffs.validate();
    if (coeffs.level.n != basis.n()) {
        throw InputError("build_hfs: coefficients are for N=" + std::to_string(coeffs.level.n) +
                         ", basis has N=" + std::to_string(basis.n()));
    }
    Matrix h = Matrix::Zero(basis.dim(), basis.dim());
    for (int k = 1; k <= coefficient_count; ++k) {
        const double e = coeffs.e(k);
        if (e != 0.0) h += e * hfs_operator(k, basis, norm);
    }
    // The products above are symmetric up to rounding; make it exact.
    return 0.5 * (h + h.transpose());
}

CoupledMomenta coupled_momenta(const ProductBasis& basis) {
    CoupledMomenta c;
    c.g1 = vector_operator(Slot::electron, basis) + vector_operator(Slot::proton, basis);
    c.g2 = c.g1 + vector_operator(Slot::deuteron, basis);
    c.f = c.g2 + vector_operator(Slot::rotation, basis);
    c.g1_sq = dot(c.g1, c.g1);
    c.g2_sq = dot(c.g2, c.g2);
    c.f_sq = dot(c.f, c.f);
    return c;
}

// ---------------------------------------------------------------------------
// Eigenlevels

std::string to_string(const SpinLabel& label) {
    return "(G1=" + std::to_string(label.g1) + ",G2=" + std::to_string(label.g2) +
           ",F=" + std::to_string(label.f) + ")";
}

namespace {

double jj1(int j) { return j * (j + 1.0); }

// Nearest integer j >= 0 with j(j+1) closest to x.
int nearest_j(double x) {
    const double j = 0.5 * (std::sqrt(1.0 + 4.0 * std::max(x, 0.0)) - 1.0);
    int best = static_cast<int>(std::floor(j));
    if (std::abs(jj1(best + 1) - x) < std::abs(jj1(best) - x)) ++best;
    return best;
}

// Projector onto the G^2 = j(j+1) eigenspace, given the allowed j values.
Matrix casimir_projector(const Matrix& casimir, int j, const std::vector<int>& allowed) {
    const auto d = casimir.rows();
    Matrix p = Matrix::Identity(d, d);
    for (int other : allowed) {
        if (other == j) continue;
        p = p * (casimir - jj1(other) * Matrix::Identity(d, d)) / (jj1(j) - jj1(other));
    }
    return p;
}

bool couples(int a, int b, int c) { return c >= std::abs(a - b) && c <= a + b; }

std::vector<std::pair<int, int>> g_pairs_for(int f, int n) {
    std::vector<std::pair<int, int>> out;
    for (int g1 : {0, 1}) {
        for (int g2 = 0; g2 <= 2; ++g2) {
            if (couples(g1, 1, g2) && couples(g2, n, f)) out.emplace_back(g1, g2);
        }
    }
    return out;
}

double subspace_mean(const Matrix& v, const Matrix& op) {
    return (v.transpose() * op * v).trace() / static_cast<double>(v.cols());
}

std::string describe(const SpinLevel& lv, std::size_t idx) {
    std::ostringstream os;
    os << "level #" << idx << " (E = " << lv.energy << " kHz, degeneracy " << lv.degeneracy
       << ", <G1^2> = " << lv.g1_sq << ", <G2^2> = " << lv.g2_sq << ", <F^2> = " << lv.f_sq
       << ")";
    return os.str();
}

void label_by_expectation(std::vector<SpinLevel>& levels, std::vector<int>& fvals, int n,
                          double window) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (fvals[i] < 0) continue;
        auto& lv = levels[i];
        const int g1 = nearest_j(lv.g1_sq);
        const int g2 = nearest_j(lv.g2_sq);
        if (std::abs(lv.g1_sq - jj1(g1)) > window || std::abs(lv.g2_sq - jj1(g2)) > window) {
            throw ClassificationError("ambiguous label for " + describe(lv, i));
        }
        if (g1 > 1 || !couples(g1, 1, g2) || !couples(g2, n, fvals[i])) {
            throw ClassificationError("inconsistent coupling labels for " + describe(lv, i));
        }
        lv.label = SpinLabel{g1, g2, fvals[i]};
    }
}

void label_by_dominance(std::vector<SpinLevel>& levels, std::vector<int>& fvals, int n,
                        const CoupledMomenta& cm) {
    std::map<std::pair<int, int>, Matrix> projectors;
    for (int g1 : {0, 1}) {
        const Matrix p1 = casimir_projector(cm.g1_sq, g1, {0, 1});
        for (int g2 = 0; g2 <= 2; ++g2) {
            if (!couples(g1, 1, g2)) continue;
            projectors[{g1, g2}] = p1 * casimir_projector(cm.g2_sq, g2, {0, 1, 2});
        }
    }
    std::map<int, std::vector<std::size_t>> by_f;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (fvals[i] >= 0) by_f[fvals[i]].push_back(i);
    }
    for (const auto& [f, members] : by_f) {
        const auto pairs = g_pairs_for(f, n);
        if (pairs.empty()) {
            throw ClassificationError("no (G1,G2) coupling yields F=" + std::to_string(f));
        }
        std::vector<std::vector<double>> w(members.size(), std::vector<double>(pairs.size()));
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = 0; b < pairs.size(); ++b) {
                w[a][b] = subspace_mean(levels[members[a]].vectors, projectors.at(pairs[b]));
            }
        }
        std::vector<std::size_t> assign(members.size());
        if (members.size() == pairs.size()) {
            std::vector<std::size_t> perm(pairs.size());
            std::iota(perm.begin(), perm.end(), 0);
            double best = -1.0;
            do {
                double s = 0.0;
                for (std::size_t a = 0; a < members.size(); ++a) s += w[a][perm[a]];
                if (s > best + 1e-12) {
                    best = s;
                    assign = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        } else {
            for (std::size_t a = 0; a < members.size(); ++a) {
                assign[a] = static_cast<std::size_t>(
                    std::max_element(w[a].begin(), w[a].end()) - w[a].begin());
            }
        }
        for (std::size_t a = 0; a < members.size(); ++a) {
            auto& lv = levels[members[a]];
            if (w[a][assign[a]] < 0.5) {
                throw ClassificationError("no dominant (G1,G2) component for " +
                                          describe(lv, members[a]));
            }
            lv.label = SpinLabel{pairs[assign[a]].first, pairs[assign[a]].second, f};
        }
    }
}

}  // namespace

std::vector<SpinLevel> eigenlevels(const Matrix& h, const ProductBasis& basis,
                                   const LabelOptions& opts) {
    const int d = basis.dim();
    if (h.rows() != d || h.cols() != d) throw InputError("eigenlevels: dimension mismatch");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InputError("eigenlevels: Hamiltonian is not symmetric");
    }
    const CoupledMomenta cm = coupled_momenta(basis);
    const double tol = opts.commutator_tolerance * scale;
    if (commutator(h, cm.f.z).cwiseAbs().maxCoeff() > tol ||
        commutator(h, cm.f_sq).cwiseAbs().maxCoeff() > tol) {
        throw InputError("eigenlevels: Hamiltonian does not commute with F^2 and F_z");
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw InputError("eigenlevels: eigensolver failed");
    const Vector& evals = es.eigenvalues();
    const Matrix& evecs = es.eigenvectors();

    std::vector<SpinLevel> levels;
    std::vector<int> fvals;
    int start = 0;
    while (start < d) {
        int end = start + 1;
        while (end < d && evals(end) - evals(end - 1) <= opts.group_tolerance) ++end;
        SpinLevel lv;
        lv.degeneracy = end - start;
        lv.vectors = evecs.middleCols(start, lv.degeneracy);
        lv.energy = evals.segment(start, lv.degeneracy).mean();
        lv.g1_sq = subspace_mean(lv.vectors, cm.g1_sq);
        lv.g2_sq = subspace_mean(lv.vectors, cm.g2_sq);
        lv.f_sq = subspace_mean(lv.vectors, cm.f_sq);

        // A single F multiplet has F^2 = F(F+1) on the whole subspace.
        const int f = nearest_j(lv.f_sq);
        const Matrix fs = lv.vectors.transpose() * cm.f_sq * lv.vectors;
        const Matrix dev = fs - jj1(f) * Matrix::Identity(lv.degeneracy, lv.degeneracy);
        const bool multiplet = lv.degeneracy == 2 * f + 1 && dev.cwiseAbs().maxCoeff() < 1e-6;
        fvals.push_back(multiplet ? f : -1);
        levels.push_back(std::move(lv));
        start = end;
    }

    if (opts.mode == LabelMode::expectation) {
        label_by_expectation(levels, fvals, basis.n(), opts.window);
    } else {
        label_by_dominance(levels, fvals, basis.n(), cm);
    }
    return levels;
}

const SpinLevel& LevelStructure::find(const SpinLabel& label) const {
    const SpinLevel* hit = nullptr;
    for (const auto& lv : levels) {
        if (lv.label && *lv.label == label) {
            if (hit) throw LookupError("label " + to_string(label) + " is not unique in " +
                                       to_string(coeffs.level));
            hit = &lv;
        }
    }
    if (!hit) throw LookupError("label " + to_string(label) + " not found in " +
                                to_string(coeffs.level));
    return *hit;
}

LevelStructure solve_level(const HyperfineCoefficients& coeffs, const HfsOptions& opts) {
    ProductBasis basis(coeffs.level.n);
    Matrix h = build_hfs(coeffs, basis, opts.norm);
    auto levels = eigenlevels(h, basis, opts.labels);
    return LevelStructure{coeffs, std::move(basis), std::move(h), std::move(levels)};
}

double spin_frequency(const LevelStructure& upper, const SpinLabel& upper_label,
                      const LevelStructure& lower, const SpinLabel& lower_label) {
    return upper.find(upper_label).energy - lower.find(lower_label).energy;
}

// ---------------------------------------------------------------------------
// Sensitivities

SensitivityRow sensitivities(const LevelStructure& level, const SpinLabel& label,
                             const TensorNormalization& norm) {
    const SpinLevel& lv = level.find(label);
    SensitivityRow row{};
    for (int k = 1; k <= coefficient_count; ++k) {
        row[k - 1] = subspace_mean(lv.vectors, hfs_operator(k, level.basis, norm));
    }
    return row;
}

namespace {

std::size_t position_of(const LevelStructure& s, const SpinLabel& label) {
    const SpinLevel* p = &s.find(label);
    return static_cast<std::size_t>(p - s.levels.data());
}

}  // namespace

SensitivityRow finite_difference_sensitivities(const HyperfineCoefficients& coeffs,
                                               const SpinLabel& label, double step,
                                               const HfsOptions& opts) {
    const LevelStructure base = solve_level(coeffs, opts);
    const std::size_t pos = position_of(base, label);
    SensitivityRow row{};
    for (int k = 1; k <= coefficient_count; ++k) {
        if (coeffs.level.n == 0 && is_rotational_coefficient(k)) {
            row[k - 1] = 0.0;  // operator vanishes identically
            continue;
        }
        const double e = coeffs.e(k);
        double energies[2];
        for (int side = 0; side < 2; ++side) {
            const double shifted = side == 0 ? e + step : e - step;
            try {
                const LevelStructure s = solve_level(coeffs.with(k, shifted), opts);
                if (position_of(s, label) != pos || s.levels.size() != base.levels.size()) {
                    throw TrackingError("level order changed");
                }
                energies[side] = s.find(label).energy;
            } catch (const Error& err) {
                std::ostringstream os;
                os << "finite-difference step on E" << k << " (" << shifted
                   << " kHz) lost track of " << to_string(label) << ": " << err.what();
                throw TrackingError(os.str());
            }
        }
        row[k - 1] = (energies[0] - energies[1]) / (2.0 * step);
    }
    return row;
}

const std::vector<Transition>& known_transitions() {
    static const std::vector<Transition> lines = {
        {"12", SpinLabel{1, 2, 2}, SpinLabel{1, 2, 1}},
        {"16", SpinLabel{1, 2, 2}, SpinLabel{1, 2, 3}},
    };
    return lines;
}

const Transition& known_transition(const std::string& name) {
    for (const auto& t : known_transitions()) {
        if (t.name == name) return t;
    }
    throw LookupError("unknown transition '" + name + "'");
}

const TransitionSensitivity& SensitivityTable::row(const std::string& transition) const {
    auto it = rows.find(transition);
    if (it == rows.end()) {
        throw InputError("sensitivity table has no row for transition " + transition);
    }
    return it->second;
}

SensitivityTable build_sensitivity_table(const LevelStructure& lower, const LevelStructure& upper,
                                         const std::vector<Transition>& transitions,
                                         const TensorNormalization& norm) {
    SensitivityTable t;
    t.lower_coeffs = lower.coeffs;
    t.upper_coeffs = upper.coeffs;
    for (const auto& tr : transitions) {
        t.rows[tr.name] = {sensitivities(lower, tr.lower, norm), sensitivities(upper, tr.upper, norm)};
    }
    return t;
}

void SpinUncertaintyParams::validate() const {
    if (!(eps_fermi > 0.0) || !(eps_breit_pauli > 0.0) || !(u1_upper > 0.0)) {
        throw InputError("spin uncertainty parameters must be strictly positive");
    }
}

namespace {

void require_coefficients(const HyperfineCoefficients& c, const std::vector<int>& ks) {
    for (int k : ks) {
        if (!c.has(k)) {
            throw InputError("coefficient E" + std::to_string(k) + " missing for " +
                             to_string(c.level));
        }
    }
}

}  // namespace

double weighted_spin_uncertainty(const SensitivityTable& table,
                                 const std::vector<std::pair<std::string, double>>& weights,
                                 const SpinUncertaintyParams& params) {
    params.validate();
    const auto& up = table.upper_coeffs;
    const auto& lo = table.lower_coeffs;
    if (lo.level.n != 0) throw InputError("spin uncertainty: lower level must have N = 0");
    require_coefficients(lo, {4, 5});
    if (up.level.n == 0) {
        require_coefficients(up, {4, 5});
    } else {
        require_coefficients(up, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    }

    auto weighted = [&](int k, bool upper) {
        double s = 0.0;
        for (const auto& [name, b] : weights) {
            const auto& row = table.row(name);
            s += b * (upper ? row.upper : row.lower)[k - 1];
        }
        return s;
    };
    auto eps = [&](const HyperfineCoefficients& c, int k) {
        if (c.eps[k - 1]) return *c.eps[k - 1];
        return (k == 4 || k == 5) ? params.eps_fermi : params.eps_breit_pauli;
    };

    double u = 0.0;
    if (up.level.n > 0) {
        const double u1 = up.eps[0] ? *up.eps[0] * std::abs(up.e(1)) : params.u1_upper;
        u += std::abs(weighted(1, true)) * u1;
        for (int k : {2, 3, 6, 7, 8, 9}) {
            u += eps(up, k) * std::abs(weighted(k, true) * up.e(k));
        }
    }
    for (int k : {4, 5}) {
        u += eps(up, k) * std::abs(weighted(k, true) * up.e(k));
        u += eps(lo, k) * std::abs(weighted(k, false) * lo.e(k));
    }
    return u;
}

double spin_uncertainty(const std::string& transition, const SensitivityTable& table,
                        const SpinUncertaintyParams& params) {
    return weighted_spin_uncertainty(table, {{transition, 1.0}}, params);
}

std::vector<SpinUncertaintyTerm> spin_uncertainty_terms(const SensitivityTable& table,
                                                        const std::vector<std::string>& transitions,
                                                        const SpinUncertaintyParams& params) {
    params.validate();
    const auto& up = table.upper_coeffs;
    const auto& lo = table.lower_coeffs;
    if (lo.level.n != 0) throw InputError("spin uncertainty: lower level must have N = 0");
    require_coefficients(lo, {4, 5});
    require_coefficients(up, up.level.n == 0 ? std::vector<int>{4, 5}
                                             : std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto eps = [&](const HyperfineCoefficients& c, int k) {
        if (c.eps[k - 1]) return *c.eps[k - 1];
        return (k == 4 || k == 5) ? params.eps_fermi : params.eps_breit_pauli;
    };
    auto term = [&](const std::string& name, int k, bool upper, double scale) {
        SpinUncertaintyTerm t{name, {}};
        for (const auto& tr : transitions) {
            const auto& row = table.row(tr);
            t.slope.push_back(scale * (upper ? row.upper : row.lower)[k - 1]);
        }
        return t;
    };

    std::vector<SpinUncertaintyTerm> out;
    if (up.level.n > 0) {
        const double u1 = up.eps[0] ? *up.eps[0] * std::abs(up.e(1)) : params.u1_upper;
        out.push_back(term("E1'", 1, true, u1));
        for (int k : {2, 3, 6, 7, 8, 9}) {
            out.push_back(term("E" + std::to_string(k) + "'", k, true, eps(up, k) * std::abs(up.e(k))));
        }
    }
    for (int k : {4, 5}) {
        out.push_back(term("E" + std::to_string(k) + "'", k, true, eps(up, k) * std::abs(up.e(k))));
        out.push_back(term("E" + std::to_string(k), k, false, eps(lo, k) * std::abs(lo.e(k))));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Coefficient file

CoefficientSet parse_coefficients(const std::string& text) {
    static const std::regex section(R"(\[\s*v\s*=\s*(\d+)\s*,\s*N\s*=\s*(\d+)\s*\])");
    static const std::regex key_re(R"((eps_)?E([1-9]))");
    CoefficientSet out;
    HyperfineCoefficients* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = text_util::trim(text_util::strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = "coefficients line " + std::to_string(lineno) + ": ";
        std::smatch m;
        if (line.front() == '[') {
            if (!std::regex_match(line, m, section)) throw ParseError(where + "bad section header");
            LevelId id{std::stoi(m[1]), std::stoi(m[2])};
            if (out.count(id)) throw ParseError(where + "duplicate section " + to_string(id));
            current = &out[id];
            current->level = id;
            continue;
        }
        const auto [key, value] = text_util::split_key_value(line, where);
        if (!current) throw ParseError(where + "key outside of a section");
        if (!std::regex_match(key, m, key_re)) throw ParseError(where + "unknown key '" + key + "'");
        const int k = std::stoi(m[2]);
        auto& slot = m[1].matched ? current->eps[k - 1] : current->values[k - 1];
        if (slot) throw ParseError(where + "duplicate key '" + key + "'");
        slot = text_util::parse_double(value, where);
    }
    for (const auto& [id, c] : out) {
        try {
            c.validate();
        } catch (const InputError& e) {
            throw ParseError(e.what());
        }
    }
    return out;
}

CoefficientSet load_coefficients(const std::string& path) {
    return parse_coefficients(text_util::read_file(path));
}

}  // namespace hdplus::angular
