#pragma once

// Angular-momentum algebra and the HD+ effective spin Hamiltonian in the
// uncoupled product basis |m_se, m_sp, m_sd, m_N>.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hdplus::angular {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// J_z, J_+ and J_- for one angular momentum j in the |j,m> basis ordered
/// m = j, j-1, ..., -j. Standard Condon-Shortley phases, all entries real.
struct AngularMomentumSet {
    int two_j = 0;
    Matrix jz;
    Matrix jplus;
    Matrix jminus;

    double j() const { return 0.5 * two_j; }
    int dim() const { return two_j + 1; }
    /// J_x^2 + J_y^2 + J_z^2 assembled from the ladder operators.
    Matrix casimir() const;
};

/// Throws InputError unless 2j is a non-negative integer.
AngularMomentumSet jmatrices(double j);

enum class Slot { electron = 0, proton = 1, deuteron = 2, rotation = 3 };

inline constexpr std::array<Slot, 4> all_slots = {Slot::electron, Slot::proton, Slot::deuteron,
                                                  Slot::rotation};

/// Product space s_e(1/2) x I_p(1/2) x I_d(1) x N, slot 0 outermost.
class ProductBasis {
public:
    explicit ProductBasis(int rotational_n);

    int n() const { return n_; }
    int dim() const { return dim_; }
    int slot_dim(Slot s) const { return dims_[static_cast<int>(s)]; }
    const AngularMomentumSet& momentum(Slot s) const { return sets_[static_cast<int>(s)]; }

    /// Basis index of (m_se, m_sp, m_sd, m_N). Throws InputError when any
    /// projection is out of range or not on the half-integer lattice.
    int index(double m_se, double m_sp, double m_sd, double m_n) const;
    /// Projections (m_se, m_sp, m_sd, m_N) of a basis index.
    std::array<double, 4> projections(int index) const;
    /// Total projection m_F of a basis index.
    double total_m(int index) const;

private:
    int n_;
    int dim_;
    std::array<int, 4> dims_;
    std::array<AngularMomentumSet, 4> sets_;
};

/// Embeds a single-slot operator into the full product space, acting as
/// the identity on every other slot.
Matrix embed(const Matrix& op, Slot slot, const ProductBasis& basis);

/// Spherical-ladder triple (z, +, -) of a vector operator in the full space.
struct VectorOperator {
    Matrix z;
    Matrix plus;
    Matrix minus;

    VectorOperator& operator+=(const VectorOperator& o);
    friend VectorOperator operator+(VectorOperator a, const VectorOperator& b) { return a += b; }
};

VectorOperator vector_operator(Slot slot, const ProductBasis& basis);

/// A.B = A_z B_z + (A_+ B_- + A_- B_+)/2.
Matrix dot(const VectorOperator& a, const VectorOperator& b);

/// Commutator AB - BA.
Matrix commutator(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Hyperfine coefficients and Hamiltonian

struct LevelId {
    int v = 0;
    int n = 0;
    friend auto operator<=>(const LevelId&, const LevelId&) = default;
};

std::string to_string(const LevelId& id);

inline constexpr int coefficient_count = 9;

/// E1..E9 in kHz for one (v, N) level. Absent coefficients act as zero in
/// the Hamiltonian; uncertainty estimates require them to be present.
struct HyperfineCoefficients {
    LevelId level;
    std::array<std::optional<double>, coefficient_count> values{};
    /// Optional fractional-uncertainty overrides (eps_Ek keys).
    std::array<std::optional<double>, coefficient_count> eps{};

    /// 1-based accessor; absent -> 0.
    double e(int k) const;
    bool has(int k) const;
    HyperfineCoefficients with(int k, double value) const;

    /// Throws InputError for N = 0 with any of E1, E2, E3, E6..E9 nonzero.
    void validate() const;
};

/// Coefficients whose operator involves the rotational angular momentum.
bool is_rotational_coefficient(int k);

/// Normalizations of the tensor-type terms. Unset entries use the default
/// 1/((2N-1)(2N+3)).
struct TensorNormalization {
    std::optional<double> tensor;      // E6, E7, E8
    std::optional<double> quadrupole;  // E9

    double tensor_for(int n) const;
    double quadrupole_for(int n) const;
};

double default_tensor_normalization(int n);

// One constructor per Hamiltonian term, each with unit coefficient.
Matrix spin_rotation_term(Slot partner, const ProductBasis& basis);
Matrix contact_term(Slot a, Slot b, const ProductBasis& basis);
/// [2N^2 (A.B) - 3((N.A)(N.B) + (N.B)(N.A))] * norm
Matrix tensor_term(Slot a, Slot b, const ProductBasis& basis, double norm);
/// [2N^2 I_d^2 - 3(N.I_d) - 6(N.I_d)^2] * norm
Matrix quadrupole_term(const ProductBasis& basis, double norm);

/// Operator multiplying E_k (k = 1..9).
Matrix hfs_operator(int k, const ProductBasis& basis, const TensorNormalization& norm = {});

Matrix build_hfs(const HyperfineCoefficients& coeffs, const ProductBasis& basis,
                 const TensorNormalization& norm = {});

/// Composite momenta G1 = s_e + I_p, G2 = G1 + I_d, F = G2 + N.
struct CoupledMomenta {
    VectorOperator g1;
    VectorOperator g2;
    VectorOperator f;
    Matrix g1_sq;
    Matrix g2_sq;
    Matrix f_sq;
};

CoupledMomenta coupled_momenta(const ProductBasis& basis);

// ---------------------------------------------------------------------------
// Eigenlevels

struct SpinLabel {
    int g1 = 0;
    int g2 = 0;
    int f = 0;
    friend auto operator<=>(const SpinLabel&, const SpinLabel&) = default;
};

std::string to_string(const SpinLabel& label);

struct SpinLevel {
    /// Empty for an accidentally degenerate manifold containing several
    /// F multiplets (e.g. H = 0).
    std::optional<SpinLabel> label;
    double energy = 0.0;  // kHz, relative to the spin-averaged level
    int degeneracy = 0;
    Matrix vectors;       // D x degeneracy orthonormal columns
    double g1_sq = 0.0;   // subspace averages
    double g2_sq = 0.0;
    double f_sq = 0.0;
};

enum class LabelMode {
    /// Round <G1^2>, <G2^2> to the nearest j(j+1); fail outside the window.
    expectation,
    /// Assign (G1, G2) per F block by maximal coupled-basis weight.
    dominant,
};

struct LabelOptions {
    LabelMode mode = LabelMode::expectation;
    double window = 0.05;
    double group_tolerance = 1e-6;  // kHz
    double commutator_tolerance = 1e-9;
};

std::vector<SpinLevel> eigenlevels(const Matrix& h, const ProductBasis& basis,
                                   const LabelOptions& opts = {});

struct HfsOptions {
    TensorNormalization norm;
    LabelOptions labels;
};

/// Hamiltonian, basis and labeled levels of one (v, N) level.
struct LevelStructure {
    HyperfineCoefficients coeffs;
    ProductBasis basis;
    Matrix hamiltonian;
    std::vector<SpinLevel> levels;

    /// Throws LookupError when the label is absent or not unique.
    const SpinLevel& find(const SpinLabel& label) const;
};

LevelStructure solve_level(const HyperfineCoefficients& coeffs, const HfsOptions& opts = {});

/// E(upper level) - E(lower level) in kHz.
double spin_frequency(const LevelStructure& upper, const SpinLabel& upper_label,
                      const LevelStructure& lower, const SpinLabel& lower_label);

// ---------------------------------------------------------------------------
// Sensitivities and spin-theory uncertainty

using SensitivityRow = std::array<double, coefficient_count>;

/// Hellmann-Feynman gamma_k = dE_level/dE_k = <O_k> averaged over the level.
SensitivityRow sensitivities(const LevelStructure& level, const SpinLabel& label,
                             const TensorNormalization& norm = {});

/// Central finite differences of the labeled level energy. Throws
/// TrackingError if a step reorders the levels.
SensitivityRow finite_difference_sensitivities(const HyperfineCoefficients& coeffs,
                                               const SpinLabel& label, double step = 1e-4,
                                               const HfsOptions& opts = {});

struct Transition {
    std::string name;
    SpinLabel lower;
    SpinLabel upper;
};

/// Lines 12 and 16 of the (v=0,N=0) -> (v'=1,N'=1) band.
const std::vector<Transition>& known_transitions();
const Transition& known_transition(const std::string& name);

struct TransitionSensitivity {
    SensitivityRow lower{};  // gamma_{i,k}
    SensitivityRow upper{};  // gamma'_{i,k}
};

struct SensitivityTable {
    HyperfineCoefficients lower_coeffs;
    HyperfineCoefficients upper_coeffs;
    std::map<std::string, TransitionSensitivity> rows;

    /// Throws InputError when the transition is missing.
    const TransitionSensitivity& row(const std::string& transition) const;
};

SensitivityTable build_sensitivity_table(const LevelStructure& lower, const LevelStructure& upper,
                                         const std::vector<Transition>& transitions,
                                         const TensorNormalization& norm = {});

struct SpinUncertaintyParams {
    double eps_fermi = 1e-6;             // E4, E5
    double eps_breit_pauli = 5.3251e-5;  // alpha^2, E2, E3, E6..E9
    double u1_upper = 0.05;              // kHz, absolute uncertainty of E1'

    void validate() const;
};

/// Weighted spin-theory uncertainty
///   |sum b_i g'_{i,1}| u1' + eps0 sum_k |sum b_i g'_{i,k} E'_k|
///   + epsF sum_{k=4,5} (|sum b_i g'_{i,k} E'_k| + |sum b_i g_{i,k} E_k|).
/// Terms add as absolute values, not in quadrature. The lower level must be
/// an N = 0 level.
double weighted_spin_uncertainty(const SensitivityTable& table,
                                 const std::vector<std::pair<std::string, double>>& weights,
                                 const SpinUncertaintyParams& params);

double spin_uncertainty(const std::string& transition, const SensitivityTable& table,
                        const SpinUncertaintyParams& params);

/// One absolute-value term of the weighted formula: the term equals
/// |sum_i b_i slope[i]| for weights b_i over `transitions`.
struct SpinUncertaintyTerm {
    std::string name;  // e.g. "E1'", "E4", "E4'"
    std::vector<double> slope;
};

std::vector<SpinUncertaintyTerm> spin_uncertainty_terms(const SensitivityTable& table,
                                                        const std::vector<std::string>& transitions,
                                                        const SpinUncertaintyParams& params);

// ---------------------------------------------------------------------------
// Coefficient file

using CoefficientSet = std::map<LevelId, HyperfineCoefficients>;

/// Sectioned key-value text: "[v=0,N=0]" headers, keys E1..E9 and eps_E1..
/// eps_E9, '#' comments. Unknown keys are rejected with ParseError.
CoefficientSet parse_coefficients(const std::string& text);
CoefficientSet load_coefficients(const std::string& path);

}  // namespace hdplus::angular
