#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iga/dual_basis.hpp"
#include "iga/geometry.hpp"
#include "iga/linalg.hpp"
#include "iga/quadrature.hpp"
#include "iga/spline.hpp"

namespace iga {

/// Linear operator on vectors of length n, with a storage figure in reals.
class Operator1D {
public:
    using Apply = std::function<void(std::span<const double>, std::span<double>)>;

    Operator1D() = default;
    Operator1D(std::size_t n, Apply apply, std::size_t storage);

    static Operator1D identity(std::size_t n);
    static Operator1D diagonal(std::vector<double> d);
    static Operator1D dense(DenseMatrix a);
    static Operator1D banded(BandedSymmetricMatrix a);
    /// Applies the inverse of an SPD banded matrix.
    static Operator1D banded_inverse(const BandedSymmetricMatrix& a);
    static Operator1D constrained(ConstrainedDual d);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t storage() const noexcept { return storage_; }
    void apply(std::span<const double> x, std::span<double> y) const { apply_(x, y); }
    [[nodiscard]] DenseMatrix to_dense() const;

private:
    std::size_t n_ = 0;
    Apply apply_;
    std::size_t storage_ = 0;
};

/// A2 (x) A1 acting on grids stored as v[i2 * n1 + i1].
class KroneckerOperator {
public:
    KroneckerOperator() = default;
    KroneckerOperator(Operator1D outer, Operator1D inner);

    [[nodiscard]] std::size_t size() const noexcept { return outer_.size() * inner_.size(); }
    [[nodiscard]] const Operator1D& outer() const noexcept { return outer_; }
    [[nodiscard]] const Operator1D& inner() const noexcept { return inner_; }
    [[nodiscard]] std::size_t storage() const noexcept { return outer_.storage() + inner_.storage(); }
    void apply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
    [[nodiscard]] DenseMatrix to_dense() const;

private:
    Operator1D outer_, inner_;
};

enum class MassKind { galerkin_consistent, petrov_consistent, customized, rowsum_lumped };

std::string to_string(MassKind kind);
/// Accepts the enumerator names; throws std::invalid_argument otherwise.
MassKind parse_mass_kind(std::string_view name);

/// Homogeneous Dirichlet sides of the parametric square.
struct DirichletSides {
    bool x1_min = false, x1_max = false, x2_min = false, x2_max = false;
};

/// Test functions of the weak form: B_i (plain) or B_i / c (weighted).
enum class TestFunctions { plain, weighted };

/// Tensor-product discretization of rho u_tt = div(kappa grad u) + f on a
/// mapped unit square.
///
/// Coefficients live on the full grid d[i2 * N1 + i1]; constrained indices
/// form full sides, so the free indices are again a tensor-product grid.
class DiscreteSystem {
public:
    /// `points_per_element` = 0 selects p + 2 Gauss points per direction.
    DiscreteSystem(SplineSpace s1, SplineSpace s2, GeometryMap map, MassKind kind, DirichletSides sides = {},
                   double kappa = 1.0, int points_per_element = 0);

    [[nodiscard]] const SplineSpace& space(int dir) const { return dir == 0 ? s1_ : s2_; }
    [[nodiscard]] const GeometryMap& map() const noexcept { return map_; }
    [[nodiscard]] const WeightField& weight() const noexcept { return c_; }
    [[nodiscard]] MassKind mass_kind() const noexcept { return kind_; }
    [[nodiscard]] const DirichletSides& dirichlet() const noexcept { return sides_; }
    [[nodiscard]] double kappa() const noexcept { return kappa_; }
    [[nodiscard]] int points_per_element(int dir) const { return tables_[dir].points_per_element(); }
    /// Test functions used by the kind: weighted for the Petrov kinds.
    [[nodiscard]] TestFunctions test_functions() const noexcept;

    [[nodiscard]] std::size_t n1() const noexcept { return s1_.dimension(); }
    [[nodiscard]] std::size_t n2() const noexcept { return s2_.dimension(); }
    [[nodiscard]] std::size_t full_size() const noexcept { return n1() * n2(); }
    /// Half-open free index range [lo, hi) in direction dir.
    [[nodiscard]] std::array<std::size_t, 2> free_range(int dir) const { return free_[dir]; }
    [[nodiscard]] std::size_t free_size(int dir) const { return free_[dir][1] - free_[dir][0]; }
    [[nodiscard]] std::size_t free_size() const { return free_size(0) * free_size(1); }

    /// Embeds a free-grid vector into the full grid with zeros at constrained entries.
    [[nodiscard]] std::vector<double> inject(std::span<const double> free) const;
    /// Extracts the free entries of a full-grid vector.
    [[nodiscard]] std::vector<double> restrict_to_free(std::span<const double> full) const;

    /// Approximate dual bases per direction; built on first use.
    [[nodiscard]] const ApproximateDualBasis& dual(int dir) const;
    /// Dual with the Dirichlet ends of direction dir removed (Woodbury form).
    [[nodiscard]] const ConstrainedDual& constrained_dual(int dir) const;

    [[nodiscard]] const BasisTable& table(int dir) const { return tables_[dir]; }

    /// Worker threads used by the sum-factorized sweeps (results do not depend on it).
    void set_threads(unsigned n) { threads_ = n == 0 ? 1 : n; }
    [[nodiscard]] unsigned threads() const noexcept { return threads_; }

    /// Multiply-add count of all sweeps since construction (instrumentation).
    [[nodiscard]] std::uint64_t visit_count() const noexcept { return visits_; }
    void add_visits(std::uint64_t n) const { visits_ += n; }

    /// Per-point coefficients of the stiffness sweep for the given test functions:
    /// g = D grad u, h = -e . g, with D packed as (D11, D12, D22) and e as (e1, e2).
    struct StiffnessData {
        std::vector<double> d11, d12, d22, e1, e2;
    };
    [[nodiscard]] const StiffnessData& stiffness_data(TestFunctions test) const;
    /// Per-point weights of the mass form b(test_i, B_j).
    [[nodiscard]] const std::vector<double>& mass_data(TestFunctions test) const;
    /// Quadrature weight times det(F) at every point, q = q2 * Q1 + q1.
    [[nodiscard]] const std::vector<double>& volume_weights() const noexcept { return vol_; }

private:
    SplineSpace s1_, s2_;
    GeometryMap map_;
    WeightField c_;
    MassKind kind_;
    DirichletSides sides_;
    double kappa_;
    std::array<BasisTable, 2> tables_;
    std::array<std::array<std::size_t, 2>, 2> free_{};
    std::vector<double> vol_;
    mutable std::array<std::unique_ptr<StiffnessData>, 2> stiff_;
    mutable std::array<std::unique_ptr<std::vector<double>>, 2> mass_;
    mutable std::array<std::unique_ptr<ApproximateDualBasis>, 2> duals_;
    mutable std::array<std::unique_ptr<ConstrainedDual>, 2> cduals_;
    unsigned threads_ = 1;
    mutable std::uint64_t visits_ = 0;  // updated by the calling thread only
};

/// One-dimensional problem on [0, 1] with Dirichlet ends: the second
/// direction is a single constant function.
DiscreteSystem make_string_system(std::size_t num_elements, int degree, MassKind kind, double kappa = 1.0,
                                  int points_per_element = 0);

/// Mass matrix restricted to the free grid, with apply and solve.
struct MassOperator {
    MassKind kind = MassKind::galerkin_consistent;
    std::size_t size = 0;
    Operator1D::Apply apply;
    Operator1D::Apply solve;
    /// Reals stored by the solve representation.
    std::size_t storage = 0;
    /// Product form of the solve when it factorizes.
    std::optional<KroneckerOperator> solve_factors;
};

/// galerkin_consistent: weighted Grammian (requires a separable weight);
/// petrov_consistent: (S2 G2) (x) (S1 G1); customized: inverse applied as
/// constrained S2 (x) S1; rowsum_lumped: diagonal row sums of the Galerkin mass.
MassOperator mass_operator(const DiscreteSystem& system);

/// K d on the full grid: a(test_i, sum_j d_j B_j) by sum factorization.
void stiffness_apply(const DiscreteSystem& system, std::span<const double> d, std::span<double> out,
                     std::optional<TestFunctions> test = std::nullopt);
std::vector<double> stiffness_apply(const DiscreteSystem& system, std::span<const double> d,
                                    std::optional<TestFunctions> test = std::nullopt);
/// b(test_i, sum_j d_j B_j) on the full grid, matrix-free.
std::vector<double> mass_form_apply(const DiscreteSystem& system, std::span<const double> d,
                                    std::optional<TestFunctions> test = std::nullopt);

/// Scalar field on the physical domain, f(x, y).
using PhysicalField = std::function<double(double, double)>;

/// Neumann datum on one side of the parametric square.
struct NeumannData {
    int dir = 0;       ///< parametric direction held fixed
    bool upper = true; ///< side x_dir = 1 (otherwise x_dir = 0)
    PhysicalField h;
};

/// Right-hand side l(test_i) - a(test_i, g) - b(test_i, g_tt) on the full grid,
/// with an optional Dirichlet lift g and its second time derivative given as
/// full-grid coefficient vectors.
std::vector<double> load_vector(const DiscreteSystem& system, const PhysicalField& f,
                                std::span<const NeumannData> neumann = {}, std::span<const double> lift = {},
                                std::span<const double> lift_accel = {});

/// Semi-discrete operators on the free grid: K, M and the acceleration
/// M^{-1} (F - K d) of the kind, without forming any global matrix.
class SemiDiscreteOperator {
public:
    explicit SemiDiscreteOperator(const DiscreteSystem& system, std::vector<double> load = {});

    [[nodiscard]] const DiscreteSystem& system() const noexcept { return *system_; }
    [[nodiscard]] const MassOperator& mass() const noexcept { return mass_; }
    [[nodiscard]] std::size_t size() const noexcept { return mass_.size; }

    /// Free-grid stiffness of the kind (for petrov_consistent the dual-tested K).
    void stiffness(std::span<const double> d, std::span<double> out) const;
    /// Free-grid load of the kind.
    [[nodiscard]] const std::vector<double>& load() const noexcept { return load_; }
    /// out = M^{-1} (F - K d).
    void acceleration(std::span<const double> d, std::span<double> out) const;
    /// out = M^{-1} K d.
    void operator_apply(std::span<const double> d, std::span<double> out) const;

    /// Dense free-grid matrices by applying the operators to unit vectors (small sizes).
    [[nodiscard]] DenseMatrix dense_stiffness() const;
    [[nodiscard]] DenseMatrix dense_mass() const;

private:
    const DiscreteSystem* system_;
    MassOperator mass_;
    std::shared_ptr<KroneckerOperator> dual_full_;  // S2 (x) S1 on the full grid, petrov_consistent only
    std::vector<double> load_;
};

/// Tensor-product quasi-projection of a parametric field f(x1, x2): moments
/// against B_i1 B_i2 on the unit square followed by the constrained duals of
/// both directions. Returns the full grid with zeros at constrained entries.
std::vector<double> quasi_project(const DiscreteSystem& system, const std::function<double(double, double)>& f);

/// Removes the constrained entries (rows) of a full-grid vector.
std::vector<double> apply_dirichlet(const DiscreteSystem& system, std::span<const double> full);
/// Restricts a full-grid operator to the free grid.
DenseMatrix apply_dirichlet(const DiscreteSystem& system, const DenseMatrix& full);

}  // namespace iga
