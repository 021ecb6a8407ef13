#pragma once

// Two-level complex linear algebra, weak values and the commutator identity.
//
// Basis convention (used everywhere in the project):
//   path qubit  |I> = (1,0), |II> = (0,1)
//   spin qubit  |up_z> = (1,0), |down_z> = (0,1)
//   joint path-spin vectors are ordered path-slot first: (I up, I down, II up, II down)

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace wvb {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDefaultPostselectionEpsilon = 1e-10;

class NearOrthogonalPostselection : public std::runtime_error {
public:
    NearOrthogonalPostselection(double probability, double threshold);
    double probability() const noexcept { return probability_; }

private:
    double probability_;
};

class NonFiniteValue : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Normalized two-level pure state.
class QubitState {
public:
    /// Normalizes (c0, c1). Throws NonFiniteValue for non-finite input or a zero vector.
    QubitState(Complex c0, Complex c1);

    Complex operator[](std::size_t i) const { return amp_[i]; }
    const std::array<Complex, 2>& amplitudes() const { return amp_; }

    QubitState with_global_phase(double theta) const;

    static QubitState plus_x();
    static QubitState minus_x();
    static QubitState plus_y();
    static QubitState minus_y();
    static QubitState plus_z();
    static QubitState minus_z();

    /// (|0> + e^{i phase}|1>)/sqrt(2)
    static QubitState equal_superposition(double phase);

    /// +1 eigenstate of n.sigma for a (not necessarily unit) Bloch direction n.
    static QubitState from_bloch(double nx, double ny, double nz);

private:
    std::array<Complex, 2> amp_;
};

/// <a|b>
Complex inner(const QubitState& a, const QubitState& b);

class Operator2 {
public:
    using Matrix = std::array<std::array<Complex, 2>, 2>;

    constexpr Operator2() : m_{} {}
    constexpr explicit Operator2(const Matrix& m) : m_(m) {}
    constexpr Operator2(Complex a00, Complex a01, Complex a10, Complex a11)
        : m_{{{a00, a01}, {a10, a11}}} {}

    Complex operator()(std::size_t r, std::size_t c) const { return m_[r][c]; }
    const Matrix& matrix() const { return m_; }

    Operator2 adjoint() const;
    Complex trace() const { return m_[0][0] + m_[1][1]; }
    bool is_hermitian(double tol = 1e-12) const;
    bool is_unitary(double tol = 1e-12) const;
    /// Largest absolute entry difference.
    double max_abs_diff(const Operator2& other) const;

    friend Operator2 operator+(const Operator2& a, const Operator2& b);
    friend Operator2 operator-(const Operator2& a, const Operator2& b);
    friend Operator2 operator*(const Operator2& a, const Operator2& b);
    friend Operator2 operator*(Complex s, const Operator2& a);

private:
    Matrix m_;
};

namespace pauli {
Operator2 identity();
Operator2 x();
Operator2 y();
Operator2 z();
/// n.sigma for unit Bloch direction n (n is normalized internally).
Operator2 axis(double nx, double ny, double nz);
}  // namespace pauli

/// |s><s|
Operator2 projector_from_state(const QubitState& s);

/// Unnormalized op|s> as an amplitude pair.
std::array<Complex, 2> apply(const Operator2& op, const QubitState& s);

/// <psi|op|psi>
Complex expectation(const Operator2& op, const QubitState& psi);

struct WeakValueResult {
    Complex value;
    double postselection_probability = 0.0;
};

/// <post|op|pre> / <post|pre>. Throws NearOrthogonalPostselection when
/// |<post|pre>|^2 < epsilon.
WeakValueResult weak_value(const QubitState& pre, const QubitState& post, const Operator2& op,
                           double epsilon = kDefaultPostselectionEpsilon);

/// <psi|(AB - BA)|psi> by plain matrix arithmetic.
Complex commutator_expectation_direct(const Operator2& a, const Operator2& b, const QubitState& psi);

/// <psi|[A,B]|psi> for A = 2 proj_a - 1 and B = 2|post_b><post_b| - 1, evaluated
/// as -8i |<post_b|psi>|^2 Im(<proj_a>_w) with pre = psi and post = post_b.
Complex commutator_via_weak_value(const QubitState& psi, const Operator2& proj_a,
                                  const QubitState& post_b,
                                  double epsilon = kDefaultPostselectionEpsilon);

struct IdentitySides {
    double lhs = 0.0;  // -4 |<+x|psi_i>|^2 Im(<Pi_1>_w)
    double rhs = 0.0;  // 2 |<+y|psi_i>|^2 - 1
};

/// Both sides of the sigma_z/sigma_x commutator identity for the path state
/// (|I> + e^{i chi}|II>)/sqrt(2). Both equal sin(chi).
IdentitySides scalar_identity_sides(double chi, double epsilon = kDefaultPostselectionEpsilon);

// ---- four-dimensional (path x spin) algebra ----

using State4 = std::array<Complex, 4>;

class Operator4 {
public:
    using Matrix = std::array<std::array<Complex, 4>, 4>;

    constexpr Operator4() : m_{} {}
    constexpr explicit Operator4(const Matrix& m) : m_(m) {}

    static Operator4 identity();

    Complex operator()(std::size_t r, std::size_t c) const { return m_[r][c]; }
    Complex& at(std::size_t r, std::size_t c) { return m_[r][c]; }
    const Matrix& matrix() const { return m_; }

    Operator4 adjoint() const;
    bool is_unitary(double tol = 1e-12) const;
    double max_abs_diff(const Operator4& other) const;

    friend Operator4 operator+(const Operator4& a, const Operator4& b);
    friend Operator4 operator*(const Operator4& a, const Operator4& b);

private:
    Matrix m_;
};

/// Kronecker product, first factor on the path slot.
Operator4 tensor(const Operator2& path_op, const Operator2& spin_op);
State4 tensor(const QubitState& path, const QubitState& spin);
State4 apply(const Operator4& op, const State4& s);
double norm_squared(const State4& s);

}  // namespace wvb
