#include "wvb/qubit_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wvb {

namespace {

constexpr Complex kI{0.0, 1.0};

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string orthogonality_message(double probability, double threshold) {
    std::ostringstream os;
    os << "post-selection probability " << probability << " below threshold " << threshold
       << " (weak value diverges)";
    return os.str();
}

}  // namespace

NearOrthogonalPostselection::NearOrthogonalPostselection(double probability, double threshold)
    : std::runtime_error(orthogonality_message(probability, threshold)), probability_(probability) {}

QubitState::QubitState(Complex c0, Complex c1) {
    if (!finite(c0) || !finite(c1)) {
        throw NonFiniteValue("QubitState: non-finite amplitude");
    }
    const double n = std::sqrt(std::norm(c0) + std::norm(c1));
    if (!(n > 0.0)) {
        throw NonFiniteValue("QubitState: zero vector cannot be normalized");
    }
    amp_ = {c0 / n, c1 / n};
}

QubitState QubitState::with_global_phase(double theta) const {
    const Complex ph = std::polar(1.0, theta);
    return QubitState(ph * amp_[0], ph * amp_[1]);
}

QubitState QubitState::plus_x() { return QubitState(1.0, 1.0); }
QubitState QubitState::minus_x() { return QubitState(1.0, -1.0); }
QubitState QubitState::plus_y() { return QubitState(1.0, kI); }
QubitState QubitState::minus_y() { return QubitState(1.0, -kI); }
QubitState QubitState::plus_z() { return QubitState(1.0, 0.0); }
QubitState QubitState::minus_z() { return QubitState(0.0, 1.0); }

QubitState QubitState::equal_superposition(double phase) {
    return QubitState(1.0, std::polar(1.0, phase));
}

QubitState QubitState::from_bloch(double nx, double ny, double nz) {
    const double r = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw NonFiniteValue("QubitState::from_bloch: direction must be finite and non-zero");
    }
    nx /= r;
    ny /= r;
    nz /= r;
    // (1+nz, nx+i ny) is an unnormalized +1 eigenvector unless nz == -1.
    if (nz > -0.5) {
        return QubitState(1.0 + nz, Complex(nx, ny));
    }
    return QubitState(Complex(nx, -ny), 1.0 - nz);
}

Complex inner(const QubitState& a, const QubitState& b) {
    return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}

Operator2 Operator2::adjoint() const {
    return {std::conj(m_[0][0]), std::conj(m_[1][0]), std::conj(m_[0][1]), std::conj(m_[1][1])};
}

double Operator2::max_abs_diff(const Operator2& other) const {
    double d = 0.0;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) d = std::max(d, std::abs(m_[r][c] - other.m_[r][c]));
    return d;
}

bool Operator2::is_hermitian(double tol) const { return max_abs_diff(adjoint()) <= tol; }

bool Operator2::is_unitary(double tol) const {
    return (adjoint() * *this).max_abs_diff(pauli::identity()) <= tol;
}

Operator2 operator+(const Operator2& a, const Operator2& b) {
    return {a.m_[0][0] + b.m_[0][0], a.m_[0][1] + b.m_[0][1], a.m_[1][0] + b.m_[1][0],
            a.m_[1][1] + b.m_[1][1]};
}

Operator2 operator-(const Operator2& a, const Operator2& b) {
    return {a.m_[0][0] - b.m_[0][0], a.m_[0][1] - b.m_[0][1], a.m_[1][0] - b.m_[1][0],
            a.m_[1][1] - b.m_[1][1]};
}

Operator2 operator*(const Operator2& a, const Operator2& b) {
    Operator2::Matrix r{};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            r[i][j] = a.m_[i][0] * b.m_[0][j] + a.m_[i][1] * b.m_[1][j];
    return Operator2(r);
}

Operator2 operator*(Complex s, const Operator2& a) {
    return {s * a.m_[0][0], s * a.m_[0][1], s * a.m_[1][0], s * a.m_[1][1]};
}

namespace pauli {
Operator2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
Operator2 x() { return {0.0, 1.0, 1.0, 0.0}; }
Operator2 y() { return {0.0, -kI, kI, 0.0}; }
Operator2 z() { return {1.0, 0.0, 0.0, -1.0}; }

Operator2 axis(double nx, double ny, double nz) {
    const double r = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw NonFiniteValue("pauli::axis: direction must be finite and non-zero");
    }
    nx /= r;
    ny /= r;
    nz /= r;
    return {nz, Complex(nx, -ny), Complex(nx, ny), -nz};
}
}  // namespace pauli

Operator2 projector_from_state(const QubitState& s) {
    return {s[0] * std::conj(s[0]), s[0] * std::conj(s[1]), s[1] * std::conj(s[0]),
            s[1] * std::conj(s[1])};
}

std::array<Complex, 2> apply(const Operator2& op, const QubitState& s) {
    return {op(0, 0) * s[0] + op(0, 1) * s[1], op(1, 0) * s[0] + op(1, 1) * s[1]};
}

Complex expectation(const Operator2& op, const QubitState& psi) {
    const auto v = apply(op, psi);
    return std::conj(psi[0]) * v[0] + std::conj(psi[1]) * v[1];
}

WeakValueResult weak_value(const QubitState& pre, const QubitState& post, const Operator2& op,
                           double epsilon) {
    const Complex overlap = inner(post, pre);
    const double probability = std::norm(overlap);
    if (probability < epsilon) {
        throw NearOrthogonalPostselection(probability, epsilon);
    }
    const auto v = apply(op, pre);
    const Complex numerator = std::conj(post[0]) * v[0] + std::conj(post[1]) * v[1];
    const Complex value = numerator / overlap;
    if (!finite(value)) {
        throw NonFiniteValue("weak_value: non-finite result");
    }
    return {value, probability};
}

Complex commutator_expectation_direct(const Operator2& a, const Operator2& b, const QubitState& psi) {
    return expectation(a * b - b * a, psi);
}

Complex commutator_via_weak_value(const QubitState& psi, const Operator2& proj_a,
                                  const QubitState& post_b, double epsilon) {
    const WeakValueResult wv = weak_value(psi, post_b, proj_a, epsilon);
    return Complex(0.0, -8.0 * wv.postselection_probability * wv.value.imag());
}

IdentitySides scalar_identity_sides(double chi, double epsilon) {
    const QubitState psi = QubitState::equal_superposition(chi);
    const Operator2 pi1 = projector_from_state(QubitState::plus_z());
    const WeakValueResult wv = weak_value(psi, QubitState::plus_x(), pi1, epsilon);
    const double py = std::norm(inner(QubitState::plus_y(), psi));
    return {-4.0 * wv.postselection_probability * wv.value.imag(), 2.0 * py - 1.0};
}

Operator4 Operator4::identity() {
    Matrix m{};
    for (std::size_t i = 0; i < 4; ++i) m[i][i] = 1.0;
    return Operator4(m);
}

Operator4 Operator4::adjoint() const {
    Matrix r{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) r[i][j] = std::conj(m_[j][i]);
    return Operator4(r);
}

double Operator4::max_abs_diff(const Operator4& other) const {
    double d = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) d = std::max(d, std::abs(m_[i][j] - other.m_[i][j]));
    return d;
}

bool Operator4::is_unitary(double tol) const {
    return (adjoint() * *this).max_abs_diff(identity()) <= tol;
}

Operator4 operator+(const Operator4& a, const Operator4& b) {
    Operator4::Matrix r{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) r[i][j] = a.m_[i][j] + b.m_[i][j];
    return Operator4(r);
}

Operator4 operator*(const Operator4& a, const Operator4& b) {
    Operator4::Matrix r{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) acc += a.m_[i][k] * b.m_[k][j];
            r[i][j] = acc;
        }
    return Operator4(r);
}

Operator4 tensor(const Operator2& path_op, const Operator2& spin_op) {
    Operator4::Matrix r{};
    for (std::size_t pi = 0; pi < 2; ++pi)
        for (std::size_t pj = 0; pj < 2; ++pj)
            for (std::size_t si = 0; si < 2; ++si)
                for (std::size_t sj = 0; sj < 2; ++sj)
                    r[2 * pi + si][2 * pj + sj] = path_op(pi, pj) * spin_op(si, sj);
    return Operator4(r);
}

State4 tensor(const QubitState& path, const QubitState& spin) {
    return {path[0] * spin[0], path[0] * spin[1], path[1] * spin[0], path[1] * spin[1]};
}

State4 apply(const Operator4& op, const State4& s) {
    State4 r{};
    for (std::size_t i = 0; i < 4; ++i) {
        Complex acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += op(i, k) * s[k];
        r[i] = acc;
    }
    return r;
}

double norm_squared(const State4& s) {
    double n = 0.0;
    for (const auto& c : s) n += std::norm(c);
    return n;
}

}  // namespace wvb
