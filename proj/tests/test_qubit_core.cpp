#include "oracles.hpp"

#include "wvb/qubit_core.hpp"

#include <doctest.h>

#include <random>

using namespace wvb;

namespace {

const Complex kI{0.0, 1.0};

QubitState random_state(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return QubitState(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)));
}

}  // namespace

TEST_CASE("QubitState normalizes and rejects bad input") {
    const QubitState s(Complex(3.0, 0.0), Complex(0.0, 4.0));
    CHECK(std::norm(s[0]) + std::norm(s[1]) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(QubitState(0.0, 0.0), NonFiniteValue);
    CHECK_THROWS_AS(QubitState(std::nan(""), 1.0), NonFiniteValue);
    CHECK_THROWS_AS(QubitState(INFINITY, 1.0), NonFiniteValue);
}

TEST_CASE("Pauli algebra") {
    const Operator2 id = pauli::identity();
    for (const Operator2& s : {pauli::x(), pauli::y(), pauli::z()}) {
        CHECK((s * s).max_abs_diff(id) < 1e-15);
        CHECK(s.is_hermitian());
    }
    CHECK((pauli::z() * pauli::x()).max_abs_diff(kI * pauli::y()) < 1e-15);
    CHECK((pauli::x() * pauli::y()).max_abs_diff(kI * pauli::z()) < 1e-15);
    CHECK((pauli::y() * pauli::z()).max_abs_diff(kI * pauli::x()) < 1e-15);
}

TEST_CASE("projectors are idempotent and Hermitian") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const Operator2 p = projector_from_state(random_state(rng));
        CHECK((p * p).max_abs_diff(p) < 1e-14);
        CHECK(p.is_hermitian(1e-15));
    }
    CHECK(projector_from_state(QubitState::plus_z()).max_abs_diff(Operator2(1.0, 0.0, 0.0, 0.0)) == 0.0);
}

TEST_CASE("from_bloch gives the +1 eigenstate") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        const double nx = g(rng), ny = g(rng), nz = g(rng);
        const QubitState s = QubitState::from_bloch(nx, ny, nz);
        CHECK(expectation(pauli::axis(nx, ny, nz), s).real() == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK(std::abs(inner(QubitState::from_bloch(0, 0, -1), QubitState::minus_z())) == doctest::Approx(1.0));
}

TEST_CASE("inner product with the phase superposition") {
    for (double chi : {0.0, 0.4, 1.7, 3.0, 5.5}) {
        const Complex got = inner(QubitState::plus_x(), QubitState::equal_superposition(chi));
        CHECK(std::abs(got - (1.0 + std::polar(1.0, chi)) / 2.0) < 1e-15);
    }
}

TEST_CASE("tensor structure") {
    CHECK(tensor(pauli::identity(), pauli::identity()).max_abs_diff(Operator4::identity()) == 0.0);
    // path-slot first: sigma_z (x) 1 is diag(1, 1, -1, -1)
    const Operator4 zp = tensor(pauli::z(), pauli::identity());
    CHECK(zp(0, 0) == Complex(1.0));
    CHECK(zp(1, 1) == Complex(1.0));
    CHECK(zp(2, 2) == Complex(-1.0));
    CHECK(zp(3, 3) == Complex(-1.0));
    const State4 s = tensor(QubitState::minus_z(), QubitState::plus_z());
    CHECK(std::abs(s[2] - 1.0) == 0.0);
    CHECK(norm_squared(apply(tensor(pauli::x(), pauli::y()), s)) == doctest::Approx(1.0));
}

TEST_CASE("weak_value examples") {
    const Operator2 pi1 = projector_from_state(QubitState::plus_z());

    const WeakValueResult at_zero = weak_value(QubitState::equal_superposition(0.0), QubitState::plus_x(), pi1);
    CHECK(at_zero.value == Complex(0.5, 0.0));
    CHECK(at_zero.postselection_probability == doctest::Approx(1.0).epsilon(1e-15));

    const WeakValueResult eigen = weak_value(QubitState::plus_z(), QubitState::plus_z(), pi1);
    CHECK(std::abs(eigen.value - 1.0) < 1e-15);

    const WeakValueResult w120 = weak_value(QubitState::equal_superposition(2 * kPi / 3), QubitState::plus_x(), pi1);
    const Complex expect = oracle::path_weak_value(2 * kPi / 3);
    CHECK(std::abs(w120.value - expect) < 1e-12);
    CHECK(w120.value.real() == doctest::Approx(0.5));
    CHECK(w120.value.imag() == doctest::Approx(-0.8660254037844386).epsilon(1e-12));
}

TEST_CASE("weak_value diverges at orthogonal post-selection") {
    const Operator2 pi1 = projector_from_state(QubitState::plus_z());
    CHECK_THROWS_AS(weak_value(QubitState::equal_superposition(kPi), QubitState::plus_x(), pi1),
                    NearOrthogonalPostselection);
    // a tighter threshold still rejects exact orthogonality
    CHECK_THROWS_AS(weak_value(QubitState::plus_z(), QubitState::minus_z(), pi1, 1e-300), NearOrthogonalPostselection);
    // configurable threshold
    const QubitState almost = QubitState::equal_superposition(kPi - 1e-3);
    CHECK_NOTHROW(weak_value(almost, QubitState::plus_x(), pi1));
    CHECK_THROWS_AS(weak_value(almost, QubitState::plus_x(), pi1, 1e-3), NearOrthogonalPostselection);
}

TEST_CASE("post-selection probability matches an independent overlap") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const QubitState pre = random_state(rng);
        const QubitState post = random_state(rng);
        const auto& a = pre.amplitudes();
        const auto& b = post.amplitudes();
        const double p = std::norm(std::conj(b[0]) * a[0] + std::conj(b[1]) * a[1]);
        if (p < 1e-6) continue;
        CHECK(std::abs(weak_value(pre, post, pauli::x()).postselection_probability - p) < 1e-12);
    }
}

TEST_CASE("weak value is invariant under global phases") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, kTwoPi);
    for (int i = 0; i < 200; ++i) {
        const QubitState pre = random_state(rng);
        const QubitState post = random_state(rng);
        const Operator2 op = projector_from_state(random_state(rng));
        const Complex base = weak_value(pre, post, op, 1e-8).value;
        CHECK(std::abs(weak_value(pre.with_global_phase(u(rng)), post, op, 1e-8).value - base) < 1e-12 * (1 + std::abs(base)));
        CHECK(std::abs(weak_value(pre, post.with_global_phase(u(rng)), op, 1e-8).value - base) < 1e-12 * (1 + std::abs(base)));
    }
}

TEST_CASE("commutator_expectation_direct examples") {
    const Complex at_half_pi = commutator_expectation_direct(pauli::z(), pauli::x(), QubitState::equal_superposition(kPi / 2));
    CHECK(std::abs(at_half_pi - Complex(0.0, 2.0)) < 1e-15);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        CHECK(std::abs(commutator_expectation_direct(pauli::z(), pauli::z(), random_state(rng))) == 0.0);
    }
    CHECK(std::abs(commutator_expectation_direct(pauli::z(), pauli::x(), QubitState::equal_superposition(0.0))) < 1e-15);
}

TEST_CASE("Hermitian commutators are imaginary and antisymmetric") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int i = 0; i < 500; ++i) {
        const Operator2 a = pauli::axis(g(rng), g(rng), g(rng));
        const Operator2 b = pauli::axis(g(rng), g(rng), g(rng));
        const QubitState psi = random_state(rng);
        const Complex ab = commutator_expectation_direct(a, b, psi);
        CHECK(std::abs(ab.real()) < 1e-12);
        CHECK(std::abs(ab + commutator_expectation_direct(b, a, psi)) < 1e-12);
    }
}

TEST_CASE("commutator_via_weak_value examples") {
    const Operator2 pi1 = projector_from_state(QubitState::plus_z());
    const Complex v = commutator_via_weak_value(QubitState::equal_superposition(kPi / 2), pi1, QubitState::plus_x());
    CHECK(std::abs(v - Complex(0.0, 2.0)) < 1e-12);
    CHECK(std::abs(commutator_via_weak_value(QubitState::plus_x(), pi1, QubitState::plus_x())) < 1e-15);
    CHECK_THROWS_AS(commutator_via_weak_value(QubitState::minus_x(), pi1, QubitState::plus_x()),
                    NearOrthogonalPostselection);
}

TEST_CASE("commutator via weak value equals the brute-force oracle") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < 1000; ++i) {
        const oracle::V2 raw = {oracle::C(g(rng), g(rng)), oracle::C(g(rng), g(rng))};
        const double ax = g(rng), ay = g(rng), az = g(rng);
        const double bx = g(rng), by = g(rng), bz = g(rng);
        const oracle::C expect =
            oracle::commutator_expectation(oracle::axis_observable(ax, ay, az), oracle::axis_observable(bx, by, bz), raw);
        const QubitState psi(raw[0], raw[1]);
        try {
            const Complex got = commutator_via_weak_value(psi, projector_from_state(QubitState::from_bloch(ax, ay, az)),
                                                          QubitState::from_bloch(bx, by, bz));
            worst = std::max(worst, std::abs(got - expect));
            ++used;
        } catch (const NearOrthogonalPostselection&) {
        }
    }
    CHECK(used > 990);
    CHECK(worst < 1e-12);
}

TEST_CASE("commutator via weak value on Pauli pairs") {
    std::mt19937_64 rng(77);
    const std::array<std::array<double, 3>, 3> axes = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int i = 0; i < 100; ++i) {
        const QubitState psi = random_state(rng);
        for (const auto& a : axes)
            for (const auto& b : axes) {
                const Complex direct =
                    commutator_expectation_direct(pauli::axis(a[0], a[1], a[2]), pauli::axis(b[0], b[1], b[2]), psi);
                try {
                    const Complex via = commutator_via_weak_value(
                        psi, projector_from_state(QubitState::from_bloch(a[0], a[1], a[2])),
                        QubitState::from_bloch(b[0], b[1], b[2]));
                    CHECK(std::abs(via - direct) < 1e-12);
                } catch (const NearOrthogonalPostselection&) {
                }
            }
    }
}

TEST_CASE("scalar identity sides") {
    IdentitySides s = scalar_identity_sides(0.0);
    CHECK(std::abs(s.lhs) < 1e-15);
    CHECK(std::abs(s.rhs) < 1e-15);
    s = scalar_identity_sides(kPi / 2);
    CHECK(s.lhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.rhs == doctest::Approx(1.0).epsilon(1e-12));
    s = scalar_identity_sides(kPi / 3);
    CHECK(s.lhs == doctest::Approx(0.8660254037844386).epsilon(1e-12));
    CHECK(s.rhs == doctest::Approx(0.8660254037844386).epsilon(1e-12));
    CHECK_THROWS_AS(scalar_identity_sides(kPi), NearOrthogonalPostselection);

    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double chi = kTwoPi * (k + 0.5) / 100.0;  // never lands on pi
        const IdentitySides v = scalar_identity_sides(chi);
        worst = std::max({worst, std::abs(v.lhs - std::sin(chi)), std::abs(v.rhs - std::sin(chi))});
    }
    CHECK(worst < 1e-12);
}
