#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qfe/statevector.hpp"
#include "support/oracles.hpp"

using namespace qfe;
namespace oracle = qfe::testing;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("zero_state puts all amplitude on index 0") {
    const Statevector s1 = zero_state(1);
    CHECK(s1.size() == 2);
    CHECK(s1.amplitude(0) == std::complex<double>(1.0, 0.0));
    CHECK(s1.amplitude(1) == std::complex<double>(0.0, 0.0));

    const Statevector s2 = zero_state(2);
    CHECK(s2.size() == 4);
    CHECK(s2.amplitude(0).real() == 1.0);
    for (std::size_t i = 1; i < 4; ++i) CHECK(s2.amplitude(i) == std::complex<double>(0.0));

    const Statevector s9 = zero_state(9);
    CHECK(s9.size() == 512);
    CHECK(s9.amplitude(0).real() == 1.0);
}

TEST_CASE("zero_state rejects out-of-range sizes") {
    CHECK_THROWS_AS(zero_state(0), std::invalid_argument);
    CHECK_THROWS_AS(zero_state(-3), std::invalid_argument);
    CHECK_THROWS_AS(zero_state(17), std::invalid_argument);
}

TEST_CASE("Hadamard on |0> gives the equal superposition") {
    const Statevector s = apply_gate(zero_state(1), Gate::h(0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(s.amplitude(0).real() == doctest::Approx(r).epsilon(1e-14));
    CHECK(s.amplitude(1).real() == doctest::Approx(r).epsilon(1e-14));
}

TEST_CASE("RY(pi) flips |0> to +|1>") {
    const Statevector t = apply_gate(zero_state(1), Gate::ry(0, kPi));
    CHECK(std::abs(t.amplitude(0)) < 1e-15);
    CHECK(t.amplitude(1).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(t.amplitude(1).imag()) < 1e-15);
}

TEST_CASE("CNOT(control=0, target=1) maps index 1 to index 3") {
    Statevector s = zero_state(2);
    s.apply(Gate::ry(0, kPi));  // |q1 q0> = |01>, amplitude index 1
    CHECK(s.amplitude(1).real() == doctest::Approx(1.0));
    s.apply(Gate::cnot(0, 1));
    CHECK(s.amplitude(3).real() == doctest::Approx(1.0));
    CHECK(std::abs(s.amplitude(1)) < 1e-15);
}

TEST_CASE("gate application rejects bad qubit indices") {
    Statevector s = zero_state(2);
    CHECK_THROWS_AS(s.apply(Gate::h(2)), std::out_of_range);
    CHECK_THROWS_AS(s.apply(Gate::cnot(0, 5)), std::out_of_range);
    CHECK_THROWS_AS(s.apply(Gate::cnot(1, 1)), std::invalid_argument);
}

TEST_CASE("<Z0> expectations: eigenstate, rotated state, Bell parity") {
    CHECK(expectation(zero_state(1), Observable::z(0)) == doctest::Approx(1.0));

    // <Z> after RY(theta) is cos(theta); cross-check against the dense oracle.
    const double theta = kPi / 3.0;
    const Statevector s = apply_gate(zero_state(1), Gate::ry(0, theta));
    CHECK(expectation(s, Observable::z(0)) == doctest::Approx(0.5).epsilon(1e-12));
    const auto dense = oracle::dense_run(1, {Gate::ry(0, theta)});
    CHECK(expectation(s, Observable::z(0)) ==
          doctest::Approx(oracle::dense_expectation(dense, Observable::z(0), 1)).epsilon(1e-13));

    Statevector bell = zero_state(2);
    bell.apply(Gate::h(0));
    bell.apply(Gate::cnot(0, 1));
    Observable zz;
    zz.terms.push_back({1.0, {{0, Pauli::Z}, {1, Pauli::Z}}});
    CHECK(expectation(bell, zz) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("expectation rejects observables beyond the register") {
    CHECK_THROWS_AS(expectation(zero_state(1), Observable::z(1)), std::out_of_range);
}

TEST_CASE("identity observable contributes its coefficient") {
    Statevector s = zero_state(2);
    s.apply(Gate::h(0));
    s.apply(Gate::rx(1, 0.7));
    CHECK(expectation(s, Observable::identity(2.5)) == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("X and Y pauli strings match the dense oracle") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        const auto gates = oracle::random_circuit(rng, n, 12);
        Statevector s = zero_state(n);
        s.apply(gates);
        const auto dense = oracle::dense_run(n, gates);

        Observable obs;
        obs.terms.push_back({0.8, {{0, Pauli::X}}});
        obs.terms.push_back({-0.3, {{0, Pauli::Y}, {1, Pauli::Z}}});
        obs.terms.push_back({0.5, {{1, Pauli::X}, {0, Pauli::Z}}});
        CHECK(expectation(s, obs) ==
              doctest::Approx(oracle::dense_expectation(dense, obs, n)).epsilon(1e-11));
    }
}

TEST_CASE("norm is preserved over 1000 random gate sequences") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 10);
        const int len = 1 + static_cast<int>(rng.next_u64() % 50);
        Statevector s = zero_state(n);
        s.apply(oracle::random_circuit(rng, n, len));
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("a gate sequence followed by its inverse returns to the start") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        const auto gates = oracle::random_circuit(rng, n, 30);
        Statevector s = zero_state(n);
        s.apply(gates);
        const std::vector<Gate> inv = oracle::inverse_sequence(gates);
        s.apply(inv);
        CHECK(std::abs(s.amplitude(0) - std::complex<double>(1.0, 0.0)) < 1e-10);
        for (std::size_t i = 1; i < s.size(); ++i) CHECK(std::abs(s.amplitude(i)) < 1e-10);
    }
}

TEST_CASE("expectations are bounded by the observable weight") {
    Rng rng(99);
    Observable obs;
    obs.terms.push_back({0.7, {{0, Pauli::Z}}});
    obs.terms.push_back({-1.2, {{1, Pauli::X}}});
    obs.terms.push_back({0.4, {{0, Pauli::Y}, {1, Pauli::Y}}});
    const double bound = obs.weight_bound();
    CHECK(bound == doctest::Approx(2.3));
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        Statevector s = zero_state(n);
        s.apply(oracle::random_circuit(rng, n, 20));
        CHECK(std::abs(expectation(s, obs)) <= bound + 1e-12);
    }
}

TEST_CASE("kernels agree with the dense-matrix oracle on every gate kind") {
    Rng rng(2024);
    for (int n = 1; n <= 4; ++n) {
        for (int trial = 0; trial < 30; ++trial) {
            const auto gates = oracle::random_circuit(rng, n, 25);
            Statevector fast = zero_state(n);
            fast.apply(gates);
            const auto dense = oracle::dense_run(n, gates);
            for (std::size_t i = 0; i < fast.size(); ++i)
                CHECK(std::abs(fast.amplitude(i) - dense[i]) < 1e-12);
        }
    }
}

TEST_CASE("run_circuit counts simulations") {
    reset_simulation_count();
    const std::vector<Gate> gates = {Gate::h(0), Gate::cnot(0, 1)};
    (void)run_circuit(2, gates);
    (void)run_circuit(2, gates);
    CHECK(simulation_count() == 2);
    reset_simulation_count();
    CHECK(simulation_count() == 0);
}
