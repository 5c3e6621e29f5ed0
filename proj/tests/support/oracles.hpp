#pragma once

// Test-only reference implementations, kept independent of the library's
// simulation path: gates act through explicitly constructed 2^n x 2^n
// unitaries, derivatives through central finite differences.

#include <complex>
#include <functional>
#include <vector>

#include "qfe/optim.hpp"
#include "qfe/statevector.hpp"

namespace qfe::testing {

using cd = std::complex<double>;
using DenseMatrix = std::vector<std::vector<cd>>;  // [row][col]
using DenseVector = std::vector<cd>;

inline DenseMatrix zero_matrix(std::size_t dim) {
    return DenseMatrix(dim, std::vector<cd>(dim, cd{0.0, 0.0}));
}

inline std::array<std::array<cd, 2>, 2> single_qubit_matrix(const Gate& g) {
    const double c = std::cos(0.5 * g.angle), s = std::sin(0.5 * g.angle);
    switch (g.kind) {
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            return {{{cd(r), cd(r)}, {cd(r), cd(-r)}}};
        }
        case GateKind::RX:
            return {{{cd(c), cd(0.0, -s)}, {cd(0.0, -s), cd(c)}}};
        case GateKind::RY:
            return {{{cd(c), cd(-s)}, {cd(s), cd(c)}}};
        case GateKind::RZ:
            return {{{std::exp(cd(0.0, -0.5 * g.angle)), cd(0.0)},
                     {cd(0.0), std::exp(cd(0.0, 0.5 * g.angle))}}};
        default:
            throw std::logic_error("not a single-qubit gate");
    }
}

// Full unitary of one gate, built column by column from the basis action.
inline DenseMatrix gate_matrix(const Gate& g, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    DenseMatrix m = zero_matrix(dim);
    if (g.kind == GateKind::CNOT) {
        for (std::size_t j = 0; j < dim; ++j) {
            std::size_t i = j;
            if ((j >> g.control) & 1) i = j ^ (std::size_t{1} << g.target);
            m[i][j] = 1.0;
        }
    } else if (g.kind == GateKind::CZ) {
        for (std::size_t j = 0; j < dim; ++j)
            m[j][j] = (((j >> g.control) & 1) && ((j >> g.target) & 1)) ? -1.0 : 1.0;
    } else {
        const auto u = single_qubit_matrix(g);
        const std::size_t mask = std::size_t{1} << g.target;
        for (std::size_t j = 0; j < dim; ++j) {
            const std::size_t b = (j >> g.target) & 1;
            m[j & ~mask][j] += u[0][b];
            m[j | mask][j] += u[1][b];
        }
    }
    return m;
}

inline DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
    DenseVector out(v.size(), cd{0.0, 0.0});
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    return out;
}

inline DenseVector dense_run(int n_qubits, const std::vector<Gate>& gates) {
    DenseVector v(std::size_t{1} << n_qubits, cd{0.0, 0.0});
    v[0] = 1.0;
    for (const Gate& g : gates) v = matvec(gate_matrix(g, n_qubits), v);
    return v;
}

inline cd pauli_entry(Pauli p, std::size_t row_bit, std::size_t col_bit) {
    switch (p) {
        case Pauli::X: return (row_bit != col_bit) ? cd(1.0) : cd(0.0);
        case Pauli::Y:
            if (row_bit == col_bit) return cd(0.0);
            return (row_bit == 1) ? cd(0.0, 1.0) : cd(0.0, -1.0);
        case Pauli::Z:
            if (row_bit != col_bit) return cd(0.0);
            return (row_bit == 1) ? cd(-1.0) : cd(1.0);
    }
    return cd(0.0);
}

inline double dense_expectation(const DenseVector& v, const Observable& obs, int n_qubits) {
    const std::size_t dim = v.size();
    cd total = 0.0;
    for (const PauliTerm& term : obs.terms) {
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                cd entry = 1.0;
                for (int q = 0; q < n_qubits && entry != cd(0.0); ++q) {
                    const std::size_t ri = (i >> q) & 1, cj = (j >> q) & 1;
                    bool acted = false;
                    for (const auto& [oq, p] : term.ops) {
                        if (oq == q) {
                            entry *= pauli_entry(p, ri, cj);
                            acted = true;
                            break;
                        }
                    }
                    if (!acted && ri != cj) entry = 0.0;
                }
                if (entry != cd(0.0)) total += std::conj(v[i]) * entry * v[j] * term.coeff;
            }
        }
    }
    return total.real();
}

inline Gate inverse_gate(const Gate& g) {
    Gate inv = g;
    if (g.is_rotation()) inv.angle = -g.angle;
    return inv;  // H, CNOT, CZ are involutions
}

inline std::vector<Gate> inverse_sequence(const std::vector<Gate>& gates) {
    std::vector<Gate> out;
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) out.push_back(inverse_gate(*it));
    return out;
}

inline Gate random_gate(Rng& rng, int n_qubits) {
    const int kind = static_cast<int>(rng.next_u64() % (n_qubits >= 2 ? 6 : 4));
    const int target = static_cast<int>(rng.next_u64() % n_qubits);
    const double angle = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
    switch (kind) {
        case 0: return Gate::h(target);
        case 1: return Gate::rx(target, angle);
        case 2: return Gate::ry(target, angle);
        case 3: return Gate::rz(target, angle);
        default: {
            int control = static_cast<int>(rng.next_u64() % n_qubits);
            while (control == target) control = static_cast<int>(rng.next_u64() % n_qubits);
            return kind == 4 ? Gate::cnot(control, target) : Gate::cz(control, target);
        }
    }
}

inline std::vector<Gate> random_circuit(Rng& rng, int n_qubits, int length) {
    std::vector<Gate> out;
    out.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) out.push_back(random_gate(rng, n_qubits));
    return out;
}

// Central finite difference, the independent derivative oracle.
inline double finite_difference(const std::function<double(double)>& f, double x,
                                double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace qfe::testing
