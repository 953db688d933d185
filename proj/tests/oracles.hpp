#pragma once

// Test-side oracles. These recompute everything the library claims through a
// different route: dense Kronecker products assembled by explicit index
// arithmetic, state vectors built term by term from raw trig calls, and
// number-theoretic sums (phi, Moebius, Ramanujan). They must stay independent
// of the fast paths in qhash/ so the comparisons mean something.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhash/group.hpp"

namespace oracle {

using qhash::Automorphism;
using qhash::GroupElement;
using qhash::GroupSpec;
using qhash::Index;

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Eigen::MatrixXcd rotation(Index g, Index q) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(g) /
                         static_cast<double>(q);
    Eigen::MatrixXcd rot(2, 2);
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return rot;
}

inline Eigen::MatrixXcd rep(const GroupSpec& spec, const GroupElement& g) {
    Eigen::MatrixXcd acc = rotation(g.residues[0], spec.modulus(0));
    for (Index i = 1; i < spec.component_count(); ++i)
        acc = kron(acc, rotation(g.residues[static_cast<std::size_t>(i)], spec.modulus(i)));
    return acc;
}

// |Psi> assembled term by term: branch j is (1/sqrt t) f(k_j{g}) |0...0>,
// with its own modular multiply for k_j{g} and the tensor column built as a
// Kronecker product of 2-vectors.
inline Eigen::VectorXcd state(const GroupSpec& spec, const std::vector<Automorphism>& key,
                              const GroupElement& g) {
    const Index m = spec.component_count();
    const Index dim = Index{1} << m;
    const auto t = static_cast<Index>(key.size());
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(t * dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(t));
    for (Index j = 0; j < t; ++j) {
        Eigen::VectorXcd branch = Eigen::VectorXcd::Ones(1);
        for (Index i = 0; i < m; ++i) {
            const auto si = static_cast<std::size_t>(i);
            const Index q = spec.modulus(i);
            const Index r =
                (key[static_cast<std::size_t>(j)].multipliers()[si] * g.residues[si]) % q;
            const double angle =
                2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(q);
            Eigen::VectorXcd qubit(2);
            qubit << std::cos(angle), std::sin(angle);
            Eigen::VectorXcd next(branch.size() * 2);
            for (Eigen::Index a = 0; a < branch.size(); ++a) {
                next(2 * a) = branch(a) * qubit(0);
                next(2 * a + 1) = branch(a) * qubit(1);
            }
            branch = std::move(next);
        }
        psi.segment(j * dim, dim) = scale * branch;
    }
    return psi;
}

inline double overlap_sq(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    return std::norm(x.dot(y));
}

inline Index phi(Index q) {
    Index count = 0;
    for (Index k = 1; k < q; ++k)
        if (std::gcd(k, q) == 1) ++count;
    return count;
}

inline int mobius(Index n) {
    int result = 1;
    for (Index p = 2; p * p <= n; ++p) {
        if (n % p != 0) continue;
        n /= p;
        if (n % p == 0) return 0;
        result = -result;
    }
    if (n > 1) result = -result;
    return result;
}

// Ramanujan sum c_q(g) = mu(q/d) * phi(q) / phi(q/d), d = gcd(g, q): the exact
// value of sum over units k of cos(2*pi*k*g/q).
inline double ramanujan(Index q, Index g) {
    const Index d = std::gcd(g, q);
    const Index qd = q / d;
    if (qd == 1) return static_cast<double>(phi(q));
    return static_cast<double>(mobius(qd)) * static_cast<double>(phi(q)) /
           static_cast<double>(phi(qd));
}

inline std::vector<Index> primes_up_to(Index n) {
    std::vector<bool> sieve(static_cast<std::size_t>(n + 1), true);
    std::vector<Index> primes;
    for (Index p = 2; p <= n; ++p) {
        if (!sieve[static_cast<std::size_t>(p)]) continue;
        primes.push_back(p);
        for (Index k = p * p; k <= n; k += p) sieve[static_cast<std::size_t>(k)] = false;
    }
    return primes;
}

// --- random generators for property tests -------------------------------

inline Index pick(std::mt19937_64& rng, Index lo, Index hi) {
    return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline GroupSpec random_spec(std::mt19937_64& rng, Index max_components, Index max_order,
                             Index max_modulus = 50) {
    const Index m = pick(rng, 1, max_components);
    std::vector<Index> moduli;
    Index cap = max_order;
    for (Index i = 0; i < m && cap >= 2; ++i) {
        const Index q = pick(rng, 2, std::min(max_modulus, cap));
        moduli.push_back(q);
        cap /= q;
    }
    if (moduli.empty()) moduli.push_back(2);
    return GroupSpec(std::move(moduli));
}

inline Automorphism random_automorphism(std::mt19937_64& rng, const GroupSpec& spec) {
    std::vector<Index> mult;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const Index q = spec.modulus(i);
        Index u = pick(rng, 1, q - 1);
        while (std::gcd(u, q) != 1) u = u % (q - 1) + 1;
        mult.push_back(u);
    }
    return Automorphism(spec, std::move(mult));
}

inline std::vector<Automorphism> random_key(std::mt19937_64& rng, const GroupSpec& spec,
                                            Index t) {
    std::vector<Automorphism> key;
    for (Index j = 0; j < t; ++j) key.push_back(random_automorphism(rng, spec));
    return key;
}

inline GroupElement random_element(std::mt19937_64& rng, const GroupSpec& spec) {
    GroupElement g = qhash::identity(spec);
    for (Index i = 0; i < spec.component_count(); ++i)
        g.residues[static_cast<std::size_t>(i)] = pick(rng, 0, spec.modulus(i) - 1);
    return g;
}

inline std::string random_bits(std::mt19937_64& rng, Index max_len) {
    const Index len = pick(rng, 0, max_len);
    std::string bits;
    for (Index i = 0; i < len; ++i) bits += (rng() & 1) ? '1' : '0';
    return bits;
}

}  // namespace oracle
