#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qhash/errors.hpp"
#include "qhash/group.hpp"

namespace qhash {

template <typename Scalar = double>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar = double>
Scalar component_angle(Index g, Index q) {
    return Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>(g) /
           static_cast<Scalar>(q);
}

/// cos(2*pi*g/q), the single-component <0|f(g)|0> matrix element. The hot
/// scan paths tabulate exactly this expression so both routes agree bitwise.
template <typename Scalar = double>
Scalar component_cosine(Index g, Index q) {
    return std::cos(component_angle<Scalar>(g, q));
}

/// Plane rotation by 2*pi*g/q, the image of g under the cyclic-component
/// homomorphism. Real orthogonal; stored complex to match the state algebra.
/// The full-angle convention (period q, not 2q) is what makes g -> R(g) a
/// homomorphism from Z_q with R(q*g) = I.
template <typename Scalar = double>
Eigen::Matrix<std::complex<Scalar>, 2, 2> rotation_matrix(Index g, Index q) {
    if (q < 2) throw std::invalid_argument("rotation_matrix: modulus must be >= 2");
    if (g < 0 || g >= q) throw std::invalid_argument("rotation_matrix: residue out of [0, q)");
    const Scalar c = component_cosine<Scalar>(g, q);
    const Scalar s = std::sin(component_angle<Scalar>(g, q));
    Eigen::Matrix<std::complex<Scalar>, 2, 2> rot;
    rot << std::complex<Scalar>(c), std::complex<Scalar>(-s),
           std::complex<Scalar>(s), std::complex<Scalar>(c);
    return rot;
}

/// Dense dimension 2^m of the representation space, one qubit per component.
inline Index rep_dim(const GroupSpec& spec) {
    const Index m = spec.component_count();
    if ((Index{1} << m) > kMaxRepDim || m >= 63)
        throw CapacityError("rep_dim: 2^m exceeds dense guard " + std::to_string(kMaxRepDim));
    return Index{1} << m;
}

/// Dense image of g: the Kronecker product of per-component rotations,
/// component 0 as the most significant tensor factor.
template <typename Scalar = double>
ComplexMatrix<Scalar> rep_matrix(const GroupSpec& spec, const GroupElement& g) {
    detail::require_conforming(spec, g, "rep_matrix");
    rep_dim(spec);
    ComplexMatrix<Scalar> acc = rotation_matrix<Scalar>(g.residues[0], spec.modulus(0));
    for (Index i = 1; i < spec.component_count(); ++i) {
        const auto rot =
            rotation_matrix<Scalar>(g.residues[static_cast<std::size_t>(i)], spec.modulus(i));
        acc = Eigen::kroneckerProduct(acc, rot).eval();
    }
    return acc;
}

/// <0...0| f(g) |0...0> evaluated in closed form as a product of cosines;
/// equals rep_matrix(spec, g)(0, 0) without materializing the tensor product.
template <typename Scalar = double>
Scalar amplitude(const GroupSpec& spec, const GroupElement& g) {
    detail::require_conforming(spec, g, "amplitude");
    Scalar prod = 1;
    for (Index i = 0; i < spec.component_count(); ++i)
        prod *= component_cosine<Scalar>(g.residues[static_cast<std::size_t>(i)],
                                         spec.modulus(i));
    return prod;
}

/// Applies f(g) to a length-2^m vector in place, one 2x2 rotation per tensor
/// index. O(m * 2^m) instead of materializing the dense matrix.
template <typename Scalar, typename Derived>
void apply_rep_in_place(const GroupSpec& spec, const GroupElement& g,
                        Eigen::MatrixBase<Derived> const& block) {
    auto& v = const_cast<Eigen::MatrixBase<Derived>&>(block);
    detail::require_conforming(spec, g, "apply_rep_in_place");
    const Index m = spec.component_count();
    const Index dim = rep_dim(spec);
    if (v.size() != dim)
        throw std::invalid_argument("apply_rep_in_place: vector length is not 2^m");
    for (Index i = 0; i < m; ++i) {
        const Index gi = g.residues[static_cast<std::size_t>(i)];
        const Index q = spec.modulus(i);
        const Scalar c = component_cosine<Scalar>(gi, q);
        const Scalar s = std::sin(component_angle<Scalar>(gi, q));
        const Index stride = Index{1} << (m - 1 - i);
        for (Index base = 0; base < dim; ++base) {
            if (base & stride) continue;
            const std::complex<Scalar> x0 = v(base);
            const std::complex<Scalar> x1 = v(base + stride);
            v(base) = c * x0 - s * x1;
            v(base + stride) = s * x0 + c * x1;
        }
    }
}

}  // namespace qhash
