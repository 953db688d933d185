#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qhash/errors.hpp"
#include "qhash/group.hpp"
#include "qhash/unitary.hpp"

namespace qhash {

/// Binary message, characters restricted to {0,1}. Empty is allowed.
class Message {
public:
    Message() = default;
    explicit Message(std::string bits) : bits_(std::move(bits)) {
        for (char c : bits_)
            if (c != '0' && c != '1')
                throw std::invalid_argument("Message: bits must be 0 or 1");
    }

    const std::string& bits() const { return bits_; }
    Index size() const { return static_cast<Index>(bits_.size()); }

private:
    std::string bits_;
};

/// Group, chosen automorphism key K = {k_0..k_{t-1}} and the collision bound.
class HashParams {
public:
    HashParams(GroupSpec spec, std::vector<Automorphism> key, double epsilon)
        : spec_(std::move(spec)), key_(std::move(key)), epsilon_(epsilon) {
        if (key_.empty()) throw std::invalid_argument("HashParams: key must be non-empty");
        if (!(epsilon_ > 0.0) || epsilon_ > 1.0)
            throw std::invalid_argument("HashParams: epsilon must lie in (0, 1]");
        for (const Automorphism& k : key_)
            Automorphism(spec_, k.multipliers());  // re-validates against this spec
    }

    const GroupSpec& spec() const { return spec_; }
    const std::vector<Automorphism>& key() const { return key_; }
    Index set_size() const { return static_cast<Index>(key_.size()); }
    double epsilon() const { return epsilon_; }

private:
    GroupSpec spec_;
    std::vector<Automorphism> key_;
    double epsilon_;
};

/// Hash state |Psi> as a branch-major complex vector of length t * 2^m.
template <typename Scalar = double>
struct HashState {
    ComplexVector<Scalar> amplitudes;
    Index t = 0;
    Index m = 0;

    Index branch_dim() const { return Index{1} << m; }
};

/// h(x): the message read as a big-endian integer, reduced per component.
/// Computed incrementally, so message length is unbounded.
inline GroupElement classical_hash(const GroupSpec& spec, const Message& x) {
    GroupElement g = identity(spec);
    for (Index i = 0; i < spec.component_count(); ++i) {
        const Index q = spec.modulus(i);
        __int128 r = 0;
        for (char c : x.bits()) r = (r * 2 + (c - '0')) % q;
        g.residues[static_cast<std::size_t>(i)] = static_cast<Index>(r);
    }
    return g;
}

/// h(u.v) from h(u) and the suffix v: shifts the prefix hash by 2^|v| and
/// folds in the suffix bits, per component.
inline GroupElement shift_compose(const GroupSpec& spec, const GroupElement& prefix_hash,
                                  const Message& v) {
    detail::require_conforming(spec, prefix_hash, "shift_compose");
    GroupElement g = prefix_hash;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const Index q = spec.modulus(i);
        __int128 r = prefix_hash.residues[static_cast<std::size_t>(i)];
        for (char c : v.bits()) r = (r * 2 + (c - '0')) % q;
        g.residues[static_cast<std::size_t>(i)] = static_cast<Index>(r);
    }
    return g;
}

namespace detail {

// Compensated accumulation; summation order stays the enumeration order, so
// results reproduce bitwise across runs and worker counts.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

// Per-component cosine tables for the exhaustive and Monte Carlo scans.
// Entries are component_cosine(r, q) verbatim, so table lookups match the
// closed-form amplitude() bit for bit.
struct CosineTables {
    explicit CosineTables(const GroupSpec& spec) {
        tables.reserve(static_cast<std::size_t>(spec.component_count()));
        for (Index i = 0; i < spec.component_count(); ++i) {
            const Index q = spec.modulus(i);
            std::vector<double> tab(static_cast<std::size_t>(q));
            for (Index r = 0; r < q; ++r)
                tab[static_cast<std::size_t>(r)] = component_cosine<double>(r, q);
            tables.push_back(std::move(tab));
        }
    }
    std::vector<std::vector<double>> tables;
};

// Key multipliers flattened to a t x m row-major block.
inline std::vector<Index> flatten_key(const std::vector<Automorphism>& key) {
    std::vector<Index> flat;
    if (key.empty()) return flat;
    const std::size_t m = key.front().multipliers().size();
    flat.reserve(key.size() * m);
    for (const Automorphism& k : key)
        flat.insert(flat.end(), k.multipliers().begin(), k.multipliers().end());
    return flat;
}

// (1/t) sum_j prod_i cos(2*pi*u_ji*g_i/q_i) via table lookups.
inline double mean_amplitude_tabulated(const GroupSpec& spec, const CosineTables& cosines,
                                       const std::vector<Index>& flat_key, Index t,
                                       const GroupElement& g) {
    const Index m = spec.component_count();
    KahanSum sum;
    for (Index j = 0; j < t; ++j) {
        double prod = 1.0;
        for (Index i = 0; i < m; ++i) {
            const auto si = static_cast<std::size_t>(i);
            const Index r = static_cast<Index>(
                (static_cast<__int128>(flat_key[static_cast<std::size_t>(j * m) + si]) *
                 g.residues[si]) %
                spec.modulus(i));
            prod *= cosines.tables[si][static_cast<std::size_t>(r)];
        }
        sum.add(prod);
    }
    return sum.value() / static_cast<double>(t);
}

}  // namespace detail

/// (1/t) sum_j <0|f(k_j{g})|0>, the averaged amplitude behind every
/// collision check. Kahan-compensated in key order.
inline double key_mean_amplitude(const GroupSpec& spec, const std::vector<Automorphism>& key,
                                 const GroupElement& g) {
    if (key.empty()) throw std::invalid_argument("key_mean_amplitude: empty key");
    detail::KahanSum sum;
    for (const Automorphism& k : key)
        sum.add(amplitude<double>(spec, apply_automorphism(spec, k, g)));
    return sum.value() / static_cast<double>(key.size());
}

/// |Psi> = (1/sqrt t) sum_j |j> (x) f(k_j{g}) |0...0>.
template <typename Scalar = double>
HashState<Scalar> build_state(const HashParams& params, const GroupElement& g) {
    const GroupSpec& spec = params.spec();
    detail::require_conforming(spec, g, "build_state");
    const Index dim = rep_dim(spec);
    const Index t = params.set_size();
    HashState<Scalar> state{ComplexVector<Scalar>::Zero(t * dim), t, spec.component_count()};
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(t));
    for (Index j = 0; j < t; ++j) {
        auto branch = state.amplitudes.segment(j * dim, dim);
        branch(0) = scale;
        const GroupElement gj =
            apply_automorphism(spec, params.key()[static_cast<std::size_t>(j)], g);
        apply_rep_in_place<Scalar>(spec, gj, branch);
    }
    return state;
}

/// Branch-seeded variant: branch j of `branch_seed`, rescaled by sqrt(t), is
/// the |psi_j> that branch j's rotation acts on. With the seed set to a prior
/// hash state this continues that state by the group increment g.
template <typename Scalar = double>
HashState<Scalar> build_state(const HashParams& params, const GroupElement& g,
                              const HashState<Scalar>& branch_seed) {
    const GroupSpec& spec = params.spec();
    detail::require_conforming(spec, g, "build_state");
    const Index dim = rep_dim(spec);
    const Index t = params.set_size();
    if (branch_seed.t != t || branch_seed.m != spec.component_count() ||
        branch_seed.amplitudes.size() != t * dim)
        throw std::invalid_argument("build_state: branch seed dimensions do not match params");
    HashState<Scalar> state = branch_seed;
    for (Index j = 0; j < t; ++j) {
        auto branch = state.amplitudes.segment(j * dim, dim);
        const GroupElement gj =
            apply_automorphism(spec, params.key()[static_cast<std::size_t>(j)], g);
        apply_rep_in_place<Scalar>(spec, gj, branch);
    }
    return state;
}

/// Squared overlap |<Psi(x)|Psi(y)>|^2 in closed form: the states never get
/// materialized, only the averaged amplitude at Delta = h(x)^-1 o h(y).
inline double overlap_sq(const HashParams& params, const Message& x, const Message& y) {
    const GroupSpec& spec = params.spec();
    const GroupElement delta =
        compose(spec, inverse(spec, classical_hash(spec, x)), classical_hash(spec, y));
    const double s = key_mean_amplitude(spec, params.key(), delta);
    return s * s;
}

/// Hash of u.v computed by continuing from |Psi(u)>: the prefix state is fed
/// branch-wise as the seed and the suffix enters as the group increment
/// h(u)^-1 o h(u.v) (the shift-corrected suffix hash). Equals
/// build_state(h(u.v)) up to rounding.
template <typename Scalar = double>
HashState<Scalar> concat_state(const HashParams& params, const Message& u, const Message& v) {
    const GroupSpec& spec = params.spec();
    const GroupElement hu = classical_hash(spec, u);
    const HashState<Scalar> prefix = build_state<Scalar>(params, hu);
    const GroupElement huv = shift_compose(spec, hu, v);
    const GroupElement increment = compose(spec, inverse(spec, hu), huv);
    return build_state<Scalar>(params, increment, prefix);
}

/// Applies f(k_j{g^-1}) branch-wise: undoes the g used to build the state.
template <typename Scalar = double>
HashState<Scalar> invert_state(const HashParams& params, const HashState<Scalar>& state,
                               const GroupElement& g) {
    const GroupSpec& spec = params.spec();
    detail::require_conforming(spec, g, "invert_state");
    const Index dim = rep_dim(spec);
    const Index t = params.set_size();
    if (state.t != t || state.m != spec.component_count() ||
        state.amplitudes.size() != t * dim)
        throw std::invalid_argument("invert_state: state dimensions do not match params");
    const GroupElement ginv = inverse(spec, g);
    HashState<Scalar> out = state;
    for (Index j = 0; j < t; ++j) {
        auto branch = out.amplitudes.segment(j * dim, dim);
        const GroupElement gj =
            apply_automorphism(spec, params.key()[static_cast<std::size_t>(j)], ginv);
        apply_rep_in_place<Scalar>(spec, gj, branch);
    }
    return out;
}

/// Worst-case averaged squared amplitude over all g != e, and its argmax.
struct CollisionScan {
    double delta = 0.0;
    GroupElement worst;
};

/// Exhaustive collision-resistance scan: delta = max over g != e of
/// ((1/t) sum_j <0|f(k_j{g})|0>)^2. The key is epsilon-good iff
/// delta < epsilon. Ties resolve to the lexicographically smallest element;
/// the element range may be partitioned across threads, the result does not
/// depend on the partitioning.
inline CollisionScan collision_resistance(const HashParams& params,
                                          Index guard = kDefaultEnumerationGuard,
                                          int threads = 1) {
    const GroupSpec& spec = params.spec();
    if (spec.order() > guard)
        throw CapacityError("collision_resistance: group order " +
                            std::to_string(spec.order()) + " exceeds guard " +
                            std::to_string(guard));
    const detail::CosineTables cosines(spec);
    const std::vector<Index> flat = detail::flatten_key(params.key());
    const Index t = params.set_size();

    struct Best {
        double value = -1.0;
        Index index = -1;
    };
    const Index first = 1;  // skip the identity at index 0
    const Index last = spec.order();
    const auto scan = [&](Index begin, Index end) {
        Best best;
        GroupElement g = element_at(spec, begin);
        for (Index idx = begin; idx < end; ++idx) {
            const double s = detail::mean_amplitude_tabulated(spec, cosines, flat, t, g);
            const double value = s * s;
            if (value > best.value) {
                best.value = value;
                best.index = idx;
            }
            detail::increment_element(spec, g);
        }
        return best;
    };

    std::vector<Best> partials;
    const Index span = last - first;
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(
                                                               std::min<Index>(span, 256))));
    if (workers == 1) {
        partials.push_back(scan(first, last));
    } else {
        partials.resize(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const Index begin = first + span * w / workers;
            const Index end = first + span * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                partials[static_cast<std::size_t>(w)] = scan(begin, end);
            });
        }
        for (auto& th : pool) th.join();
    }

    Best best;
    for (const Best& p : partials)
        if (p.index >= 0 && p.value > best.value) best = p;  // first chunk wins exact ties
    return CollisionScan{best.value, element_at(spec, best.index)};
}

}  // namespace qhash
