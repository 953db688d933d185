#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "qhash/errors.hpp"

namespace qhash {

using Index = std::int64_t;

/// A finite abelian group presented as an ordered product of cyclic factors
/// Z_{q_1} x ... x Z_{q_m}. Factors need not be prime powers or coprime.
class GroupSpec {
public:
    explicit GroupSpec(std::vector<Index> moduli) : moduli_(std::move(moduli)) {
        if (moduli_.empty())
            throw std::invalid_argument("GroupSpec: at least one modulus required");
        __int128 order = 1;
        for (Index q : moduli_) {
            if (q < 2)
                throw std::invalid_argument("GroupSpec: every modulus must be >= 2");
            order *= q;
            if (order >= (__int128{1} << 63))
                throw std::invalid_argument("GroupSpec: group order exceeds 2^63");
        }
        order_ = static_cast<Index>(order);
    }

    const std::vector<Index>& moduli() const { return moduli_; }
    Index modulus(Index i) const { return moduli_[static_cast<std::size_t>(i)]; }
    Index component_count() const { return static_cast<Index>(moduli_.size()); }
    Index order() const { return order_; }

    friend bool operator==(const GroupSpec& a, const GroupSpec& b) {
        return a.moduli_ == b.moduli_;
    }

private:
    std::vector<Index> moduli_;
    Index order_ = 1;
};

/// One residue per cyclic component, each reduced modulo its component modulus.
struct GroupElement {
    std::vector<Index> residues;

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.residues == b.residues;
    }
    friend auto operator<=>(const GroupElement& a, const GroupElement& b) {
        return a.residues <=> b.residues;
    }
};

/// Component-wise multiplication by units: residues[i] -> u_i * residues[i] mod q_i.
/// Coprimality of every multiplier is checked at construction, so a valid
/// Automorphism is always a bijection on its group.
class Automorphism {
public:
    Automorphism(const GroupSpec& spec, std::vector<Index> multipliers)
        : multipliers_(std::move(multipliers)) {
        if (static_cast<Index>(multipliers_.size()) != spec.component_count())
            throw std::invalid_argument("Automorphism: multiplier count does not match spec");
        for (Index i = 0; i < spec.component_count(); ++i) {
            const Index u = multipliers_[static_cast<std::size_t>(i)];
            const Index q = spec.modulus(i);
            if (u < 1 || u >= q)
                throw std::invalid_argument("Automorphism: multiplier out of range [1, q)");
            if (std::gcd(u, q) != 1)
                throw std::invalid_argument("Automorphism: multiplier not coprime to modulus");
        }
    }

    const std::vector<Index>& multipliers() const { return multipliers_; }

    friend bool operator==(const Automorphism& a, const Automorphism& b) {
        return a.multipliers_ == b.multipliers_;
    }
    friend auto operator<=>(const Automorphism& a, const Automorphism& b) {
        return a.multipliers_ <=> b.multipliers_;
    }

private:
    std::vector<Index> multipliers_;
};

namespace detail {

inline void require_conforming(const GroupSpec& spec, const GroupElement& g,
                               const char* where) {
    if (static_cast<Index>(g.residues.size()) != spec.component_count())
        throw std::invalid_argument(std::string(where) + ": element dimension mismatch");
}

// Odometer step in lexicographic residue order; wraps to identity after the
// last element.
inline void increment_element(const GroupSpec& spec, GroupElement& g) {
    for (Index i = spec.component_count() - 1; i >= 0; --i) {
        auto& r = g.residues[static_cast<std::size_t>(i)];
        if (++r < spec.modulus(i)) return;
        r = 0;
    }
}

}  // namespace detail

inline GroupElement identity(const GroupSpec& spec) {
    return GroupElement{std::vector<Index>(static_cast<std::size_t>(spec.component_count()), 0)};
}

inline GroupElement compose(const GroupSpec& spec, const GroupElement& a,
                            const GroupElement& b) {
    detail::require_conforming(spec, a, "compose");
    detail::require_conforming(spec, b, "compose");
    GroupElement out = a;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.residues[k] = (a.residues[k] + b.residues[k]) % spec.modulus(i);
    }
    return out;
}

inline GroupElement inverse(const GroupSpec& spec, const GroupElement& a) {
    detail::require_conforming(spec, a, "inverse");
    GroupElement out = a;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.residues[k] = (spec.modulus(i) - a.residues[k]) % spec.modulus(i);
    }
    return out;
}

inline GroupElement apply_automorphism(const GroupSpec& spec, const Automorphism& k,
                                       const GroupElement& g) {
    detail::require_conforming(spec, g, "apply_automorphism");
    GroupElement out = g;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const auto j = static_cast<std::size_t>(i);
        const __int128 prod =
            static_cast<__int128>(k.multipliers()[j]) * g.residues[j];
        out.residues[j] = static_cast<Index>(prod % spec.modulus(i));
    }
    return out;
}

/// Element at position idx in lexicographic residue order (identity is idx 0;
/// component 0 is the most significant mixed-radix digit).
inline GroupElement element_at(const GroupSpec& spec, Index idx) {
    GroupElement g = identity(spec);
    for (Index i = spec.component_count() - 1; i >= 0; --i) {
        const Index q = spec.modulus(i);
        g.residues[static_cast<std::size_t>(i)] = idx % q;
        idx /= q;
    }
    return g;
}

/// Lexicographic enumeration of all |G| elements, identity first.
/// Usable in range-for; the guard bounds |G| to keep exhaustive scans at desk scale.
class ElementRange {
public:
    explicit ElementRange(GroupSpec spec, Index guard = kDefaultEnumerationGuard)
        : spec_(std::move(spec)) {
        if (spec_.order() > guard)
            throw CapacityError("enumerate_elements: group order " +
                                std::to_string(spec_.order()) + " exceeds guard " +
                                std::to_string(guard));
    }

    class iterator {
    public:
        using value_type = GroupElement;
        using difference_type = std::ptrdiff_t;
        using iterator_category = std::input_iterator_tag;

        iterator(const GroupSpec* spec, Index pos)
            : spec_(spec), pos_(pos),
              current_(pos == 0 ? identity(*spec) : element_at(*spec, pos)) {}

        const GroupElement& operator*() const { return current_; }
        const GroupElement* operator->() const { return &current_; }

        iterator& operator++() {
            ++pos_;
            detail::increment_element(*spec_, current_);
            return *this;
        }
        iterator operator++(int) {
            iterator tmp = *this;
            ++*this;
            return tmp;
        }

        friend bool operator==(const iterator& a, const iterator& b) {
            return a.pos_ == b.pos_;
        }

    private:
        const GroupSpec* spec_;
        Index pos_;
        GroupElement current_;
    };

    iterator begin() const { return iterator(&spec_, 0); }
    iterator end() const { return iterator(&spec_, spec_.order()); }
    Index size() const { return spec_.order(); }

private:
    GroupSpec spec_;
};

/// All component-wise-unit automorphisms: the Cartesian product of the unit
/// groups Z_{q_i}^x, in lexicographic multiplier order. Size is prod phi(q_i).
inline std::vector<Automorphism> unit_group(const GroupSpec& spec,
                                            Index guard = kDefaultEnumerationGuard) {
    std::vector<std::vector<Index>> units;
    __int128 total = 1;
    for (Index i = 0; i < spec.component_count(); ++i) {
        const Index q = spec.modulus(i);
        // phi(q) > q/8 throughout the desk range, so a modulus this large
        // cannot have a unit group within the guard; refuse before scanning
        if (q > 8 * guard)
            throw CapacityError("unit_group: modulus too large for guard " +
                                std::to_string(guard));
        std::vector<Index> u;
        for (Index k = 1; k < q; ++k)
            if (std::gcd(k, q) == 1) u.push_back(k);
        total *= static_cast<Index>(u.size());
        if (total > guard)
            throw CapacityError("unit_group: size exceeds guard " + std::to_string(guard));
        units.push_back(std::move(u));
    }

    std::vector<Automorphism> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> pos(units.size(), 0);
    while (true) {
        std::vector<Index> mult(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) mult[i] = units[i][pos[i]];
        out.emplace_back(spec, std::move(mult));
        std::size_t i = units.size();
        while (i > 0) {
            --i;
            if (++pos[i] < units[i].size()) break;
            pos[i] = 0;
            if (i == 0) return out;
        }
    }
}

/// Prime-power factorization of n, sorted ascending by value. The factors are
/// pairwise coprime and multiply back to n, so Z_n is isomorphic to their product.
inline std::vector<Index> decompose_modulus(Index n) {
    if (n < 2) throw std::invalid_argument("decompose_modulus: n must be >= 2");
    std::vector<Index> out;
    for (Index p = 2; p * p <= n; ++p) {
        if (n % p != 0) continue;
        Index pk = 1;
        while (n % p == 0) {
            pk *= p;
            n /= p;
        }
        out.push_back(pk);
    }
    if (n > 1) out.push_back(n);
    std::sort(out.begin(), out.end());
    return out;
}

/// Parses the "4x3x5" group syntax shared by the CLI and file formats.
inline GroupSpec parse_group_spec(std::string_view text) {
    std::vector<Index> moduli;
    std::size_t start = 0;
    while (true) {
        const std::size_t sep = text.find('x', start);
        const std::string_view tok =
            text.substr(start, sep == std::string_view::npos ? sep : sep - start);
        Index q = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), q);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty())
            throw std::invalid_argument("parse_group_spec: malformed group string '" +
                                        std::string(text) + "'");
        moduli.push_back(q);
        if (sep == std::string_view::npos) break;
        start = sep + 1;
    }
    return GroupSpec(std::move(moduli));
}

inline std::string format_group_spec(const GroupSpec& spec) {
    std::string out;
    for (Index i = 0; i < spec.component_count(); ++i) {
        if (i > 0) out += 'x';
        out += std::to_string(spec.modulus(i));
    }
    return out;
}

}  // namespace qhash
