#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "qhash/errors.hpp"
#include "qhash/group.hpp"
#include "qhash/hash.hpp"

namespace qhash {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic per-trial substream: parallel and serial execution draw the
// same keys for the same (seed, trial).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial) {
    return splitmix64(seed ^ splitmix64(trial + 1));
}

// Unbiased bounded draw by rejection. mt19937_64 output is fixed by the
// standard, so sequences reproduce across platforms (uniform_int_distribution
// would not).
inline std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    while (true) {
        const std::uint64_t v = rng();
        if (v < limit) return v % n;
    }
}

}  // namespace detail

/// 2 * exp(-epsilon * t / 2): the per-element Azuma tail at lambda = sqrt(eps) * t.
inline double azuma_bound(double epsilon, Index set_size) {
    return 2.0 * std::exp(-epsilon * static_cast<double>(set_size) / 2.0);
}

/// Union of the per-element tails over all g != e, clamped to 1.
inline double azuma_union_bound(double epsilon, Index set_size, Index group_order) {
    return std::min(1.0, static_cast<double>(group_order - 1) * azuma_bound(epsilon, set_size));
}

/// Key size making the Azuma tail small: ceil((2/eps) * ln|G|) in the plain
/// form, ceil((2/eps) * ln(2(|G|-1))) in the union form (the size at which
/// the union of per-element failure probabilities drops below 1).
inline Index required_size(double epsilon, Index group_order, bool union_bound) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::domain_error("required_size: epsilon must lie in (0, 1]");
    if (group_order < 2) throw std::domain_error("required_size: group order must be >= 2");
    const double arg = union_bound ? 2.0 * static_cast<double>(group_order - 1)
                                   : static_cast<double>(group_order);
    const double value = std::ceil(2.0 / epsilon * std::log(arg));
    if (!(value < 9.0e18)) throw std::domain_error("required_size: result overflows");
    return std::max<Index>(1, static_cast<Index>(value));
}

/// Sampling plan: ambient pool, key size, bound, seed and trial budget.
class SamplerConfig {
public:
    SamplerConfig(GroupSpec spec, std::vector<Automorphism> pool, Index set_size,
                  double epsilon, std::uint64_t seed, Index trials)
        : spec_(std::move(spec)), pool_(std::move(pool)), set_size_(set_size),
          epsilon_(epsilon), seed_(seed), trials_(trials) {
        if (pool_.empty()) throw std::invalid_argument("SamplerConfig: pool must be non-empty");
        if (set_size_ < 1) throw std::invalid_argument("SamplerConfig: set_size must be >= 1");
        if (trials_ < 1) throw std::invalid_argument("SamplerConfig: trials must be >= 1");
        if (!(epsilon_ > 0.0) || epsilon_ > 1.0)
            throw std::invalid_argument("SamplerConfig: epsilon must lie in (0, 1]");
        for (const Automorphism& k : pool_) Automorphism(spec_, k.multipliers());
    }

    const GroupSpec& spec() const { return spec_; }
    const std::vector<Automorphism>& pool() const { return pool_; }
    Index set_size() const { return set_size_; }
    double epsilon() const { return epsilon_; }
    std::uint64_t seed() const { return seed_; }
    Index trials() const { return trials_; }

private:
    GroupSpec spec_;
    std::vector<Automorphism> pool_;
    Index set_size_;
    double epsilon_;
    std::uint64_t seed_;
    Index trials_;
};

/// set_size independent uniform draws from the pool, with replacement,
/// from the given trial's substream. Deterministic in (seed, trial).
inline std::vector<Automorphism> sample_key(const SamplerConfig& config, Index trial = 0) {
    std::mt19937_64 rng(detail::substream_seed(config.seed(),
                                               static_cast<std::uint64_t>(trial)));
    std::vector<Automorphism> key;
    key.reserve(static_cast<std::size_t>(config.set_size()));
    const auto pool_size = static_cast<std::uint64_t>(config.pool().size());
    for (Index j = 0; j < config.set_size(); ++j)
        key.push_back(
            config.pool()[static_cast<std::size_t>(detail::bounded_uniform(rng, pool_size))]);
    return key;
}

/// Verdict of the exhaustive epsilon-good check plus the Azuma tail at this size.
struct GoodSetReport {
    bool is_good = false;
    double delta = 0.0;
    GroupElement worst;
    Index set_size = 0;
    double epsilon = 0.0;
    double martingale_bound = 0.0;
    std::uint64_t seed = 0;
};

inline GoodSetReport verify_good(const GroupSpec& spec, const std::vector<Automorphism>& key,
                                 double epsilon, std::uint64_t seed = 0,
                                 Index guard = kDefaultEnumerationGuard, int threads = 1) {
    if (key.empty()) throw std::invalid_argument("verify_good: key must be non-empty");
    const HashParams params(spec, key, epsilon);
    const CollisionScan scan = collision_resistance(params, guard, threads);
    GoodSetReport report;
    report.is_good = scan.delta < epsilon;
    report.delta = scan.delta;
    report.worst = scan.worst;
    report.set_size = params.set_size();
    report.epsilon = epsilon;
    report.martingale_bound = azuma_bound(epsilon, params.set_size());
    report.seed = seed;
    return report;
}

/// Mean amplitude over an ambient pool, per non-identity element.
struct BiasReport {
    std::vector<std::pair<GroupElement, double>> per_element_bias;  // enumeration order
    double max_abs_bias = 0.0;
    bool claimed_zero = false;  // max_abs_bias < 1e-9
};

/// Diagnostic pool of ALL component scalings {0..q_i-1}^m, not just units.
/// Over this pool the mean amplitude vanishes identically for g != e.
inline std::vector<std::vector<Index>> scaling_pool(const GroupSpec& spec,
                                                    Index guard = kDefaultEnumerationGuard) {
    std::vector<std::vector<Index>> pool;
    pool.reserve(static_cast<std::size_t>(spec.order()));
    for (const GroupElement& g : ElementRange(spec, guard)) pool.push_back(g.residues);
    return pool;
}

/// Mean-amplitude diagnostic over raw multiplier rows (coprimality not
/// required, so the full-scaling diagnostic pool is admissible).
inline BiasReport bias_over_multipliers(const GroupSpec& spec,
                                        const std::vector<std::vector<Index>>& pool,
                                        Index guard = kDefaultEnumerationGuard) {
    if (pool.empty()) throw std::invalid_argument("bias_over_multipliers: empty pool");
    if (static_cast<Index>(pool.size()) > guard)
        throw CapacityError("bias_over_multipliers: pool size exceeds guard");
    const Index m = spec.component_count();
    for (const auto& row : pool) {
        if (static_cast<Index>(row.size()) != m)
            throw std::invalid_argument("bias_over_multipliers: multiplier row size mismatch");
        for (Index i = 0; i < m; ++i) {
            const Index u = row[static_cast<std::size_t>(i)];
            if (u < 0 || u >= spec.modulus(i))
                throw std::invalid_argument("bias_over_multipliers: multiplier out of range");
        }
    }

    const detail::CosineTables cosines(spec);
    BiasReport report;
    report.per_element_bias.reserve(static_cast<std::size_t>(spec.order() - 1));
    for (const GroupElement& g : ElementRange(spec, guard)) {
        if (g == identity(spec)) continue;
        detail::KahanSum sum;
        for (const auto& row : pool) {
            double prod = 1.0;
            for (Index i = 0; i < m; ++i) {
                const auto si = static_cast<std::size_t>(i);
                const Index r = static_cast<Index>(
                    (static_cast<__int128>(row[si]) * g.residues[si]) % spec.modulus(i));
                prod *= cosines.tables[si][static_cast<std::size_t>(r)];
            }
            sum.add(prod);
        }
        const double bias = sum.value() / static_cast<double>(pool.size());
        report.per_element_bias.emplace_back(g, bias);
        report.max_abs_bias = std::max(report.max_abs_bias, std::abs(bias));
    }
    report.claimed_zero = report.max_abs_bias < 1e-9;
    return report;
}

inline BiasReport bias_report(const GroupSpec& spec, const std::vector<Automorphism>& pool,
                              Index guard = kDefaultEnumerationGuard) {
    std::vector<std::vector<Index>> rows;
    rows.reserve(pool.size());
    for (const Automorphism& k : pool) rows.push_back(k.multipliers());
    return bias_over_multipliers(spec, rows, guard);
}

/// Empirical rate of sampled keys failing the epsilon-good condition,
/// against the analytic tail.
struct MonteCarloReport {
    double rate = 0.0;
    double bound = 0.0;
    double std_error = 0.0;
    Index trials = 0;
    Index bad_count = 0;
    bool fixed_element = false;
    bool insufficient_statistics = false;  // trials * bound < 5
};

/// Samples config.trials keys and counts how many fail the epsilon-good
/// condition, either at one fixed g or at any g != e. Trials run on
/// per-trial substreams, so the aggregate is independent of threading.
inline MonteCarloReport monte_carlo_bad_rate(const SamplerConfig& config,
                                             const std::optional<GroupElement>& fixed_g = {},
                                             Index guard = kDefaultEnumerationGuard,
                                             int threads = 1) {
    if (config.trials() < 100)
        throw std::invalid_argument("monte_carlo_bad_rate: trials must be >= 100");
    const GroupSpec& spec = config.spec();
    const Index m = spec.component_count();
    if (fixed_g) {
        detail::require_conforming(spec, *fixed_g, "monte_carlo_bad_rate");
        if (*fixed_g == identity(spec))
            throw std::invalid_argument("monte_carlo_bad_rate: fixed element must not be e");
    } else if (spec.order() > guard) {
        throw CapacityError("monte_carlo_bad_rate: group order exceeds guard for any-g scan");
    }

    const auto pool_size = static_cast<std::uint64_t>(config.pool().size());
    const Index t = config.set_size();
    const double epsilon = config.epsilon();

    // Fixed-g trials only ever see each pool entry's amplitude at that g, so
    // tabulate those once; no enumeration, no guard. The any-g scan needs the
    // per-component cosine tables (component moduli are bounded by |G|, which
    // the guard already caps).
    std::vector<double> fixed_pool_amplitude;
    std::optional<detail::CosineTables> cosines;
    std::vector<Index> pool_flat;
    if (fixed_g) {
        fixed_pool_amplitude.reserve(config.pool().size());
        for (const Automorphism& k : config.pool())
            fixed_pool_amplitude.push_back(
                amplitude<double>(spec, apply_automorphism(spec, k, *fixed_g)));
    } else {
        cosines.emplace(spec);
        pool_flat.reserve(config.pool().size() * static_cast<std::size_t>(m));
        for (const Automorphism& k : config.pool())
            pool_flat.insert(pool_flat.end(), k.multipliers().begin(), k.multipliers().end());
    }

    const auto run_trials = [&](Index begin, Index end) {
        Index bad = 0;
        std::vector<Index> flat(static_cast<std::size_t>(t * m));
        for (Index trial = begin; trial < end; ++trial) {
            std::mt19937_64 rng(detail::substream_seed(config.seed(),
                                                       static_cast<std::uint64_t>(trial)));
            bool is_bad = false;
            if (fixed_g) {
                detail::KahanSum sum;
                for (Index j = 0; j < t; ++j)
                    sum.add(fixed_pool_amplitude[static_cast<std::size_t>(
                        detail::bounded_uniform(rng, pool_size))]);
                const double s = sum.value() / static_cast<double>(t);
                is_bad = s * s >= epsilon;
            } else {
                for (Index j = 0; j < t; ++j) {
                    const auto pick = detail::bounded_uniform(rng, pool_size);
                    for (Index i = 0; i < m; ++i)
                        flat[static_cast<std::size_t>(j * m + i)] =
                            pool_flat[static_cast<std::size_t>(
                                static_cast<Index>(pick) * m + i)];
                }
                GroupElement g = element_at(spec, 1);
                for (Index idx = 1; idx < spec.order(); ++idx) {
                    const double s =
                        detail::mean_amplitude_tabulated(spec, *cosines, flat, t, g);
                    if (s * s >= epsilon) {
                        is_bad = true;
                        break;
                    }
                    detail::increment_element(spec, g);
                }
            }
            if (is_bad) ++bad;
        }
        return bad;
    };

    Index bad_total = 0;
    const Index trials = config.trials();
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(
                                                               std::min<Index>(trials, 256))));
    if (workers == 1) {
        bad_total = run_trials(0, trials);
    } else {
        std::vector<Index> partial(static_cast<std::size_t>(workers), 0);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const Index begin = trials * w / workers;
            const Index end = trials * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                partial[static_cast<std::size_t>(w)] = run_trials(begin, end);
            });
        }
        for (auto& th : pool) th.join();
        for (Index b : partial) bad_total += b;
    }

    MonteCarloReport report;
    report.trials = trials;
    report.bad_count = bad_total;
    report.rate = static_cast<double>(bad_total) / static_cast<double>(trials);
    report.fixed_element = fixed_g.has_value();
    report.bound = fixed_g ? azuma_bound(epsilon, t)
                           : azuma_union_bound(epsilon, t, spec.order());
    report.std_error =
        std::sqrt(report.rate * (1.0 - report.rate) / static_cast<double>(trials));
    report.insufficient_statistics = static_cast<double>(trials) * report.bound < 5.0;
    return report;
}

/// Smallest good key, found by exhausting multisets of the unit group.
struct MinGoodSet {
    Index t_min = 0;
    std::vector<Automorphism> key;
};

/// Tightness probe for the size bound: the smallest t <= max_t and the
/// lexicographically first multiset of unit-group elements that is
/// epsilon-good, or nullopt when none exists.
inline std::optional<MinGoodSet> exhaustive_min_goodset(const GroupSpec& spec, double epsilon,
                                                        Index max_t,
                                                        Index guard = kDefaultEnumerationGuard) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::invalid_argument("exhaustive_min_goodset: epsilon must lie in (0, 1]");
    if (max_t < 1) throw std::invalid_argument("exhaustive_min_goodset: max_t must be >= 1");
    if (spec.order() > guard)
        throw CapacityError("exhaustive_min_goodset: group order exceeds guard");
    const std::vector<Automorphism> pool = unit_group(spec, guard);
    const auto pool_size = static_cast<Index>(pool.size());
    __int128 combos = 1;
    for (Index i = 0; i < max_t; ++i) {
        combos *= pool_size;
        if (combos > guard)
            throw CapacityError("exhaustive_min_goodset: |pool|^max_t exceeds guard");
    }

    const detail::CosineTables cosines(spec);
    const Index m = spec.component_count();
    const auto is_good = [&](const std::vector<Index>& flat, Index t) {
        GroupElement g = element_at(spec, 1);
        for (Index idx = 1; idx < spec.order(); ++idx) {
            const double s = detail::mean_amplitude_tabulated(spec, cosines, flat, t, g);
            if (s * s >= epsilon) return false;
            detail::increment_element(spec, g);
        }
        return true;
    };

    for (Index t = 1; t <= max_t; ++t) {
        std::vector<Index> pick(static_cast<std::size_t>(t), 0);  // non-decreasing indices
        std::vector<Index> flat(static_cast<std::size_t>(t * m));
        while (true) {
            for (Index j = 0; j < t; ++j)
                for (Index i = 0; i < m; ++i)
                    flat[static_cast<std::size_t>(j * m + i)] =
                        pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])]
                            .multipliers()[static_cast<std::size_t>(i)];
            if (is_good(flat, t)) {
                MinGoodSet result;
                result.t_min = t;
                for (Index j = 0; j < t; ++j)
                    result.key.push_back(
                        pool[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])]);
                return result;
            }
            Index pos = t - 1;
            while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == pool_size - 1) --pos;
            if (pos < 0) break;
            const Index next = pick[static_cast<std::size_t>(pos)] + 1;
            for (Index j = pos; j < t; ++j) pick[static_cast<std::size_t>(j)] = next;
        }
    }
    return std::nullopt;
}

}  // namespace qhash
