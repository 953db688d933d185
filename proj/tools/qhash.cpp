// qhash: build hash states, check overlaps, search and validate good
// automorphism sets, and sweep the size-bound landscape from the shell.
//
// Exit codes: 0 ok, 2 usage/parse error, 3 capacity guard, 4 I/O failure.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhash/errors.hpp"
#include "qhash/goodset.hpp"
#include "qhash/group.hpp"
#include "qhash/hash.hpp"
#include "qhash/io.hpp"
#include "qhash/version.hpp"

namespace {

using namespace qhash;

Index enumeration_guard() {
    const char* env = std::getenv("QHASH_GUARD");
    if (env == nullptr || *env == '\0') return kDefaultEnumerationGuard;
    Index guard = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), guard);
    if (ec != std::errc{} || ptr != text.data() + text.size() || guard < 1)
        throw std::invalid_argument("QHASH_GUARD: not a positive integer: " + text);
    return guard;
}

struct CommonArgs {
    std::string group;
    std::string key_path;
    std::string input;
    std::string x;
    std::string y;
    std::string mode;
    std::string out;
    std::string fixed_g;
    double epsilon = 1.0;
    Index size = 0;
    Index seeds = 1;
    std::uint64_t seed = 0;
    Index trials = 1000;
    int threads = 1;
    bool union_form = false;
    bool diagnostic = false;
    std::vector<double> epsilon_list;
    std::vector<Index> size_list;
};

struct KeySource {
    GroupSpec spec;
    std::vector<Automorphism> key;
    std::uint64_t seed = 0;
};

KeySource resolve_key(const CommonArgs& args, Index guard) {
    if (!args.key_path.empty()) {
        KeyFile kf = read_key_file(args.key_path);
        if (!args.group.empty() && !(parse_group_spec(args.group) == kf.spec))
            throw std::invalid_argument("--group disagrees with the key file's group");
        return KeySource{std::move(kf.spec), std::move(kf.key), kf.manifest.seed};
    }
    if (args.group.empty())
        throw std::invalid_argument("either --key or --group is required");
    if (args.size < 1)
        throw std::invalid_argument("--size is required when sampling a key");
    GroupSpec spec = parse_group_spec(args.group);
    const SamplerConfig config(spec, unit_group(spec, guard), args.size, 1.0, args.seed, 1);
    std::vector<Automorphism> key = sample_key(config);
    return KeySource{std::move(spec), std::move(key), args.seed};
}

GroupElement parse_element(const GroupSpec& spec, const std::string& text) {
    std::vector<Index> residues;
    std::size_t start = 0;
    while (true) {
        const std::size_t sep = text.find(',', start);
        const std::string tok =
            text.substr(start, sep == std::string::npos ? sep : sep - start);
        Index r = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), r);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty())
            throw std::invalid_argument("malformed group element '" + text + "'");
        residues.push_back(r);
        if (sep == std::string::npos) break;
        start = sep + 1;
    }
    if (static_cast<Index>(residues.size()) != spec.component_count())
        throw std::invalid_argument("group element has wrong component count");
    for (Index i = 0; i < spec.component_count(); ++i) {
        if (residues[static_cast<std::size_t>(i)] < 0 ||
            residues[static_cast<std::size_t>(i)] >= spec.modulus(i))
            throw std::invalid_argument("group element residue out of range");
    }
    return GroupElement{std::move(residues)};
}

using PayloadFn = std::function<void(JsonWriter&)>;

void emit_record(const RunManifest& manifest, const std::string& kind,
                 const std::string& mode, const PayloadFn& payload,
                 const std::string& out_path) {
    JsonWriter w;
    w.begin_object();
    w.key("manifest");
    write_manifest(w, manifest);
    w.key("kind").value(kind);
    if (!mode.empty()) w.key("mode").value(mode);
    w.key("payload");
    payload(w);
    w.end_object();
    std::cout << w.str() << "\n";
    if (!out_path.empty()) write_text_file(out_path, w.str() + "\n");
}

void write_goodset_payload(JsonWriter& w, const GoodSetReport& report,
                           const std::vector<Automorphism>& key) {
    w.begin_object();
    w.key("is_good").value(report.is_good);
    w.key("delta").value(report.delta);
    w.key("worst");
    write_element(w, report.worst);
    w.key("set_size").value(report.set_size);
    w.key("epsilon").value(report.epsilon);
    w.key("martingale_bound").value(report.martingale_bound);
    w.key("seed").value(report.seed);
    w.key("multipliers");
    write_multipliers(w, key);
    w.end_object();
}

int cmd_build(const CommonArgs& args) {
    const Index guard = enumeration_guard();
    KeySource source = resolve_key(args, guard);
    const HashParams params(source.spec, source.key, args.epsilon);
    const Message input(args.input);
    const GroupElement g = classical_hash(source.spec, input);
    const HashState<double> state = build_state(params, g);

    const RunManifest manifest =
        make_manifest("build", source.spec, args.epsilon, params.set_size(), source.seed);
    if (!args.out.empty()) write_text_file(args.out, state_file_text(manifest, state));

    emit_record(manifest, "state", "", [&](JsonWriter& w) {
        w.begin_object();
        w.key("t").value(state.t);
        w.key("m").value(state.m);
        w.key("dim").value(static_cast<Index>(state.amplitudes.size()));
        w.key("norm").value(state.amplitudes.norm());
        w.key("input").value(args.input);
        w.key("hash");
        write_element(w, g);
        if (!args.out.empty()) w.key("out").value(args.out);
        w.end_object();
    }, "");
    return 0;
}

int cmd_overlap(const CommonArgs& args) {
    const Index guard = enumeration_guard();
    KeySource source = resolve_key(args, guard);
    const HashParams params(source.spec, source.key, args.epsilon);
    const Message x(args.x);
    const Message y(args.y);
    const double value = overlap_sq(params, x, y);

    const RunManifest manifest =
        make_manifest("overlap", source.spec, args.epsilon, params.set_size(), source.seed);
    emit_record(manifest, "overlap", "", [&](JsonWriter& w) {
        w.begin_object();
        w.key("x").value(args.x);
        w.key("y").value(args.y);
        w.key("hash_x");
        write_element(w, classical_hash(source.spec, x));
        w.key("hash_y");
        write_element(w, classical_hash(source.spec, y));
        w.key("overlap_sq").value(value);
        w.key("epsilon").value(args.epsilon);
        w.key("below_epsilon").value(value < args.epsilon);
        w.end_object();
    }, args.out);
    return 0;
}

int cmd_goodset(const CommonArgs& args, bool epsilon_given) {
    const Index guard = enumeration_guard();
    if (args.mode != "bias" && !epsilon_given)
        throw std::invalid_argument("--epsilon is required for mode " + args.mode);
    const double epsilon = epsilon_given ? args.epsilon : 1.0;

    if (args.mode == "sample" || args.mode == "verify") {
        KeySource source = [&]() -> KeySource {
            if (args.mode == "sample") {
                if (args.group.empty())
                    throw std::invalid_argument("--group is required for mode sample");
                if (args.size < 1)
                    throw std::invalid_argument("--size is required for mode sample");
                GroupSpec spec = parse_group_spec(args.group);
                const SamplerConfig config(spec, unit_group(spec, guard), args.size, epsilon,
                                           args.seed, 1);
                std::vector<Automorphism> key = sample_key(config);
                return KeySource{std::move(spec), std::move(key), args.seed};
            }
            if (args.key_path.empty())
                throw std::invalid_argument("--key is required for mode verify");
            return resolve_key(args, guard);
        }();
        const GoodSetReport report =
            verify_good(source.spec, source.key, epsilon, source.seed, guard, args.threads);
        const RunManifest manifest =
            make_manifest("goodset", source.spec, epsilon, report.set_size, source.seed);
        if (args.mode == "sample" && !args.out.empty())
            write_text_file(args.out, key_file_text(manifest, source.spec, source.key));
        emit_record(manifest, "goodset", args.mode, [&](JsonWriter& w) {
            write_goodset_payload(w, report, source.key);
        }, args.mode == "verify" ? args.out : "");
        return 0;
    }

    if (args.group.empty()) throw std::invalid_argument("--group is required");
    const GroupSpec spec = parse_group_spec(args.group);

    if (args.mode == "search") {
        if (args.size < 1) throw std::invalid_argument("--size (max t) is required");
        const auto result = exhaustive_min_goodset(spec, epsilon, args.size, guard);
        const RunManifest manifest =
            make_manifest("goodset", spec, epsilon, args.size, args.seed);
        emit_record(manifest, "goodset", "search", [&](JsonWriter& w) {
            w.begin_object();
            w.key("found").value(result.has_value());
            w.key("epsilon").value(epsilon);
            w.key("max_t").value(args.size);
            if (result) {
                const GoodSetReport report =
                    verify_good(spec, result->key, epsilon, args.seed, guard, args.threads);
                w.key("t_min").value(result->t_min);
                w.key("delta").value(report.delta);
                w.key("multipliers");
                write_multipliers(w, result->key);
            }
            w.end_object();
        }, args.out);
        return 0;
    }

    if (args.mode == "bias") {
        BiasReport report;
        Index pool_size = 0;
        if (args.diagnostic) {
            const auto pool = scaling_pool(spec, guard);
            pool_size = static_cast<Index>(pool.size());
            report = bias_over_multipliers(spec, pool, guard);
        } else {
            const auto pool = args.key_path.empty() ? unit_group(spec, guard)
                                                    : read_key_file(args.key_path).key;
            pool_size = static_cast<Index>(pool.size());
            report = bias_report(spec, pool, guard);
        }
        const RunManifest manifest = make_manifest("goodset", spec, epsilon, 0, args.seed);
        emit_record(manifest, "bias", "bias", [&](JsonWriter& w) {
            w.begin_object();
            w.key("pool_size").value(pool_size);
            w.key("diagnostic").value(args.diagnostic);
            w.key("max_abs_bias").value(report.max_abs_bias);
            w.key("claimed_zero").value(report.claimed_zero);
            if (spec.order() <= 10'000) {
                w.key("per_element").begin_array();
                for (const auto& [g, bias] : report.per_element_bias) {
                    w.begin_object();
                    w.key("g");
                    write_element(w, g);
                    w.key("bias").value(bias);
                    w.end_object();
                }
                w.end_array();
            } else {
                w.key("per_element_omitted").value(true);
            }
            w.end_object();
        }, args.out);
        return 0;
    }

    if (args.mode == "montecarlo") {
        if (args.size < 1) throw std::invalid_argument("--size is required for montecarlo");
        const SamplerConfig config(spec, unit_group(spec, guard), args.size, epsilon,
                                   args.seed, args.trials);
        std::optional<GroupElement> fixed;
        if (!args.fixed_g.empty()) fixed = parse_element(spec, args.fixed_g);
        const MonteCarloReport report =
            monte_carlo_bad_rate(config, fixed, guard, args.threads);
        const RunManifest manifest =
            make_manifest("goodset", spec, epsilon, args.size, args.seed);
        emit_record(manifest, "montecarlo", "montecarlo", [&](JsonWriter& w) {
            w.begin_object();
            w.key("rate").value(report.rate);
            w.key("bound").value(report.bound);
            w.key("std_error").value(report.std_error);
            w.key("trials").value(report.trials);
            w.key("bad_count").value(report.bad_count);
            w.key("scope").value(report.fixed_element ? "fixed" : "any");
            if (fixed) {
                w.key("fixed_g");
                write_element(w, *fixed);
            }
            w.key("set_size").value(config.set_size());
            w.key("epsilon").value(epsilon);
            w.key("insufficient_statistics").value(report.insufficient_statistics);
            w.end_object();
        }, args.out);
        return 0;
    }

    throw std::invalid_argument("unknown mode '" + args.mode + "'");
}

int cmd_bounds(const CommonArgs& args) {
    if (args.group.empty()) throw std::invalid_argument("--group is required");
    const GroupSpec spec = parse_group_spec(args.group);
    const Index plain = required_size(args.epsilon, spec.order(), false);
    const Index with_union = required_size(args.epsilon, spec.order(), true);

    const RunManifest manifest = make_manifest("bounds", spec, args.epsilon,
                                               args.union_form ? with_union : plain, args.seed);
    emit_record(manifest, "bounds", "", [&](JsonWriter& w) {
        w.begin_object();
        w.key("epsilon").value(args.epsilon);
        w.key("group_order").value(spec.order());
        w.key("plain_size").value(plain);
        w.key("union_size").value(with_union);
        w.key("azuma_at_plain_size").value(azuma_bound(args.epsilon, plain));
        w.key("azuma_at_union_size").value(azuma_bound(args.epsilon, with_union));
        w.key("selected").value(args.union_form ? "union" : "plain");
        w.end_object();
    }, args.out);
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    const Index guard = enumeration_guard();
    if (args.group.empty()) throw std::invalid_argument("--group is required");
    if (args.epsilon_list.empty() || args.size_list.empty() || args.seeds < 1)
        throw std::invalid_argument("sweep ranges must be non-empty");
    if (args.out.empty()) throw std::invalid_argument("--out is required for sweep");
    const GroupSpec spec = parse_group_spec(args.group);
    const std::vector<Automorphism> pool = unit_group(spec, guard);
    const std::string group_str = format_group_spec(spec);

    const RunManifest manifest = make_manifest("sweep", spec, args.epsilon_list.front(),
                                               args.size_list.front(), args.seed);
    JsonWriter mw(false);
    write_manifest(mw, manifest);

    std::ofstream csv(args.out, std::ios::binary);
    if (!csv) throw IoError("cannot open for writing: " + args.out);
    csv << "# manifest: " << mw.str() << "\n";
    csv << "group,epsilon,t,seed,delta,is_good,azuma_bound,bad_rate,stderr\n";

    Index rows = 0;
    for (double epsilon : args.epsilon_list) {
        for (Index t : args.size_list) {
            for (Index s = 0; s < args.seeds; ++s) {
                const std::uint64_t seed = args.seed + static_cast<std::uint64_t>(s);
                const SamplerConfig config(spec, pool, t, epsilon, seed, args.trials);
                const GoodSetReport verdict = verify_good(
                    spec, sample_key(config), epsilon, seed, guard, args.threads);
                const MonteCarloReport mc =
                    monte_carlo_bad_rate(config, {}, guard, args.threads);
                csv << group_str << ',' << format_double(epsilon) << ',' << t << ',' << seed
                    << ',' << format_double(verdict.delta) << ',' << (verdict.is_good ? 1 : 0)
                    << ',' << format_double(mc.bound) << ',' << format_double(mc.rate) << ','
                    << format_double(mc.std_error) << "\n";
                ++rows;
            }
        }
    }
    csv.flush();
    if (!csv) throw IoError("write failed: " + args.out);

    emit_record(manifest, "sweep", "", [&](JsonWriter& w) {
        w.begin_object();
        w.key("rows").value(rows);
        w.key("out").value(args.out);
        w.end_object();
    }, "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum hash laboratory over finite abelian groups"};
    app.set_version_flag("--version", qhash::kToolVersion);
    app.require_subcommand(1);

    CommonArgs args;

    CLI::App* build = app.add_subcommand("build", "build and serialize a hash state");
    build->add_option("--group", args.group, "group moduli, e.g. 4x3x5");
    build->add_option("--key", args.key_path, "key file path");
    build->add_option("--size", args.size, "key size t when sampling");
    build->add_option("--seed", args.seed, "sampling seed");
    build->add_option("--input", args.input, "message bitstring");
    build->add_option("--epsilon", args.epsilon, "collision bound");
    build->add_option("--out", args.out, "state file path");
    build->add_option("--threads", args.threads, "worker threads");

    CLI::App* overlap = app.add_subcommand("overlap", "squared overlap of two hash states");
    overlap->add_option("--group", args.group, "group moduli");
    overlap->add_option("--key", args.key_path, "key file path");
    overlap->add_option("--size", args.size, "key size t when sampling");
    overlap->add_option("--seed", args.seed, "sampling seed");
    overlap->add_option("--x", args.x, "first message")->required();
    overlap->add_option("--y", args.y, "second message")->required();
    overlap->add_option("--epsilon", args.epsilon, "collision bound");
    overlap->add_option("--out", args.out, "record file path");
    overlap->add_option("--threads", args.threads, "worker threads");

    CLI::App* goodset = app.add_subcommand("goodset", "sample/verify/search/bias/montecarlo");
    goodset->add_option("--mode", args.mode, "sample|verify|search|bias|montecarlo")
        ->required()
        ->check(CLI::IsMember({"sample", "verify", "search", "bias", "montecarlo"}));
    goodset->add_option("--group", args.group, "group moduli");
    goodset->add_option("--key", args.key_path, "key file path");
    CLI::Option* geps = goodset->add_option("--epsilon", args.epsilon, "collision bound");
    goodset->add_option("--size", args.size, "key size t (max t for search)");
    goodset->add_option("--seed", args.seed, "sampling seed");
    goodset->add_option("--trials", args.trials, "Monte Carlo trials");
    goodset->add_option("--fixed-g", args.fixed_g, "fixed element residues, e.g. 1 or 1,0");
    goodset->add_flag("--diagnostic", args.diagnostic, "bias over all scalings, not units");
    goodset->add_option("--out", args.out, "output file path");
    goodset->add_option("--threads", args.threads, "worker threads");

    CLI::App* bounds = app.add_subcommand("bounds", "key-size bounds for epsilon and |G|");
    bounds->add_option("--epsilon", args.epsilon, "collision bound")->required();
    bounds->add_option("--group", args.group, "group moduli")->required();
    bounds->add_flag("--union", args.union_form, "select the union-bound size");
    bounds->add_option("--out", args.out, "record file path");

    CLI::App* sweep = app.add_subcommand("sweep", "grid sweep to CSV");
    sweep->add_option("--group", args.group, "group moduli")->required();
    sweep->add_option("--epsilon", args.epsilon_list, "epsilon values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--size", args.size_list, "key sizes")->required()->delimiter(',');
    sweep->add_option("--seed", args.seed, "base seed");
    sweep->add_option("--seeds", args.seeds, "number of seeds from base");
    sweep->add_option("--trials", args.trials, "Monte Carlo trials per row")
        ->default_val(Index{200});
    sweep->add_option("--out", args.out, "CSV path")->required();
    sweep->add_option("--threads", args.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (build->parsed()) return cmd_build(args);
        if (overlap->parsed()) return cmd_overlap(args);
        if (goodset->parsed()) return cmd_goodset(args, geps->count() > 0);
        if (bounds->parsed()) return cmd_bounds(args);
        if (sweep->parsed()) return cmd_sweep(args);
        return 2;
    } catch (const qhash::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const qhash::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
