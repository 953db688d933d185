#include "qhash/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qhash/errors.hpp"
#include "qhash/version.hpp"

namespace qhash {

RunManifest make_manifest(std::string command, const GroupSpec& spec, double epsilon,
                          Index set_size, std::uint64_t seed) {
    RunManifest manifest;
    manifest.command = std::move(command);
    manifest.group = spec.moduli();
    manifest.epsilon = epsilon;
    manifest.set_size = set_size;
    manifest.seed = seed;
    manifest.tool_version = kToolVersion;
    manifest.timestamp = now_iso8601_utc();
    return manifest;
}

std::string now_iso8601_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::string json_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size() + 2);
    for (char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

JsonWriter::JsonWriter(bool pretty) : pretty_(pretty) {}

void JsonWriter::newline() {
    if (!pretty_) return;
    out_ += '\n';
    out_.append(stack_.size() * 2, ' ');
}

void JsonWriter::before_value() {
    if (pending_key_) {
        pending_key_ = false;
        return;
    }
    if (stack_.empty()) return;
    if (!stack_.back().first) out_ += pretty_ ? "," : ",";
    stack_.back().first = false;
    if (stack_.back().array) newline();
}

JsonWriter& JsonWriter::begin_object() {
    before_value();
    stack_.push_back(Frame{false, true});
    out_ += '{';
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    const bool empty = stack_.back().first;
    stack_.pop_back();
    if (!empty) newline();
    out_ += '}';
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    before_value();
    stack_.push_back(Frame{true, true});
    out_ += '[';
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    const bool empty = stack_.back().first;
    stack_.pop_back();
    if (!empty) newline();
    out_ += ']';
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& name) {
    if (!stack_.back().first) out_ += ',';
    stack_.back().first = false;
    newline();
    out_ += '"';
    out_ += json_escape(name);
    out_ += pretty_ ? "\": " : "\":";
    pending_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& text) {
    before_value();
    out_ += '"';
    out_ += json_escape(text);
    out_ += '"';
    return *this;
}

JsonWriter& JsonWriter::value(const char* text) { return value(std::string(text)); }

JsonWriter& JsonWriter::value(double number) {
    before_value();
    out_ += format_double(number);
    return *this;
}

JsonWriter& JsonWriter::value(Index number) {
    before_value();
    out_ += std::to_string(number);
    return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t number) {
    before_value();
    out_ += std::to_string(number);
    return *this;
}

JsonWriter& JsonWriter::value(bool flag) {
    before_value();
    out_ += flag ? "true" : "false";
    return *this;
}

void write_manifest(JsonWriter& w, const RunManifest& manifest) {
    w.begin_object();
    w.key("command").value(manifest.command);
    w.key("group").begin_array();
    for (Index q : manifest.group) w.value(q);
    w.end_array();
    w.key("epsilon").value(manifest.epsilon);
    w.key("set_size").value(manifest.set_size);
    w.key("seed").value(manifest.seed);
    w.key("tool_version").value(manifest.tool_version);
    w.key("timestamp").value(manifest.timestamp);
    w.end_object();
}

void write_element(JsonWriter& w, const GroupElement& g) {
    w.begin_array();
    for (Index r : g.residues) w.value(r);
    w.end_array();
}

void write_multipliers(JsonWriter& w, const std::vector<Automorphism>& key) {
    w.begin_array();
    for (const Automorphism& k : key) {
        w.begin_array();
        for (Index u : k.multipliers()) w.value(u);
        w.end_array();
    }
    w.end_array();
}

std::string key_file_text(const RunManifest& manifest, const GroupSpec& spec,
                          const std::vector<Automorphism>& key) {
    JsonWriter w;
    w.begin_object();
    w.key("manifest");
    write_manifest(w, manifest);
    w.key("kind").value("key");
    w.key("group").begin_array();
    for (Index q : spec.moduli()) w.value(q);
    w.end_array();
    w.key("multipliers");
    write_multipliers(w, key);
    w.end_object();
    return w.str() + "\n";
}

std::string state_file_text(const RunManifest& manifest, const HashState<double>& state) {
    JsonWriter w;
    w.begin_object();
    w.key("manifest");
    write_manifest(w, manifest);
    w.key("kind").value("state");
    w.key("dims").begin_object();
    w.key("t").value(state.t);
    w.key("m").value(state.m);
    w.end_object();
    w.key("norm").value(state.amplitudes.norm());
    w.key("amplitudes").begin_array();
    for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i) {
        w.begin_array();
        w.value(state.amplitudes(i).real());
        w.value(state.amplitudes(i).imag());
        w.end_array();
    }
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    try {
        return nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

RunManifest parse_manifest(const nlohmann::json& j) {
    try {
        RunManifest manifest;
        manifest.command = j.at("command").get<std::string>();
        manifest.group = j.at("group").get<std::vector<Index>>();
        manifest.epsilon = j.at("epsilon").get<double>();
        manifest.set_size = j.at("set_size").get<Index>();
        manifest.seed = j.at("seed").get<std::uint64_t>();
        manifest.tool_version = j.at("tool_version").get<std::string>();
        manifest.timestamp = j.at("timestamp").get<std::string>();
        return manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad manifest: ") + e.what());
    }
}

}  // namespace

KeyFile read_key_file(const std::string& path) {
    const nlohmann::json j = load_json(path);
    try {
        if (j.at("kind").get<std::string>() != "key")
            throw std::invalid_argument(path + ": not a key file");
        GroupSpec spec(j.at("group").get<std::vector<Index>>());
        std::vector<Automorphism> key;
        for (const auto& row : j.at("multipliers"))
            key.emplace_back(spec, row.get<std::vector<Index>>());
        if (key.empty()) throw std::invalid_argument(path + ": empty key");
        return KeyFile{parse_manifest(j.at("manifest")), std::move(spec), std::move(key)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

StateFile read_state_file(const std::string& path) {
    const nlohmann::json j = load_json(path);
    try {
        if (j.at("kind").get<std::string>() != "state")
            throw std::invalid_argument(path + ": not a state file");
        HashState<double> state;
        state.t = j.at("dims").at("t").get<Index>();
        state.m = j.at("dims").at("m").get<Index>();
        const auto& amps = j.at("amplitudes");
        if (state.t < 1 || state.m < 0 ||
            static_cast<Index>(amps.size()) != state.t * (Index{1} << state.m))
            throw std::invalid_argument(path + ": amplitude count does not match dims");
        state.amplitudes.resize(static_cast<Eigen::Index>(amps.size()));
        for (std::size_t i = 0; i < amps.size(); ++i)
            state.amplitudes(static_cast<Eigen::Index>(i)) =
                std::complex<double>(amps[i].at(0).get<double>(), amps[i].at(1).get<double>());
        if (std::abs(state.amplitudes.norm() - 1.0) > 1e-12)
            throw std::invalid_argument(path + ": state is not unit norm");
        return StateFile{parse_manifest(j.at("manifest")), std::move(state)};
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace qhash
