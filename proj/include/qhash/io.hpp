#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhash/group.hpp"
#include "qhash/hash.hpp"

namespace qhash {

/// Provenance block embedded in every output file: enough to re-run the
/// command that produced it.
struct RunManifest {
    std::string command;
    std::vector<Index> group;
    double epsilon = 0.0;
    Index set_size = 0;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string timestamp;  // ISO-8601 UTC
};

RunManifest make_manifest(std::string command, const GroupSpec& spec, double epsilon,
                          Index set_size, std::uint64_t seed);

std::string now_iso8601_utc();

/// Exact decimal rendering with 17 significant digits; round-trips doubles
/// bit for bit.
std::string format_double(double value);

/// Streaming JSON emitter, enough for the flat record/state/key schemas.
/// Doubles go through format_double so payloads reproduce bitwise.
class JsonWriter {
public:
    explicit JsonWriter(bool pretty = true);

    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& name);
    JsonWriter& value(const std::string& text);
    JsonWriter& value(const char* text);
    JsonWriter& value(double number);
    JsonWriter& value(Index number);
    JsonWriter& value(std::uint64_t number);
    JsonWriter& value(bool flag);

    const std::string& str() const { return out_; }

private:
    void before_value();
    void newline();

    struct Frame {
        bool array = false;
        bool first = true;
    };
    std::string out_;
    std::vector<Frame> stack_;
    bool pretty_;
    bool pending_key_ = false;
};

void write_manifest(JsonWriter& w, const RunManifest& manifest);
void write_element(JsonWriter& w, const GroupElement& g);
void write_multipliers(JsonWriter& w, const std::vector<Automorphism>& key);

/// Key file: manifest + "group" (modulus list) + "multipliers" (one row per
/// automorphism, one unit per component).
std::string key_file_text(const RunManifest& manifest, const GroupSpec& spec,
                          const std::vector<Automorphism>& key);

/// State file: manifest + dims {t, m} + norm + amplitudes as [re, im] pairs
/// in branch-major order.
std::string state_file_text(const RunManifest& manifest, const HashState<double>& state);

/// Writes text to path, throwing IoError on failure.
void write_text_file(const std::string& path, const std::string& text);

struct KeyFile {
    RunManifest manifest;
    GroupSpec spec;
    std::vector<Automorphism> key;
};

struct StateFile {
    RunManifest manifest;
    HashState<double> state;
};

/// Readers throw IoError when the file cannot be opened and
/// std::invalid_argument when the content does not parse or fails schema
/// or invariant checks.
KeyFile read_key_file(const std::string& path);
StateFile read_state_file(const std::string& path);

}  // namespace qhash
