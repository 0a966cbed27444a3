#pragma once

#include <map>
#include <string>

#include "cadops/jsonio.hpp"

namespace cadops {

inline constexpr const char* kToolVersion = "cadops 0.1.0";

// Every artifact embeds this block so a result can be traced back to the
// exact configuration and inputs that produced it.
struct Provenance {
    std::string resolved_config = "{}";  // serialized JSON object
    std::map<std::string, std::string> input_hashes;

    std::string to_json() const {
        std::string out = "{\"tool_version\": " + json_str(kToolVersion) +
                          ", \"resolved_config\": " + resolved_config + ", \"input_hashes\": {";
        bool first = true;
        for (const auto& [k, v] : input_hashes) {
            if (!first) out += ", ";
            first = false;
            out += json_str(k) + ": " + json_str(v);
        }
        return out + "}}";
    }

    void hash_file(const std::string& label, const std::string& path) {
        input_hashes[label] = fnv1a_hex(read_file(path));
    }
};

}  // namespace cadops
