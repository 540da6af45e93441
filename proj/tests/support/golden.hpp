#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <domprune/prompts.hpp>

namespace golden {

inline std::string source_path(const std::string& rel) {
    return std::string(DOMPRUNE_SOURCE_DIR) + "/" + rel;
}

inline bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return static_cast<bool>(in);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline bool regen_enabled() {
    const char* v = std::getenv("DOMPRUNE_REGEN_GOLDEN");
    return v != nullptr && std::string(v) == "1";
}

inline std::string dump_messages(const std::vector<domprune::Message>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += "=== " + m.role + " ===\n";
        out += m.content;
        out += "\n";
    }
    return out;
}

// Compares content against the golden file at rel; (re)writes the file
// instead when DOMPRUNE_REGEN_GOLDEN=1. Returns true when they match.
inline bool check(const std::string& rel, const std::string& content, std::string* diff_hint = nullptr) {
    std::string path = source_path(rel);
    if (regen_enabled()) {
        write_file(path, content);
        return true;
    }
    if (!file_exists(path)) {
        if (diff_hint) *diff_hint = "golden file missing: " + path;
        return false;
    }
    std::string expected = read_file(path);
    if (expected == content) return true;
    if (diff_hint) {
        std::size_t i = 0;
        while (i < expected.size() && i < content.size() && expected[i] == content[i]) ++i;
        *diff_hint = "first difference at byte " + std::to_string(i) + " of " + path;
    }
    return false;
}

}  // namespace golden
