#include "dpi/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dpi/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dpi {

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string fnv1a_hex(uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return s;
}

void write_run_manifest(const std::string& out_dir, const std::string& command, uint64_t seed,
                        const json& parameters, const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& input : inputs) {
        fs::path p(input);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::recursive_directory_iterator(p))
                if (entry.is_regular_file()) files.push_back(entry.path().string());
        } else if (fs::is_regular_file(p)) {
            files.push_back(input);
        }
    }
    std::sort(files.begin(), files.end());

    json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["parameters"] = parameters;
    j["inputs"] = json::object();
    for (const auto& f : files) j["inputs"][f] = fnv1a_hex(fnv1a_file(f));

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "run_manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write run_manifest.json in " + out_dir);
    out << j.dump(2) << '\n';
}

}
