#include "tm3/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tm3/error.hpp"

namespace tm3 {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size())
        throw ValidationError("config: bad value for " + key + ": '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ValidationError("config: bad boolean for " + key + ": '" + value + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, value);
    }
    return out;
}

TrackerConfig parse_tracker_config(const std::string& text, TrackerConfig cfg)
{
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const auto i = [](int& f) { return Setter([&f](auto& k, auto& v) { f = parse_number<int>(k, v); }); };
    const auto d = [](double& f) { return Setter([&f](auto& k, auto& v) { f = parse_number<double>(k, v); }); };
    const auto b = [](bool& f) { return Setter([&f](auto& k, auto& v) { f = parse_bool(k, v); }); };
    const std::map<std::string, Setter> setters = {
        {"n_r", i(cfg.n_r)},
        {"n_r_refined", i(cfg.n_r_refined)},
        {"n_e_refined", i(cfg.n_e_refined)},
        {"n_proposals", i(cfg.n_proposals)},
        {"tau", d(cfg.tau)},
        {"sigma1", d(cfg.sigma1)},
        {"cap_c", i(cfg.cap_c)},
        {"sigma2", d(cfg.sigma2)},
        {"beta", d(cfg.beta)},
        {"delta", d(cfg.delta)},
        {"n_d", i(cfg.n_d)},
        {"n_s", i(cfg.n_s)},
        {"k_codebook", i(cfg.k_codebook)},
        {"trivial_count", [&](auto& k, auto& v) { cfg.trivial_count = parse_number<std::int64_t>(k, v); }},
        {"tmpl_e_threshold", d(cfg.tmpl_e_threshold)},
        {"filter_interval", i(cfg.filter_interval)},
        {"sigma_s", d(cfg.sigma_s)},
        {"sigma_xy_cap", d(cfg.sigma_xy_cap)},
        {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
        {"flow_r", b(cfg.flow_r)},
        {"flow_e", b(cfg.flow_e)},
        {"memory_filtering", b(cfg.memory_filtering)},
    };
    for (const auto& [key, value] : parse_key_values(text)) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ValidationError("config: unknown key '" + key + "'");
        it->second(key, value);
    }
    cfg.validate();
    return cfg;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tm3
