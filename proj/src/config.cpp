#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cascade/errors.hpp"
#include "cascade/harness.hpp"

namespace cascade {

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::map<std::string, Entry> read_key_values(std::istream& in, const std::string& source) {
    std::map<std::string, Entry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        const std::string key = lower(trim(body.substr(0, eq)));
        if (key.empty()) throw ParseError(source, line_no, "empty key");
        if (out.count(key)) throw ParseError(source, line_no, "duplicate key '" + key + "'");
        out[key] = {trim(body.substr(eq + 1)), line_no};
    }
    return out;
}

std::string scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v.get<double>());
        (void)ec;
        return std::string(buf, ptr);
    }
    throw ValidationError("unsupported JSON value " + v.dump());
}

std::map<std::string, Entry> read_json(std::istream& in, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source, 0, e.what());
    }
    if (!j.is_object()) throw ParseError(source, 0, "config must be a JSON object");
    std::map<std::string, Entry> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string value;
        try {
            if (it.value().is_array()) {
                for (const auto& item : it.value()) {
                    value += (value.empty() ? "" : ",") + scalar_to_string(item);
                }
            } else {
                value = scalar_to_string(it.value());
            }
        } catch (const ValidationError& e) {
            throw ParseError(source, 0, "key '" + it.key() + "': " + e.what());
        }
        out[lower(it.key())] = {value, 0};
    }
    return out;
}

class KeyReader {
public:
    KeyReader(std::map<std::string, Entry> entries, std::string source)
        : entries_(std::move(entries)), source_(std::move(source)) {}

    // Calls `apply` with the value when the key is present.
    void take(const std::string& key, const std::function<void(const std::string&)>& apply) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        try {
            apply(it->second.value);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(source_, it->second.line, "key '" + key + "': " + e.what());
        }
        entries_.erase(it);
    }

    void reject_unknown() const {
        if (entries_.empty()) return;
        const auto& [key, entry] = *entries_.begin();
        throw ParseError(source_, entry.line, "unknown key '" + key + "'");
    }

private:
    std::map<std::string, Entry> entries_;
    std::string source_;
};

template <typename T>
T parse_integer(const std::string& text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

double parse_real(const std::string& text) {
    // Accepts "1/25000"-style fractions for delta and p.
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        return parse_real(trim(text.substr(0, slash))) / parse_real(trim(text.substr(slash + 1)));
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() ||
        !std::isfinite(value)) {
        throw ValidationError("expected a number, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& text) {
    const std::string v = lower(text);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError("expected a boolean, got '" + text + "'");
}

std::vector<PolicyKind> parse_policy_list(const std::string& text) {
    std::vector<PolicyKind> out;
    if (lower(trim(text)) == "all") return {std::begin(kAllPolicies), std::end(kAllPolicies)};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_policy_kind(item));
    }
    if (out.empty()) throw ValidationError("policy list is empty");
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (trials == 0) throw ValidationError("trials must be >= 1");
    if (checkpoint_every == 0) throw ValidationError("checkpoint_every must be >= 1");
    if (workers == 0) throw ValidationError("workers must be >= 1");
    if (params.exploration && !(*params.exploration > 0.0 && *params.exploration <= 1.0)) {
        throw ValidationError("p must lie in (0,1]");
    }
    if (params.delta && !(*params.delta > 0.0 && *params.delta < 1.0)) {
        throw ValidationError("delta must lie in (0,1)");
    }
    if (params.stride == 0 || params.check_period == 0) {
        throw ValidationError("stride and check_period must be >= 1");
    }
    if (!(params.xi > 0.0)) throw ValidationError("xi must be positive");
    if (params.gamma && !(*params.gamma > 0.0 && *params.gamma <= 1.0)) {
        throw ValidationError("gamma must lie in (0,1]");
    }
    if (params.window && *params.window == 0) throw ValidationError("window must be >= 1");
    if (environment.kind == EnvironmentKind::Csv && environment.csv_path.empty()) {
        throw ValidationError("env = csv needs csv_path");
    }
}

std::vector<ExperimentConfig> ConfigFile::experiments() const {
    std::vector<ExperimentConfig> out;
    for (PolicyKind kind : policies) {
        ExperimentConfig c = base;
        c.policy = kind;
        out.push_back(std::move(c));
    }
    return out;
}

ConfigFile parse_config(std::istream& in, const std::string& source) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    std::istringstream body(text);
    auto entries = first != std::string::npos && text[first] == '{' ? read_json(body, source)
                                                                    : read_key_values(body, source);

    ConfigFile file;
    file.policies = {PolicyKind::GlrtCascadeUcb};
    ExperimentConfig& c = file.base;
    EnvironmentSource& env = c.environment;
    PolicyParams& p = c.params;
    KeyReader r(std::move(entries), source);

    r.take("env", [&](const std::string& v) {
        const std::string k = lower(v);
        if (k == "synthetic") {
            env.kind = EnvironmentKind::Synthetic;
        } else if (k == "hard" || k == "hard_instance") {
            env.kind = EnvironmentKind::Hard;
        } else if (k == "csv") {
            env.kind = EnvironmentKind::Csv;
        } else {
            throw ValidationError("env must be synthetic, hard or csv");
        }
    });
    r.take("env_seed", [&](const std::string& v) { c.env_seed = parse_integer<std::uint64_t>(v); });
    r.take("csv_path", [&](const std::string& v) { env.csv_path = v; });
    r.take("scale", [&](const std::string& v) { env.csv_scale = parse_real(v); });
    r.take("csv_scale", [&](const std::string& v) { env.csv_scale = parse_real(v); });
    r.take("k", [&](const std::string& v) { env.list_length = parse_integer<std::size_t>(v); });
    r.take("hard_l", [&](const std::string& v) { env.hard_items = parse_integer<std::size_t>(v); });
    r.take("hard_n", [&](const std::string& v) { env.hard_blocks = parse_integer<std::size_t>(v); });
    r.take("hard_t", [&](const std::string& v) { env.hard_horizon = parse_integer<std::size_t>(v); });

    r.take("policy", [&](const std::string& v) { file.policies = parse_policy_list(v); });
    r.take("p", [&](const std::string& v) { p.exploration = parse_real(v); });
    r.take("p_rule", [&](const std::string& v) {
        const std::string k = lower(v);
        if (k == "experimental") {
            p.exploration_rule = ExplorationRule::Experimental;
        } else if (k == "corollary") {
            p.exploration_rule = ExplorationRule::Corollary;
        } else {
            throw ValidationError("p_rule must be experimental or corollary");
        }
    });
    r.take("segments_hint", [&](const std::string& v) { p.segments_hint = parse_integer<std::size_t>(v); });
    r.take("delta", [&](const std::string& v) { p.delta = parse_real(v); });
    r.take("stride", [&](const std::string& v) { p.stride = parse_integer<std::size_t>(v); });
    r.take("check_period", [&](const std::string& v) { p.check_period = parse_integer<std::size_t>(v); });
    r.take("xi", [&](const std::string& v) { p.xi = parse_real(v); });
    r.take("gamma", [&](const std::string& v) { p.gamma = parse_real(v); });
    r.take("window", [&](const std::string& v) { p.window = parse_integer<std::size_t>(v); });

    r.take("trials", [&](const std::string& v) { c.trials = parse_integer<std::size_t>(v); });
    r.take("base_seed", [&](const std::string& v) { c.base_seed = parse_integer<std::uint64_t>(v); });
    r.take("output_dir", [&](const std::string& v) { c.output_dir = v; });
    r.take("checkpoint_every", [&](const std::string& v) { c.checkpoint_every = parse_integer<std::size_t>(v); });
    r.take("full_trajectory", [&](const std::string& v) { c.full_trajectory = parse_bool(v); });
    r.take("svg", [&](const std::string& v) { c.write_svg = parse_bool(v); });
    r.take("workers", [&](const std::string& v) { c.workers = parse_integer<std::size_t>(v); });
    r.reject_unknown();

    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ParseError(source, 0, e.what());
    }
    return file;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open config file");
    ConfigFile file = parse_config(in, path.string());
    auto& csv = file.base.environment.csv_path;
    if (!csv.empty() && csv.is_relative()) csv = path.parent_path() / csv;
    return file;
}

EnvironmentSpec build_environment(const ExperimentConfig& config, std::vector<std::string>* warnings) {
    const auto& env = config.environment;
    switch (env.kind) {
        case EnvironmentKind::Synthetic:
            return make_synthetic(config.env_seed);
        case EnvironmentKind::Hard:
            return make_hard_instance(env.hard_items, env.list_length, env.hard_blocks,
                                      env.hard_horizon, config.env_seed);
        case EnvironmentKind::Csv: {
            auto loaded = load_segments_csv(env.csv_path, env.list_length, env.csv_scale);
            if (warnings) {
                warnings->insert(warnings->end(), loaded.warnings.begin(), loaded.warnings.end());
            }
            return std::move(loaded.spec);
        }
    }
    throw ValidationError("unhandled environment kind");
}

}  // namespace cascade
