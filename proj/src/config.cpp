#include "bundlemart/config.hpp"
#include "bundlemart/models.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace bundlemart {

namespace {

using nlohmann::json;

class TomlLine {
public:
    TomlLine(std::string text, int line) : s_(std::move(text)), line_(line) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(line_) + ": " + what);
    }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '#') {
            while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            skip_ws();
        }
    }
    bool done() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    std::string key() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
            ++pos_;
        if (start == pos_) fail("expected a key");
        return s_.substr(start, pos_ - start);
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    json value() {
        skip_ws();
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return false;
        }
        return number();
    }

private:
    json basic_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }
    json literal_string() {
        ++pos_;
        const std::size_t end = s_.find('\'', pos_);
        if (end == std::string::npos) fail("unterminated string");
        std::string out = s_.substr(pos_, end - pos_);
        pos_ = end + 1;
        return out;
    }
    json array() {
        ++pos_;
        json out = json::array();
        skip_ws();
        while (peek() != ']') {
            if (pos_ >= s_.size()) fail("unterminated array");
            out.push_back(value());
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
        ++pos_;
        return out;
    }
    json number() {
        const std::size_t start = pos_;
        std::string digits;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                    s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '_')) {
            if (s_[pos_] != '_') digits.push_back(s_[pos_]);
            ++pos_;
        }
        if (digits.empty()) fail("expected a value");
        const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
        if (!is_float) {
            std::int64_t v = 0;
            const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
            auto [p, ec] = std::from_chars(first, digits.data() + digits.size(), v);
            if (ec == std::errc() && p == digits.data() + digits.size()) return v;
        } else {
            double v = 0.0;
            const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
            auto [p, ec] = std::from_chars(first, digits.data() + digits.size(), v);
            if (ec == std::errc() && p == digits.data() + digits.size()) return v;
        }
        pos_ = start;
        fail("invalid value '" + digits + "'");
    }

    std::string s_;
    std::size_t pos_ = 0;
    int line_;
};

int bracket_balance(const std::string& line) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') ++i;
            else if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            break;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{"experiment", "model",   "dt",     "horizon", "n_paths", "seed",
                                            "fd_step",    "resolution", "merge_radius", "output_dir", "threads",
                                            "method",     "scheme",  "x0",     "y0",      "family",  "pairs"};
    return keys;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

/// Models an experiment accepts.
std::vector<std::string> compatible_models(const std::string& experiment) {
    std::vector<std::string> out;
    if (experiment == "bm-check" || experiment == "coupling") return manifold_names();
    if (experiment == "ito-check") {
        for (const auto& m : manifold_names())
            if (starts_with(m, "sphere")) out.push_back(m);
        return out;
    }
    if (experiment == "bundle-check") return {"frame-s2", "frame-torus", "hopf", "trivial-r2"};
    if (experiment == "section-test" || experiment == "liouville-scan") {
        for (const auto& m : bundle_names())
            if (starts_with(m, "tm-") || starts_with(m, "hopf-")) out.push_back(m);
        return out;
    }
    if (experiment == "parallel-section") return {"tm-torus-complete", "tm-torus-horizontal"};
    if (experiment == "sasaki") return {"tm-s2-sasaki"};
    if (experiment == "hopf") return {"hopf-c1", "hopf-c2"};
    return out;
}

int base_dimension(const std::string& model) {
    if (auto e = associated_by_name(model)) return e->base_dim();
    if (auto p = principal_by_name(model)) return p->base_dim();
    if (auto m = manifold_by_name(model)) return m->dim();
    return -1;
}

}  // namespace

json parse_toml(const std::string& text) {
    json out = json::object();
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const int first = number;
        int depth = bracket_balance(line);
        std::string first_token = line;
        first_token.erase(0, first_token.find_first_not_of(" \t"));
        if (!first_token.empty() && first_token[0] == '[')
            throw ConfigError("line " + std::to_string(first) + ": tables are not supported; use top-level keys");
        while (depth > 0) {
            std::string more;
            if (!std::getline(in, more)) throw ConfigError("line " + std::to_string(first) + ": unterminated array");
            ++number;
            depth += bracket_balance(more);
            line += "\n" + more;
        }
        TomlLine parser(line, first);
        if (parser.done()) continue;
        const std::string key = parser.key();
        parser.expect('=');
        json v = parser.value();
        if (!parser.done()) parser.fail("unexpected text after value");
        if (out.contains(key)) parser.fail("duplicate key '" + key + "'");
        out[key] = std::move(v);
    }
    return out;
}

std::vector<std::string> experiment_names() {
    return {"bm-check", "ito-check", "section-test", "bundle-check", "coupling",
            "liouville-scan", "parallel-section", "sasaki", "hopf"};
}

std::string default_model(const std::string& experiment) {
    if (experiment == "bm-check") return "flat-r2";
    if (experiment == "ito-check" || experiment == "coupling") return "sphere2";
    if (experiment == "bundle-check") return "frame-s2";
    if (experiment == "section-test") return "tm-torus-horizontal";
    if (experiment == "parallel-section") return "tm-torus-complete";
    if (experiment == "liouville-scan" || experiment == "sasaki") return "tm-s2-sasaki";
    if (experiment == "hopf") return "hopf-c1";
    return "";
}

std::string ExperimentConfig::resolved_model() const { return model.empty() ? default_model(experiment) : model; }

json ExperimentConfig::to_json() const {
    json j{{"experiment", experiment},
           {"model", resolved_model()},
           {"dt", dt},
           {"horizon", horizon},
           {"n_paths", n_paths},
           {"seed", seed},
           {"fd_step", fd_step},
           {"resolution", resolution},
           {"output_dir", output_dir},
           {"threads", threads},
           {"method", method},
           {"scheme", scheme},
           {"x0", x0},
           {"y0", y0},
           {"family", family},
           {"pairs", pairs}};
    j["merge_radius"] = merge_radius ? json(*merge_radius) : json(nullptr);
    return j;
}

ParsedConfig config_from_json(const json& j) {
    ParsedConfig out;
    auto& c = out.config;
    auto& diag = out.diagnostics;
    if (!j.is_object()) {
        diag.push_back({"", "configuration must be a table of key = value pairs"});
        return out;
    }
    for (const auto& [key, value] : j.items()) {
        if (!known_keys().contains(key)) {
            diag.push_back({key, "unknown key '" + key + "' (known keys: " +
                                     join(std::vector<std::string>(known_keys().begin(), known_keys().end())) + ")"});
            continue;
        }
        auto type_error = [&](const std::string& expected) { diag.push_back({key, key + " must be " + expected}); };
        auto read_string = [&](std::string& dst) {
            if (value.is_string()) dst = value.get<std::string>();
            else type_error("a string");
        };
        auto read_real = [&](double& dst) {
            if (value.is_number()) dst = value.get<double>();
            else type_error("a number");
        };
        auto read_int = [&](int& dst) {
            if (value.is_number_integer()) dst = value.get<int>();
            else type_error("an integer");
        };
        auto read_list = [&](std::vector<double>& dst) {
            if (!value.is_array() || !std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_number(); }))
                return type_error("an array of numbers");
            dst = value.get<std::vector<double>>();
        };
        if (key == "experiment") read_string(c.experiment);
        else if (key == "model") read_string(c.model);
        else if (key == "dt") read_real(c.dt);
        else if (key == "horizon") read_real(c.horizon);
        else if (key == "n_paths") read_int(c.n_paths);
        else if (key == "seed") {
            if (value.is_number_unsigned()) c.seed = value.get<std::uint64_t>();
            else if (value.is_number_integer() && value.get<std::int64_t>() >= 0)
                c.seed = static_cast<std::uint64_t>(value.get<std::int64_t>());
            else type_error("a non-negative integer");
        } else if (key == "fd_step") read_real(c.fd_step);
        else if (key == "resolution") read_real(c.resolution);
        else if (key == "merge_radius") {
            double r = 0.0;
            read_real(r);
            if (value.is_number()) c.merge_radius = r;
        } else if (key == "output_dir") read_string(c.output_dir);
        else if (key == "threads") read_int(c.threads);
        else if (key == "method") read_string(c.method);
        else if (key == "scheme") read_string(c.scheme);
        else if (key == "x0") read_list(c.x0);
        else if (key == "y0") read_list(c.y0);
        else if (key == "family") read_list(c.family);
        else if (key == "pairs") read_int(c.pairs);
    }
    return out;
}

ParsedConfig parse_config(const std::string& toml_text) {
    try {
        return config_from_json(parse_toml(toml_text));
    } catch (const ConfigError& e) {
        return {ExperimentConfig{}, {{"", e.what()}}};
    }
}

std::vector<Diagnostic> validate(const ExperimentConfig& c) {
    std::vector<Diagnostic> d;
    const auto experiments = experiment_names();
    const bool known_experiment = std::find(experiments.begin(), experiments.end(), c.experiment) != experiments.end();
    if (!known_experiment)
        d.push_back({"experiment", "unknown experiment '" + c.experiment + "' (known experiments: " + join(experiments) + ")"});

    const std::string model = c.resolved_model();
    if (!model.empty() && !is_known_model(model)) {
        d.push_back({"model", "unknown model '" + model + "' (known models: " + join(model_names()) + ")"});
    } else if (known_experiment) {
        const auto ok = compatible_models(c.experiment);
        if (std::find(ok.begin(), ok.end(), model) == ok.end())
            d.push_back({"model", "experiment '" + c.experiment + "' does not run on model '" + model +
                                      "' (supported: " + join(ok) + ")"});
    }

    auto positive = [&](const std::string& field, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) d.push_back({field, field + " must be positive"});
    };
    positive("dt", c.dt);
    positive("horizon", c.horizon);
    positive("fd_step", c.fd_step);
    positive("resolution", c.resolution);
    if (c.merge_radius) positive("merge_radius", *c.merge_radius);
    if (c.dt > 0.0 && c.horizon > 0.0 && c.dt > c.horizon) d.push_back({"dt", "dt must not exceed horizon"});
    if (c.n_paths <= 0) d.push_back({"n_paths", "n_paths must be positive"});
    if (c.threads < 0) d.push_back({"threads", "threads must be non-negative"});
    if (c.pairs < 0) d.push_back({"pairs", "pairs must be non-negative"});
    if (c.output_dir.empty()) d.push_back({"output_dir", "output_dir must not be empty"});
    if (c.method != "reflection" && c.method != "synchronous" && c.method != "independent")
        d.push_back({"method", "method must be one of reflection, synchronous, independent"});
    if (c.scheme != "euler" && c.scheme != "geodesic_retraction")
        d.push_back({"scheme", "scheme must be one of euler, geodesic_retraction"});

    if (is_known_model(model)) {
        const int dim = base_dimension(model);
        if (!c.x0.empty() && static_cast<int>(c.x0.size()) != dim)
            d.push_back({"x0", "x0 must have " + std::to_string(dim) + " coordinates for model '" + model + "'"});
        if (!c.y0.empty() && static_cast<int>(c.y0.size()) != dim)
            d.push_back({"y0", "y0 must have " + std::to_string(dim) + " coordinates for model '" + model + "'"});
    }
    if (c.experiment == "hopf")
        for (double v : c.family)
            if (v < 0.0) d.push_back({"family", "hopf family values are norms and must be non-negative"});
    return d;
}

}  // namespace bundlemart
