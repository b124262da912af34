#include "sslcal/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "sslcal/error.hpp"
#include "sslcal/text.hpp"

namespace sslcal {

namespace {

struct KeySpec {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

double to_real(const std::string& v) { return parse_double(v); }

std::size_t to_count(const std::string& v) {
    const long long n = parse_int(v);
    if (n < 0) fail(ErrorKind::Config, "expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorKind::Config, "expected a boolean, got '" + v + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string str(double v) { return format_double(v); }
std::string str(std::size_t v) { return std::to_string(v); }
std::string str(bool v) { return v ? "true" : "false"; }

#define SSLCAL_REAL(KEY, FIELD) \
    {KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_real(v); }, [](const RunConfig& c) { return str(c.FIELD); }}
#define SSLCAL_COUNT(KEY, FIELD) \
    {KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_count(v); }, [](const RunConfig& c) { return str(c.FIELD); }}
#define SSLCAL_BOOL(KEY, FIELD) \
    {KEY, [](RunConfig& c, const std::string& v) { c.FIELD = to_bool(v); }, [](const RunConfig& c) { return str(c.FIELD); }}

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        SSLCAL_COUNT("data.classes", data.num_classes),
        SSLCAL_COUNT("data.dim", data.dim),
        SSLCAL_COUNT("data.components", data.components),
        SSLCAL_REAL("data.separation", data.separation),
        SSLCAL_REAL("data.sigma", data.sigma),
        SSLCAL_REAL("data.spread", data.spread),
        SSLCAL_COUNT("data.labels_per_class", data.labels_per_class),
        SSLCAL_COUNT("data.unlabeled", data.num_unlabeled),
        SSLCAL_COUNT("data.test", data.num_test),
        {"data.seed", [](RunConfig& c, const std::string& v) { c.data.seed = to_count(v); },
         [](const RunConfig& c) { return std::to_string(c.data.seed); }},
        SSLCAL_BOOL("data.long_tail", data.long_tail),
        {"data.gamma_l", [](RunConfig& c, const std::string& v) { c.data.gamma_labeled = parse_int(v); },
         [](const RunConfig& c) { return std::to_string(c.data.gamma_labeled); }},
        {"data.gamma_u", [](RunConfig& c, const std::string& v) { c.data.gamma_unlabeled = parse_int(v); },
         [](const RunConfig& c) { return std::to_string(c.data.gamma_unlabeled); }},
        SSLCAL_COUNT("data.head_labeled", data.head_labeled),
        SSLCAL_COUNT("data.head_unlabeled", data.head_unlabeled),

        {"model.hidden",
         [](RunConfig& c, const std::string& v) {
             c.hidden.clear();
             if (trim(v).empty()) return;
             for (const auto& part : split(v, ',')) c.hidden.push_back(to_count(part));
         },
         [](const RunConfig& c) { return join(c.hidden); }},
        {"model.activation", [](RunConfig& c, const std::string& v) { c.activation = parse_activation(v); },
         [](const RunConfig& c) { return std::string(to_string(c.activation)); }},

        SSLCAL_REAL("augment.weak_sigma", augment.weak_noise_sigma),
        SSLCAL_REAL("augment.strong_sigma", augment.strong_noise_sigma),
        SSLCAL_REAL("augment.mask_prob", augment.strong_mask_prob),
        SSLCAL_REAL("augment.scale_lo", augment.strong_scale_lo),
        SSLCAL_REAL("augment.scale_hi", augment.strong_scale_hi),

        {"threshold.strategy",
         [](RunConfig& c, const std::string& v) { c.threshold_strategy = parse_threshold_strategy(v); },
         [](const RunConfig& c) { return std::string(to_string(c.threshold_strategy)); }},
        SSLCAL_REAL("threshold.tau", tau),
        SSLCAL_REAL("threshold.ema_decay", ema_decay),

        SSLCAL_REAL("penalty.margin", objective.penalty.margin),
        SSLCAL_REAL("penalty.lambda", objective.penalty.lambda),
        {"penalty.apply_set",
         [](RunConfig& c, const std::string& v) { c.objective.penalty.apply_set = parse_penalty_set(v); },
         [](const RunConfig& c) { return std::string(to_string(c.objective.penalty.apply_set)); }},

        {"baseline.loss",
         [](RunConfig& c, const std::string& v) { c.objective.unsupervised = parse_unsupervised_loss(v); },
         [](const RunConfig& c) { return std::string(to_string(c.objective.unsupervised)); }},
        SSLCAL_REAL("baseline.label_smoothing_eps", objective.label_smoothing_eps),
        SSLCAL_REAL("baseline.focal_gamma", objective.focal_gamma),

        SSLCAL_REAL("optim.lr", learning_rate),
        SSLCAL_REAL("optim.momentum", momentum),
        SSLCAL_BOOL("optim.cosine", cosine_schedule),
        SSLCAL_REAL("optim.warmup_fraction", warmup_fraction),

        SSLCAL_COUNT("train.iterations", iterations),
        SSLCAL_COUNT("train.eval_interval", eval_interval),
        SSLCAL_COUNT("train.batch_size", batch_size),
        SSLCAL_COUNT("train.mu", mu),
        {"train.seeds",
         [](RunConfig& c, const std::string& v) {
             c.seeds.clear();
             for (const auto& part : split(v, ',')) c.seeds.push_back(to_count(part));
         },
         [](const RunConfig& c) { return join(c.seeds); }},

        SSLCAL_COUNT("eval.bins", n_bins),
        {"output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
         [](const RunConfig& c) { return c.out_dir; }},
    };
    return table;
}

#undef SSLCAL_REAL
#undef SSLCAL_COUNT
#undef SSLCAL_BOOL

}  // namespace

std::vector<std::size_t> RunConfig::widths() const {
    std::vector<std::size_t> w{data.dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(data.num_classes);
    return w;
}

void RunConfig::validate() const {
    data.validate();
    augment.validate();
    objective.validate();
    auto bad = [](const std::string& what) { fail(ErrorKind::Config, what); };
    if (!(tau >= 0.0 && tau <= 1.0)) bad("threshold.tau must be in [0,1]");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) bad("threshold.ema_decay must be in [0,1)");
    if (!(learning_rate > 0.0)) bad("optim.lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) bad("optim.momentum must be in [0,1)");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) bad("optim.warmup_fraction must be in [0,1)");
    if (batch_size < 1) bad("train.batch_size must be >= 1");
    if (mu < 1) bad("train.mu must be >= 1");
    if (eval_interval < 1) bad("train.eval_interval must be >= 1");
    if (seeds.empty()) bad("train.seeds must list at least one seed");
    if (n_bins < 1) bad("eval.bins must be >= 1");
    for (auto h : hidden)
        if (h < 1) bad("model.hidden widths must be positive");
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& spec : key_table()) {
        if (key != spec.key) continue;
        try {
            spec.set(cfg, std::string(trim(value)));
        } catch (const Error& e) {
            fail(ErrorKind::Config, "bad value for '" + key + "': " + e.what());
        }
        return;
    }
    fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "override must look like key=value, got '" + text + "'");
    return {std::string(trim(std::string_view(text).substr(0, eq))),
            std::string(trim(std::string_view(text).substr(eq + 1)))};
}

ConfigMap read_config_text(std::istream& is) {
    ConfigMap map;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = trim(v);
        if (v.empty()) continue;
        if (v.front() == '[') {
            if (v.back() != ']') fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": bad section header");
            section = std::string(trim(v.substr(1, v.size() - 2)));
            continue;
        }
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
        std::string key(trim(v.substr(0, eq)));
        if (!section.empty()) key = section + "." + key;
        map[key] = std::string(trim(v.substr(eq + 1)));
    }
    return map;
}

ConfigMap read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Io, "cannot open config '" + path + "'");
    return read_config_text(is);
}

RunConfig config_from_map(const ConfigMap& map, RunConfig base) {
    for (const auto& [k, v] : map) apply_override(base, k, v);
    return base;
}

ConfigMap to_map(const RunConfig& cfg) {
    ConfigMap map;
    for (const auto& spec : key_table()) map[spec.key] = spec.get(cfg);
    return map;
}

std::string to_text(const RunConfig& cfg) {
    std::ostringstream os;
    for (const auto& [k, v] : to_map(cfg)) os << k << " = " << v << '\n';
    return os.str();
}

std::string config_hash(const RunConfig& cfg) {
    // Seeds and the output directory do not change what a single run computes.
    RunConfig c = cfg;
    c.seeds = {0};
    c.out_dir.clear();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", fnv1a(to_text(c)));
    return buf;
}

}  // namespace sslcal
