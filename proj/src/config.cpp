#include "qfe/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qfe {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw std::invalid_argument("config key " + key + ": expected boolean, got '" + value + "'");
}

// Reads config values, remembering which keys were touched so resolve() can
// reject typos.
class Reader {
public:
    explicit Reader(const KvConfig& kv) : kv_(kv) {}

    std::string str(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        auto it = kv_.entries().find(key);
        return it == kv_.entries().end() ? fallback : it->second;
    }
    bool present(const std::string& key) {
        used_.insert(key);
        return kv_.entries().count(key) > 0;
    }
    long long integer(const std::string& key, long long fallback) {
        const std::string v = str(key, "");
        if (v.empty()) return fallback;
        try {
            std::size_t pos = 0;
            const long long out = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": expected integer, got '" + v +
                                        "'");
        }
    }
    double real(const std::string& key, double fallback) {
        const std::string v = str(key, "");
        if (v.empty()) return fallback;
        try {
            std::size_t pos = 0;
            const double out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": expected number, got '" + v +
                                        "'");
        }
    }
    bool boolean(const std::string& key, bool fallback) {
        const std::string v = str(key, "");
        return v.empty() ? fallback : parse_bool(key, v);
    }

    void check_unknown() const {
        for (const auto& [key, value] : kv_.entries()) {
            if (!used_.count(key))
                throw std::invalid_argument("unknown config key: " + key);
        }
    }

private:
    const KvConfig& kv_;
    std::set<std::string> used_;
};

std::vector<int> parse_classes(const std::string& value) {
    if (value.empty() || value == "all") return {};
    std::vector<int> out;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        const int digit = std::stoi(tok);
        if (digit < 0 || digit > 9)
            throw std::invalid_argument("data.classes digits must be in 0-9");
        out.push_back(digit);
    }
    if (out.empty()) throw std::invalid_argument("data.classes parsed to an empty list");
    return out;
}

}  // namespace

KvConfig KvConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

KvConfig KvConfig::from_text(const std::string& text) {
    KvConfig kv;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                     ": empty key");
        kv.set(key, value);
    }
    return kv;
}

void KvConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

RunConfig RunConfig::resolve(const KvConfig& kv) {
    Reader r(kv);
    RunConfig cfg;

    cfg.model_preset = r.str("model.preset", cfg.model_preset);
    if (cfg.model_preset != "model1" && cfg.model_preset != "model2" &&
        cfg.model_preset != "qfegap")
        throw std::invalid_argument("model.preset must be model1, model2 or qfegap");
    cfg.qfe1_filters = static_cast<int>(r.integer("model.qfe1.filters", cfg.qfe1_filters));
    cfg.qfe2_filters = static_cast<int>(r.integer("model.qfe2.filters", cfg.qfe2_filters));
    cfg.qfe3_filters = static_cast<int>(r.integer("model.qfe3.filters", cfg.qfe3_filters));
    cfg.fc1_width = static_cast<int>(r.integer("model.fc1.width", cfg.fc1_width));
    cfg.fc2_width = static_cast<int>(r.integer("model.fc2.width", cfg.fc2_width));
    cfg.kernel = static_cast<int>(r.integer("qfe.kernel", cfg.kernel));
    cfg.fanout = r.boolean("qfe.fanout", cfg.fanout);

    cfg.ansatz.kind = ansatz_from_name(r.str("ansatz.name", std::string(ansatz_name(cfg.ansatz.kind))));
    cfg.ansatz.layers = static_cast<int>(r.integer("ansatz.layers", cfg.ansatz.layers));

    cfg.epochs = static_cast<int>(r.integer("train.epochs", cfg.epochs));
    if (r.present("train.seed")) {
        cfg.seed = static_cast<std::uint64_t>(r.integer("train.seed", 0));
        cfg.seed_set = true;
    }
    cfg.schedule_kind = r.str("train.schedule", cfg.schedule_kind);
    if (cfg.schedule_kind != "table1" && cfg.schedule_kind != "constant")
        throw std::invalid_argument("train.schedule must be table1 or constant");
    cfg.learning_rate = r.real("train.lr", cfg.learning_rate);
    cfg.batch_size = static_cast<int>(r.integer("train.batch", cfg.batch_size));
    cfg.plateau = r.boolean("train.plateau", cfg.plateau);
    cfg.plateau_patience = static_cast<int>(r.integer("train.plateau_patience", cfg.plateau_patience));
    cfg.workers = static_cast<int>(r.integer("train.workers", cfg.workers));
    cfg.growth_enable = r.boolean("train.growth.enable", cfg.growth_enable);
    cfg.growth_initial_fraction =
        r.real("train.growth.initial_fraction", cfg.growth_initial_fraction);
    cfg.growth_factor = r.real("train.growth.factor", cfg.growth_factor);
    cfg.growth_patience = static_cast<int>(r.integer("train.growth.patience", cfg.growth_patience));

    cfg.data_dir = r.str("data.dir", cfg.data_dir);
    cfg.train_count = static_cast<int>(r.integer("data.train_count", cfg.train_count));
    cfg.test_count = static_cast<int>(r.integer("data.test_count", cfg.test_count));
    cfg.classes = parse_classes(r.str("data.classes", ""));
    cfg.downsample = static_cast<int>(r.integer("data.downsample", cfg.downsample));

    cfg.out_dir = r.str("out.dir", cfg.out_dir);
    cfg.metrics_name = r.str("out.metrics", cfg.metrics_name);
    cfg.checkpoint_name = r.str("out.checkpoint", cfg.checkpoint_name);

    r.check_unknown();

    if (!cfg.seed_set) throw std::invalid_argument("train.seed is required");
    if (cfg.epochs < 1) throw std::invalid_argument("train.epochs must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("train.batch must be positive");
    if (cfg.kernel < 1) throw std::invalid_argument("qfe.kernel must be positive");
    if (cfg.downsample != 1 && cfg.downsample != 2)
        throw std::invalid_argument("data.downsample must be 1 or 2");
    if (cfg.growth_enable &&
        (cfg.growth_initial_fraction <= 0.0 || cfg.growth_initial_fraction > 1.0 ||
         cfg.growth_factor <= 1.0))
        throw std::invalid_argument("train.growth settings out of range");
    return cfg;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "model.preset = " << model_preset << "\n";
    out << "model.qfe1.filters = " << qfe1_filters << "\n";
    out << "model.qfe2.filters = " << qfe2_filters << "\n";
    out << "model.qfe3.filters = " << qfe3_filters << "\n";
    out << "model.fc1.width = " << fc1_width << "\n";
    out << "model.fc2.width = " << fc2_width << "\n";
    out << "qfe.kernel = " << kernel << "\n";
    out << "qfe.fanout = " << (fanout ? 1 : 0) << "\n";
    out << "ansatz.name = " << ansatz_name(ansatz.kind) << "\n";
    out << "ansatz.layers = " << ansatz.layers << "\n";
    out << "train.epochs = " << epochs << "\n";
    out << "train.seed = " << seed << "\n";
    out << "train.schedule = " << schedule_kind << "\n";
    out << "train.lr = " << learning_rate << "\n";
    out << "train.batch = " << batch_size << "\n";
    out << "train.plateau = " << (plateau ? 1 : 0) << "\n";
    out << "train.plateau_patience = " << plateau_patience << "\n";
    out << "train.workers = " << workers << "\n";
    out << "train.growth.enable = " << (growth_enable ? 1 : 0) << "\n";
    out << "train.growth.initial_fraction = " << growth_initial_fraction << "\n";
    out << "train.growth.factor = " << growth_factor << "\n";
    out << "train.growth.patience = " << growth_patience << "\n";
    out << "data.dir = " << data_dir << "\n";
    out << "data.train_count = " << train_count << "\n";
    out << "data.test_count = " << test_count << "\n";
    if (!classes.empty()) {
        out << "data.classes = ";
        for (std::size_t i = 0; i < classes.size(); ++i)
            out << (i ? "," : "") << classes[i];
        out << "\n";
    }
    out << "data.downsample = " << downsample << "\n";
    out << "out.dir = " << out_dir << "\n";
    out << "out.metrics = " << metrics_name << "\n";
    out << "out.checkpoint = " << checkpoint_name << "\n";
    return out.str();
}

}  // namespace qfe
