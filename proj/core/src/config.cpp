#include "mcap/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mcap {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        const long long x = std::stoll(v);
        if (x < 0) throw std::invalid_argument("negative");
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v +
                          "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        return static_cast<std::uint64_t>(std::stoull(v));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_key(AppConfig& cfg, const std::string& key, const std::string& value) {
    ModelConfig& m = cfg.model;
    TrainConfig& t = cfg.train;
    if (key == "model.beat_len") m.beat_len = parse_size(key, value);
    else if (key == "model.dim") m.dim = parse_size(key, value);
    else if (key == "model.layers") m.layers = parse_size(key, value);
    else if (key == "model.branches") m.branches = parse_size(key, value);
    else if (key == "model.state_dim") m.state_dim = parse_size(key, value);
    else if (key == "model.shared_conv_width") m.shared_conv_width = parse_size(key, value);
    else if (key == "model.num_classes") m.num_classes = parse_size(key, value);
    else if (key == "model.primary_dim") m.primary_dim = parse_size(key, value);
    else if (key == "model.class_dim") m.class_dim = parse_size(key, value);
    else if (key == "model.routing_iters") m.routing_iters = parse_size(key, value);
    else if (key == "model.pool_stride") m.pool_stride = parse_size(key, value);
    else if (key == "model.dropout") m.dropout = parse_double(key, value);
    else if (key == "model.recon_hidden1") m.recon_hidden1 = parse_size(key, value);
    else if (key == "model.recon_hidden2") m.recon_hidden2 = parse_size(key, value);
    else if (key == "model.recon_window_fraction") m.recon_window_fraction = parse_double(key, value);
    else if (key == "model.recon_sigmoid") m.recon_sigmoid = parse_bool(key, value);
    else if (key == "train.epochs") t.epochs = parse_size(key, value);
    else if (key == "train.batch_size") t.batch_size = parse_size(key, value);
    else if (key == "train.seed") t.seed = parse_u64(key, value);
    else if (key == "train.workers") t.workers = parse_size(key, value);
    else if (key == "train.lr_peak") t.sched.lr_peak = parse_double(key, value);
    else if (key == "train.lr_min") t.sched.lr_min = parse_double(key, value);
    else if (key == "train.warmup_steps") t.sched.warmup_steps = parse_size(key, value);
    else if (key == "train.m_plus_start") t.loss.m_plus_start = parse_double(key, value);
    else if (key == "train.m_plus_end") t.sched.m_plus_end = parse_double(key, value);
    else if (key == "train.m_minus") t.loss.m_minus = parse_double(key, value);
    else if (key == "train.lambda") t.loss.lambda = parse_double(key, value);
    else if (key == "train.recon_weight") t.loss.recon_weight = parse_double(key, value);
    else if (key == "data.class_names") cfg.class_names = split_list(value);
    else throw ConfigError("unknown config key '" + key + "'");
}

} // namespace

std::size_t ModelConfig::recon_len() const {
    return static_cast<std::size_t>(
        std::llround(recon_window_fraction * static_cast<double>(beat_len)));
}

std::size_t ModelConfig::primary_count() const {
    const std::size_t pooled = beat_len / pool_stride;
    return pooled * dim / primary_dim;
}

void ModelConfig::validate() const {
    if (layers < 1) throw ConfigError("model.layers must be >= 1");
    if (branches < 1) throw ConfigError("model.branches must be >= 1");
    if (dim == 0 || dim % branches != 0) {
        throw ConfigError("model.branches (" + std::to_string(branches) +
                          ") must divide model.dim (" + std::to_string(dim) + ")");
    }
    if (state_dim < 1) throw ConfigError("model.state_dim must be >= 1");
    if (shared_conv_width % 2 == 0) throw ConfigError("model.shared_conv_width must be odd");
    if (num_classes < 2) throw ConfigError("model.num_classes must be >= 2");
    if (routing_iters < 1) throw ConfigError("model.routing_iters must be >= 1");
    if (pool_stride == 0 || beat_len % pool_stride != 0) {
        throw ConfigError("model.pool_stride (" + std::to_string(pool_stride) +
                          ") must divide model.beat_len (" + std::to_string(beat_len) + ")");
    }
    const std::size_t pooled_total = (beat_len / pool_stride) * dim;
    if (primary_dim == 0 || pooled_total % primary_dim != 0) {
        throw ConfigError("model.primary_dim (" + std::to_string(primary_dim) +
                          ") must divide the pooled feature size (" +
                          std::to_string(pooled_total) + ")");
    }
    if (class_dim < 1) throw ConfigError("model.class_dim must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must be in [0, 1)");
    if (recon_window_fraction <= 0.0 || recon_window_fraction > 1.0) {
        throw ConfigError("model.recon_window_fraction must be in (0, 1]");
    }
    if (recon_len() < 1 || recon_len() > beat_len) {
        throw ConfigError("reconstruction window does not fit the beat length");
    }
}

void LossConfig::validate() const {
    if (!(0.0 < m_minus && m_minus < m_plus_start && m_plus_start < 1.0)) {
        throw ConfigError("loss thresholds must satisfy 0 < m_minus < m_plus_start < 1");
    }
    if (lambda <= 0.0) throw ConfigError("train.lambda must be > 0");
}

double LossConfig::resolved_recon_weight(std::size_t recon_len) const {
    if (recon_weight >= 0.0) return recon_weight;
    return 0.0005 * static_cast<double>(recon_len);
}

void ScheduleConfig::validate(double m_plus_start) const {
    if (!(warmup_steps > 0 && warmup_steps < total_steps)) {
        throw ConfigError("schedule requires 0 < warmup_steps < total_steps");
    }
    if (!(lr_min < lr_peak)) throw ConfigError("schedule requires lr_min < lr_peak");
    if (!(m_plus_start <= m_plus_end && m_plus_end < 1.0)) {
        throw ConfigError("schedule requires m_plus_start <= m_plus_end < 1");
    }
}

std::vector<std::string> AppConfig::resolved_class_names() const {
    if (class_names.size() == model.num_classes) return class_names;
    if (model.num_classes == 5) return {"N", "S", "V", "F", "Q"};
    if (model.num_classes == 2) return {"Normal", "Myocardial Infarction"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < model.num_classes; ++i) out.push_back("class" + std::to_string(i));
    return out;
}

AppConfig parse_config_text(const std::string& text) {
    AppConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("malformed section header at line " + std::to_string(line_no));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key=value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_key(cfg, section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_text(const AppConfig& cfg) {
    const ModelConfig& m = cfg.model;
    const TrainConfig& t = cfg.train;
    std::string out;
    out += "[model]\n";
    out += "beat_len = " + std::to_string(m.beat_len) + "\n";
    out += "dim = " + std::to_string(m.dim) + "\n";
    out += "layers = " + std::to_string(m.layers) + "\n";
    out += "branches = " + std::to_string(m.branches) + "\n";
    out += "state_dim = " + std::to_string(m.state_dim) + "\n";
    out += "shared_conv_width = " + std::to_string(m.shared_conv_width) + "\n";
    out += "num_classes = " + std::to_string(m.num_classes) + "\n";
    out += "primary_dim = " + std::to_string(m.primary_dim) + "\n";
    out += "class_dim = " + std::to_string(m.class_dim) + "\n";
    out += "routing_iters = " + std::to_string(m.routing_iters) + "\n";
    out += "pool_stride = " + std::to_string(m.pool_stride) + "\n";
    out += "dropout = " + fmt(m.dropout) + "\n";
    out += "recon_hidden1 = " + std::to_string(m.recon_hidden1) + "\n";
    out += "recon_hidden2 = " + std::to_string(m.recon_hidden2) + "\n";
    out += "recon_window_fraction = " + fmt(m.recon_window_fraction) + "\n";
    out += std::string("recon_sigmoid = ") + (m.recon_sigmoid ? "true" : "false") + "\n";
    out += "\n[train]\n";
    out += "epochs = " + std::to_string(t.epochs) + "\n";
    out += "batch_size = " + std::to_string(t.batch_size) + "\n";
    out += "seed = " + std::to_string(t.seed) + "\n";
    out += "workers = " + std::to_string(t.workers) + "\n";
    out += "lr_peak = " + fmt(t.sched.lr_peak) + "\n";
    out += "lr_min = " + fmt(t.sched.lr_min) + "\n";
    out += "warmup_steps = " + std::to_string(t.sched.warmup_steps) + "\n";
    out += "m_plus_start = " + fmt(t.loss.m_plus_start) + "\n";
    out += "m_plus_end = " + fmt(t.sched.m_plus_end) + "\n";
    out += "m_minus = " + fmt(t.loss.m_minus) + "\n";
    out += "lambda = " + fmt(t.loss.lambda) + "\n";
    out += "recon_weight = " + fmt(t.loss.recon_weight) + "\n";
    out += "\n[data]\n";
    std::string names;
    const auto resolved = cfg.resolved_class_names();
    for (std::size_t i = 0; i < resolved.size(); ++i) {
        if (i) names += ",";
        names += resolved[i];
    }
    out += "class_names = " + names + "\n";
    return out;
}

void apply_tiny_preset(AppConfig& cfg) {
    cfg.model.dim = 8;
    cfg.model.layers = 2;
    cfg.model.branches = 2;
    cfg.model.state_dim = 4;
    cfg.model.num_classes = 2;
    cfg.model.primary_dim = 8;
    cfg.model.class_dim = 16;
    cfg.model.pool_stride = 17;
    cfg.model.dropout = 0.05;
    cfg.model.recon_hidden1 = 64;
    cfg.model.recon_hidden2 = 128;
    cfg.train.epochs = 30;
    cfg.train.batch_size = 32;
    cfg.train.sched.lr_peak = 5e-3;
    cfg.train.sched.lr_min = 1e-4;
}

} // namespace mcap
