#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcap/common.hpp"

namespace mcap {

// Architecture hyperparameters. Defaults follow the library's reference
// configuration: 6 encoder layers, 32 channels, 2 branches, 8 states.
struct ModelConfig {
    std::size_t beat_len = 187;
    std::size_t dim = 32;
    std::size_t layers = 6;
    std::size_t branches = 2;
    std::size_t state_dim = 8;
    std::size_t shared_conv_width = 3;
    std::size_t num_classes = 5;
    std::size_t primary_dim = 8;  // primary capsule dimension
    std::size_t class_dim = 16;   // class capsule dimension
    std::size_t routing_iters = 3;
    std::size_t pool_stride = 17;
    double dropout = 0.1;
    std::size_t recon_hidden1 = 512;
    std::size_t recon_hidden2 = 1024;
    double recon_window_fraction = 0.6;
    bool recon_sigmoid = true;

    std::size_t recon_len() const;     // round(recon_window_fraction * beat_len)
    std::size_t primary_count() const; // number of primary capsules P
    void validate() const;
};

struct LossConfig {
    double m_plus_start = 0.9;
    double m_minus = 0.1;
    double lambda = 0.5;
    double recon_weight = -1.0; // negative: resolved to 0.0005 * recon_len
    void validate() const;
    double resolved_recon_weight(std::size_t recon_len) const;
};

struct ScheduleConfig {
    std::size_t warmup_steps = 0; // 0: resolved to max(1, total_steps / 20)
    std::size_t total_steps = 0;  // filled in by the trainer
    double lr_peak = 2e-3;
    double lr_min = 1e-5;
    double m_plus_end = 0.95;
    void validate(double m_plus_start) const;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    LossConfig loss;
    ScheduleConfig sched;
};

struct AppConfig {
    ModelConfig model;
    TrainConfig train;
    std::vector<std::string> class_names; // index = CSV label integer

    // Class names, falling back to generated names for the configured K.
    std::vector<std::string> resolved_class_names() const;
};

// Flat key=value text with [section] headers and '#' comments. Unknown keys
// throw ConfigError naming the key.
AppConfig parse_config_text(const std::string& text);
AppConfig load_config_file(const std::string& path);
std::string config_to_text(const AppConfig& cfg);

// Desk-scale preset: small encoder and reconstructor, short schedule.
void apply_tiny_preset(AppConfig& cfg);

} // namespace mcap
