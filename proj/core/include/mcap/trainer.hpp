#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mcap/dataset.hpp"
#include "mcap/metrics.hpp"
#include "mcap/model.hpp"

namespace mcap {

struct EvalResult {
    ConfusionMatrix cm;
    ClassReport report;
    double hit_rate = 0.0; // trace / total
    std::vector<int> preds;
};

EvalResult evaluate(const MambaCapsuleModel& model, const std::vector<BeatRecord>& records,
                    std::size_t batch_size = 256);

struct TrainResult {
    std::vector<std::string> log_lines; // one key=value record per epoch
    double final_test_accuracy = 0.0;
    double final_total_loss = 0.0;
    std::size_t steps = 0;
};

// Minibatch training with the warmup+cosine learning-rate schedule and the
// rising margin threshold. Reconstruction targets the true label. Batches
// may be sharded over `workers` threads, each with a private tape;
// gradients merge in shard order. Reproducible from the seed. A non-finite
// loss aborts with a NumericError naming the first bad tensor.
TrainResult train_model(MambaCapsuleModel& model, const DatasetSplit& data,
                        const TrainConfig& cfg, std::ostream* echo = nullptr);

// Batch tensor (B, L) from a span of records.
Tensor batch_inputs(const std::vector<BeatRecord>& records, std::size_t begin, std::size_t count);
std::vector<int> batch_labels(const std::vector<BeatRecord>& records, std::size_t begin,
                              std::size_t count);

} // namespace mcap
