#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcap/common.hpp"

namespace mcap {

// K x K counts; rows are true classes, columns predictions.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}
    static ConfusionMatrix from_counts(std::size_t k, std::vector<long long> row_major);

    void add(int truth, int pred);
    long long at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
    std::size_t classes() const { return k_; }
    long long total() const;
    long long trace() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

private:
    std::size_t k_;
    std::vector<long long> counts_;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          std::size_t k);

// Percentages in [0, 100] at full precision. f1 pairs ACC with SEN
// (2*ACC*SEN/(ACC+SEN)); f1_std is the conventional 2*PPV*SEN/(PPV+SEN).
// A zero denominator yields a defined 0 with the matching flag set.
struct ClassMetrics {
    double acc = 0, sen = 0, f1 = 0, ppv = 0, spec = 0, f1_std = 0;
    bool sen_zero_div = false, ppv_zero_div = false, spec_zero_div = false;
    bool f1_zero_div = false, f1_std_zero_div = false;
};

struct ClassReport {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro; // unweighted class means
};

// One-vs-rest metrics per class from the confusion matrix; throws on an
// empty matrix.
ClassReport per_class_metrics(const ConfusionMatrix& cm);

std::vector<double> standard_f1(const ConfusionMatrix& cm);

// Round half up to 2 decimals (presentation only).
double round_half_up2(double percent);

std::string render_report(const ClassReport& report, const std::vector<std::string>& names);
void write_report_csv(const ClassReport& report, const std::vector<std::string>& names,
                      const std::string& path);
void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path);

} // namespace mcap
