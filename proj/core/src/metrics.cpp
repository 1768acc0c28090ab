#include "mcap/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mcap {

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", round_half_up2(v));
    return buf;
}

} // namespace

ConfusionMatrix ConfusionMatrix::from_counts(std::size_t k, std::vector<long long> row_major) {
    if (row_major.size() != k * k) {
        throw ShapeError("confusion matrix needs " + std::to_string(k * k) + " counts, got " +
                         std::to_string(row_major.size()));
    }
    ConfusionMatrix cm(k);
    for (long long c : row_major) {
        if (c < 0) throw Error("confusion matrix counts must be non-negative");
    }
    cm.counts_ = std::move(row_major);
    return cm;
}

void ConfusionMatrix::add(int truth, int pred) {
    if (truth < 0 || pred < 0 || static_cast<std::size_t>(truth) >= k_ ||
        static_cast<std::size_t>(pred) >= k_) {
        throw Error("class index out of range for a " + std::to_string(k_) + "-class matrix");
    }
    ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(pred)];
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long c : counts_) t += c;
    return t;
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
    return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw ShapeError("confusion matrix class counts differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          std::size_t k) {
    if (preds.size() != labels.size()) {
        throw ShapeError("confusion got " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < preds.size(); ++i) cm.add(labels[i], preds[i]);
    return cm;
}

ClassReport per_class_metrics(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total == 0) throw Error("cannot compute metrics of an empty confusion matrix");
    const std::size_t k = cm.classes();
    ClassReport report;
    report.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const long long tp = cm.at(c, c);
        long long fn = 0, fp = 0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fn += cm.at(c, o);
            fp += cm.at(o, c);
        }
        const long long tn = total - tp - fn - fp;
        ClassMetrics& m = report.per_class[c];
        m.acc = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total);
        if (tp + fn > 0) {
            m.sen = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
        } else {
            m.sen_zero_div = true;
        }
        if (tp + fp > 0) {
            m.ppv = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
        } else {
            m.ppv_zero_div = true;
        }
        if (tn + fp > 0) {
            m.spec = 100.0 * static_cast<double>(tn) / static_cast<double>(tn + fp);
        } else {
            m.spec_zero_div = true;
        }
        if (m.acc + m.sen > 0.0) {
            m.f1 = 2.0 * m.acc * m.sen / (m.acc + m.sen);
        } else {
            m.f1_zero_div = true;
        }
        if (m.ppv + m.sen > 0.0) {
            m.f1_std = 2.0 * m.ppv * m.sen / (m.ppv + m.sen);
        } else {
            m.f1_std_zero_div = true;
        }
    }
    ClassMetrics& mac = report.macro;
    for (const auto& m : report.per_class) {
        mac.acc += m.acc;
        mac.sen += m.sen;
        mac.f1 += m.f1;
        mac.ppv += m.ppv;
        mac.spec += m.spec;
        mac.f1_std += m.f1_std;
        mac.sen_zero_div |= m.sen_zero_div;
        mac.ppv_zero_div |= m.ppv_zero_div;
        mac.spec_zero_div |= m.spec_zero_div;
        mac.f1_zero_div |= m.f1_zero_div;
        mac.f1_std_zero_div |= m.f1_std_zero_div;
    }
    const double dk = static_cast<double>(k);
    mac.acc /= dk;
    mac.sen /= dk;
    mac.f1 /= dk;
    mac.ppv /= dk;
    mac.spec /= dk;
    mac.f1_std /= dk;
    return report;
}

std::vector<double> standard_f1(const ConfusionMatrix& cm) {
    const ClassReport report = per_class_metrics(cm);
    std::vector<double> out;
    out.reserve(report.per_class.size());
    for (const auto& m : report.per_class) out.push_back(m.f1_std);
    return out;
}

double round_half_up2(double percent) {
    return std::floor(percent * 100.0 + 0.5) / 100.0;
}

std::string render_report(const ClassReport& report, const std::vector<std::string>& names) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-24s %8s %8s %8s %8s %8s %8s\n", "class", "ACC", "SEN",
                  "F1", "PPV", "SPEC", "F1(std)");
    out += buf;
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const ClassMetrics& m = report.per_class[c];
        const std::string name =
            c < names.size() ? names[c] : "class" + std::to_string(c);
        std::snprintf(buf, sizeof(buf), "%-24s %8s %8s %8s %8s %8s %8s\n", name.c_str(),
                      pct(m.acc).c_str(), pct(m.sen).c_str(), pct(m.f1).c_str(),
                      pct(m.ppv).c_str(), pct(m.spec).c_str(), pct(m.f1_std).c_str());
        out += buf;
    }
    const ClassMetrics& m = report.macro;
    std::snprintf(buf, sizeof(buf), "%-24s %8s %8s %8s %8s %8s %8s\n", "macro-avg",
                  pct(m.acc).c_str(), pct(m.sen).c_str(), pct(m.f1).c_str(), pct(m.ppv).c_str(),
                  pct(m.spec).c_str(), pct(m.f1_std).c_str());
    out += buf;
    return out;
}

void write_report_csv(const ClassReport& report, const std::vector<std::string>& names,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report file '" + path + "'");
    out << "class,acc,sen,f1,ppv,spec,f1_std\n";
    char buf[160];
    auto write_row = [&](const std::string& name, const ClassMetrics& m) {
        std::snprintf(buf, sizeof(buf), "%s,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f\n", name.c_str(),
                      round_half_up2(m.acc), round_half_up2(m.sen), round_half_up2(m.f1),
                      round_half_up2(m.ppv), round_half_up2(m.spec), round_half_up2(m.f1_std));
        out << buf;
    };
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        write_row(c < names.size() ? names[c] : "class" + std::to_string(c),
                  report.per_class[c]);
    }
    write_row("macro-avg", report.macro);
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& names,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion file '" + path + "'");
    out << "true\\pred";
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        out << "," << (c < names.size() ? names[c] : "class" + std::to_string(c));
    }
    out << "\n";
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        out << (t < names.size() ? names[t] : "class" + std::to_string(t));
        for (std::size_t p = 0; p < cm.classes(); ++p) out << "," << cm.at(t, p);
        out << "\n";
    }
}

} // namespace mcap
