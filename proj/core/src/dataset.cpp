#include "mcap/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mcap/rng.hpp"

namespace mcap {

namespace {

// Parses one field; returns false on malformed input.
bool parse_field(const std::string& line, std::size_t begin, std::size_t end, double* out) {
    while (begin < end && (line[begin] == ' ' || line[begin] == '\t')) ++begin;
    while (end > begin && (line[end - 1] == ' ' || line[end - 1] == '\t' || line[end - 1] == '\r')) {
        --end;
    }
    if (begin == end) return false;
    const auto res = std::from_chars(line.data() + begin, line.data() + end, *out);
    return res.ec == std::errc() && res.ptr == line.data() + end;
}

bool parse_row(const std::string& line, std::size_t expect_fields, std::vector<double>* out,
               std::size_t* bad_column) {
    out->clear();
    std::size_t start = 0;
    std::size_t col = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::size_t end = comma == std::string::npos ? line.size() : comma;
        double v = 0.0;
        if (!parse_field(line, start, end, &v)) {
            *bad_column = col + 1;
            return false;
        }
        out->push_back(v);
        ++col;
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out->size() != expect_fields) {
        *bad_column = 0;
        return false;
    }
    return true;
}

} // namespace

int LabelVocabulary::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<BeatRecord> load_csv(const std::string& path, std::size_t beat_len,
                                 std::size_t num_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    const std::size_t expect = beat_len + 1;
    std::vector<BeatRecord> records;
    std::string line;
    std::vector<double> fields;
    std::size_t row = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::size_t bad_col = 0;
        if (!parse_row(line, expect, &fields, &bad_col)) {
            if (first_data_row && bad_col != 0) {
                // Header row: non-numeric fields in the first line are skipped.
                first_data_row = false;
                continue;
            }
            if (bad_col == 0) {
                throw ParseError("expected " + std::to_string(expect) + " fields at row " +
                                 std::to_string(row) + " of '" + path + "'");
            }
            throw ParseError("non-numeric field at row " + std::to_string(row) + ", column " +
                             std::to_string(bad_col) + " of '" + path + "'");
        }
        first_data_row = false;
        const double raw_label = fields.back();
        const double rounded = std::round(raw_label);
        if (std::abs(raw_label - rounded) > 1e-9 || rounded < 0.0 ||
            rounded >= static_cast<double>(num_classes)) {
            throw ParseError("label " + std::to_string(raw_label) + " out of range [0, " +
                             std::to_string(num_classes) + ") at row " + std::to_string(row) +
                             " of '" + path + "'");
        }
        BeatRecord rec;
        rec.samples.assign(fields.begin(), fields.end() - 1);
        rec.label = static_cast<int>(rounded);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_csv(const std::vector<BeatRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file '" + path + "'");
    char buf[64];
    for (const auto& rec : records) {
        std::string line;
        for (double v : rec.samples) {
            std::snprintf(buf, sizeof(buf), "%.12g", v);
            line += buf;
            line += ',';
        }
        line += std::to_string(rec.label);
        line += '\n';
        out << line;
    }
}

DatasetSplit stratified_split(const std::vector<BeatRecord>& records, double ratio,
                              std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw ConfigError("split ratio must be in (0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label].push_back(i);
    DatasetSplit split;
    split.seed = seed;
    for (auto& [label, idx] : by_class) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(label) + 0x5eedULL));
        rng.shuffle(idx);
        const std::size_t n_train = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? split.train : split.test).push_back(records[idx[i]]);
        }
    }
    return split;
}

std::vector<std::size_t> class_counts(const std::vector<BeatRecord>& records,
                                      std::size_t num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& rec : records) {
        if (rec.label >= 0 && static_cast<std::size_t>(rec.label) < num_classes) {
            ++counts[static_cast<std::size_t>(rec.label)];
        }
    }
    return counts;
}

SynthShape synth_shape() { return SynthShape{}; }

std::vector<BeatRecord> synth_beats(std::size_t n_per_class, std::size_t beat_len,
                                    std::uint64_t seed) {
    const SynthShape sh = synth_shape();
    std::vector<BeatRecord> out;
    out.reserve(2 * n_per_class);
    for (int label = 0; label < 2; ++label) {
        Rng rng(Rng::mix(seed, 0xbea7ULL + static_cast<std::uint64_t>(label)));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            BeatRecord rec;
            rec.label = label;
            rec.samples.resize(beat_len);
            for (std::size_t k = 0; k < beat_len; ++k) {
                const double t = static_cast<double>(k) / static_cast<double>(beat_len - 1);
                double v = sh.baseline;
                if (label == 0) {
                    const double dp = (t - sh.p_center) / sh.p_sigma;
                    v += sh.p_amp * std::exp(-0.5 * dp * dp);
                }
                const double dr = (t - sh.r_center) / sh.r_sigma;
                v += sh.r_amp * std::exp(-0.5 * dr * dr);
                v += rng.normal(0.0, sh.noise_sigma);
                rec.samples[k] = v;
            }
            const auto [mn, mx] =
                std::minmax_element(rec.samples.begin(), rec.samples.end());
            const double lo = *mn, hi = *mx;
            for (auto& v : rec.samples) v = (v - lo) / (hi - lo);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

} // namespace mcap
