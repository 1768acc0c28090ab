#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcap/common.hpp"

namespace mcap {

// One fixed-length beat waveform with its integer class label.
struct BeatRecord {
    std::vector<double> samples;
    int label = 0;
};

struct LabelVocabulary {
    std::vector<std::string> names;

    static LabelVocabulary mitbih() { return {{"N", "S", "V", "F", "Q"}}; }
    static LabelVocabulary ptb() { return {{"Normal", "Myocardial Infarction"}}; }

    // Index of a class name, or -1.
    int index_of(const std::string& name) const;
};

struct DatasetSplit {
    std::vector<BeatRecord> train;
    std::vector<BeatRecord> test;
    std::uint64_t seed = 0;
};

// CSV with beat_len+1 numeric columns per row, last column the integer
// label; UTF-8, no header (a non-numeric first row is skipped). Parse
// errors report the row and column of the first malformed field.
std::vector<BeatRecord> load_csv(const std::string& path, std::size_t beat_len,
                                 std::size_t num_classes);

void write_csv(const std::vector<BeatRecord>& records, const std::string& path);

// Per-class split at `ratio`, deterministic for a fixed seed.
DatasetSplit stratified_split(const std::vector<BeatRecord>& records, double ratio,
                              std::uint64_t seed);

std::vector<std::size_t> class_counts(const std::vector<BeatRecord>& records,
                                      std::size_t num_classes);

// Fixed phases of the synthetic beat generator, as fractions of the beat.
struct SynthShape {
    double p_center = 0.3;
    double p_sigma = 0.05;
    double p_amp = 0.25;
    double r_center = 0.5;
    double r_sigma = 0.015;
    double r_amp = 1.0;
    double baseline = 0.15;
    double noise_sigma = 0.02;
};

SynthShape synth_shape();

// Two-class toy task: class 0 has a P bump and an R spike at fixed phases,
// class 1 has the P bump suppressed. Each beat is min-max normalized to
// [0, 1]. Returns 2*n_per_class records (class 0 block first).
std::vector<BeatRecord> synth_beats(std::size_t n_per_class, std::size_t beat_len,
                                    std::uint64_t seed);

} // namespace mcap
