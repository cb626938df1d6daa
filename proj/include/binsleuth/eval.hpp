#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "binsleuth/carver.hpp"
#include "binsleuth/dataset.hpp"
#include "binsleuth/learners.hpp"

namespace binsleuth {

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::int64_t>> counts; // [actual][predicted]
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0; // harmonic mean, 0 when precision + recall == 0
};

struct EvalReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class; // aligned with confusion.classes
    ConfusionMatrix confusion;
    int fold_count = 0;
    std::uint64_t seed = 0;
};

struct SweepRow {
    std::size_t max_bytes = 0;
    std::string model;
    double accuracy = 0.0;
};

// Rows are grouped by model in input spec order; within a group the
// max_bytes values are strictly increasing.
struct SweepResult {
    std::vector<SweepRow> rows;
};

// Accuracy and per-class precision/recall/F from a filled confusion matrix.
EvalReport report_from_confusion(ConfusionMatrix cm, int fold_count, std::uint64_t seed);

// Splits instance indices into k folds, stratified by class: each class is
// shuffled with a seed-derived generator and dealt round-robin, so per-class
// fold sizes differ by at most one. Classes with fewer than k instances are
// spread over as many folds as they have members.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, int k,
                                                       std::uint64_t seed);

// k-fold cross-validation with one pooled confusion matrix across all held-out
// folds. Per-fold trainer seeds derive from `seed`, so the report is a pure
// function of (data, spec, k, seed). `jobs` parallelizes fold training; the
// merged report does not depend on it.
EvalReport cross_validate(const Dataset& data, const ModelSpec& spec, int k, std::uint64_t seed,
                          int jobs = 1);

// Fragment-size experiment: a 50/50 stratified holdout is drawn, models train
// once on the full-sample features of the training half, and each held-out
// file is refeaturized with featurize_fragment at every size. Fragment seeds
// depend on the file, not the size, so series differ only in max_bytes.
// full_data must be index-aligned with samples.
SweepResult size_sweep(const Dataset& full_data, std::span<const CodeSample> samples,
                       std::vector<std::size_t> sizes, const std::vector<ModelSpec>& specs,
                       std::uint64_t seed, int jobs = 1);

// Evaluates one model spec on two representations of the same files under
// identical folds; returns (bigram report, endian report).
std::pair<EvalReport, EvalReport> compare_bigram_endian(const Dataset& bigram_data,
                                                        const Dataset& endian_data,
                                                        const ModelSpec& spec, int k,
                                                        std::uint64_t seed, int jobs = 1);

std::string render_text(const EvalReport& report);
std::string render_text(const SweepResult& result);
std::string sweep_csv(const SweepResult& result);

nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json sweep_to_json(const SweepResult& result);

} // namespace binsleuth
