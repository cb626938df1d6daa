#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binsleuth/error.hpp"
#include "binsleuth/eval.hpp"
#include "binsleuth/features.hpp"
#include "binsleuth/parallel.hpp"
#include "binsleuth/rng.hpp"

namespace binsleuth {

EvalReport report_from_confusion(ConfusionMatrix cm, int fold_count, std::uint64_t seed) {
    const std::size_t n_classes = cm.classes.size();
    std::int64_t total = 0;
    std::int64_t correct = 0;
    std::vector<std::int64_t> row_sums(n_classes, 0);
    std::vector<std::int64_t> col_sums(n_classes, 0);
    for (std::size_t a = 0; a < n_classes; ++a) {
        for (std::size_t p = 0; p < n_classes; ++p) {
            const std::int64_t c = cm.counts[a][p];
            total += c;
            row_sums[a] += c;
            col_sums[p] += c;
        }
        correct += cm.counts[a][a];
    }

    EvalReport report;
    report.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    report.per_class.resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        ClassMetrics& m = report.per_class[c];
        const double tp = static_cast<double>(cm.counts[c][c]);
        m.precision = col_sums[c] > 0 ? tp / static_cast<double>(col_sums[c]) : 0.0;
        m.recall = row_sums[c] > 0 ? tp / static_cast<double>(row_sums[c]) : 0.0;
        const double pr = m.precision + m.recall;
        m.f_measure = pr > 0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    }
    report.confusion = std::move(cm);
    report.fold_count = fold_count;
    report.seed = seed;
    return report;
}

namespace {

// Shared CV core so the bigram comparison can reuse one fold assignment
// across two datasets.
EvalReport cv_with_folds(const Dataset& data, const ModelSpec& spec,
                         const std::vector<std::vector<std::size_t>>& folds, std::uint64_t seed,
                         int jobs) {
    const std::size_t n_classes = data.classes.size();
    std::unordered_map<std::string, int> class_index;
    for (std::size_t c = 0; c < n_classes; ++c) class_index[data.classes[c]] = static_cast<int>(c);

    std::vector<std::vector<int>> fold_preds(folds.size());

    parallel_for(folds.size(), jobs, [&](std::size_t i) {
        std::vector<std::size_t> train_idx;
        train_idx.reserve(data.size() - folds[i].size());
        std::vector<char> held(data.size(), 0);
        for (std::size_t idx : folds[i]) held[idx] = 1;
        for (std::size_t idx = 0; idx < data.size(); ++idx)
            if (!held[idx]) train_idx.push_back(idx);

        const Dataset train = subset(data, train_idx);
        const Model model =
            train_model(train, spec, derive_seed(seed, "fold:" + std::to_string(i)));

        fold_preds[i].reserve(folds[i].size());
        for (std::size_t idx : folds[i])
            fold_preds[i].push_back(class_index.at(predict(model, data.x[idx]).label));
    });

    ConfusionMatrix cm;
    cm.classes = data.classes;
    cm.counts.assign(n_classes, std::vector<std::int64_t>(n_classes, 0));
    for (std::size_t i = 0; i < folds.size(); ++i)
        for (std::size_t j = 0; j < folds[i].size(); ++j)
            ++cm.counts[data.y[folds[i][j]]][fold_preds[i][j]];
    return report_from_confusion(std::move(cm), static_cast<int>(folds.size()), seed);
}

} // namespace

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& data, int k,
                                                       std::uint64_t seed) {
    if (data.size() == 0) throw Error(Errc::EmptyDataset, "cannot fold an empty dataset");
    if (k < 2) throw Error(Errc::DomainError, "fold count must be at least 2");

    std::vector<std::vector<std::size_t>> by_class(data.classes.size());
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.y[i]].push_back(i);

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t start = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        Rng rng(derive_seed(seed, "class:" + std::to_string(c)));
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.below(i)]);
        for (std::size_t j = 0; j < members.size(); ++j)
            folds[(start + j) % k].push_back(members[j]);
        start = (start + members.size()) % k;
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

EvalReport cross_validate(const Dataset& data, const ModelSpec& spec, int k, std::uint64_t seed,
                          int jobs) {
    return cv_with_folds(data, spec, stratified_folds(data, k, seed), seed, jobs);
}

std::pair<EvalReport, EvalReport> compare_bigram_endian(const Dataset& bigram_data,
                                                        const Dataset& endian_data,
                                                        const ModelSpec& spec, int k,
                                                        std::uint64_t seed, int jobs) {
    if (bigram_data.classes != endian_data.classes)
        throw Error(Errc::ClassMismatch, "datasets disagree on class labels");
    if (bigram_data.size() != endian_data.size() || bigram_data.y != endian_data.y)
        throw Error(Errc::ClassMismatch, "datasets cover different instances");
    if (bigram_data.classes.size() != 2)
        throw Error(Errc::DomainError, "comparison expects exactly two twin classes");

    const auto folds = stratified_folds(endian_data, k, seed);
    EvalReport bigram_report = cv_with_folds(bigram_data, spec, folds, seed, jobs);
    EvalReport endian_report = cv_with_folds(endian_data, spec, folds, seed, jobs);
    return {std::move(bigram_report), std::move(endian_report)};
}

SweepResult size_sweep(const Dataset& full_data, std::span<const CodeSample> samples,
                       std::vector<std::size_t> sizes, const std::vector<ModelSpec>& specs,
                       std::uint64_t seed, int jobs) {
    if (full_data.size() != samples.size())
        throw Error(Errc::DimensionMismatch, "feature rows and samples are not aligned");
    if (sizes.empty() || specs.empty())
        throw Error(Errc::DomainError, "need at least one size and one model spec");
    for (std::size_t s : sizes)
        if (s < 4) throw Error(Errc::DomainError, "sweep sizes must be at least 4 bytes");
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    const auto halves = stratified_folds(full_data, 2, derive_seed(seed, "holdout"));
    const Dataset train = subset(full_data, halves[0]);
    const std::vector<std::size_t>& test_idx = halves[1];

    std::vector<Model> models;
    models.reserve(specs.size());
    for (const ModelSpec& spec : specs)
        models.push_back(train_model(train, spec, derive_seed(seed, "model:" + spec.display)));

    // accuracy[m][s]; test features are regenerated once per size and shared
    // by every model.
    std::vector<std::vector<double>> accuracy(specs.size(),
                                              std::vector<double>(sizes.size(), 0.0));
    std::vector<std::vector<double>> test_features(test_idx.size());
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        parallel_for(test_idx.size(), jobs, [&](std::size_t t) {
            const CodeSample& sample = samples[test_idx[t]];
            test_features[t] =
                featurize_fragment(sample, sizes[s], derive_seed(seed, sample.source_id)).values;
        });
        for (std::size_t m = 0; m < specs.size(); ++m) {
            std::size_t correct = 0;
            for (std::size_t t = 0; t < test_idx.size(); ++t) {
                const Prediction pred = predict(models[m], test_features[t]);
                if (pred.label == full_data.classes[full_data.y[test_idx[t]]]) ++correct;
            }
            accuracy[m][s] = static_cast<double>(correct) / static_cast<double>(test_idx.size());
        }
    }

    SweepResult result;
    for (std::size_t m = 0; m < specs.size(); ++m)
        for (std::size_t s = 0; s < sizes.size(); ++s)
            result.rows.push_back({sizes[s], specs[m].display, accuracy[m][s]});
    return result;
}

std::string render_text(const EvalReport& report) {
    const auto& classes = report.confusion.classes;
    std::size_t width = 5;
    for (const auto& name : classes) width = std::max(width, name.size());

    std::ostringstream out;
    out << "accuracy " << std::fixed << std::setprecision(4) << report.accuracy << "  ("
        << report.fold_count << " folds, seed " << report.seed << ")\n\n";

    out << std::left << std::setw(static_cast<int>(width) + 2) << "class" << std::right
        << std::setw(10) << "precision" << std::setw(10) << "recall" << std::setw(11)
        << "f_measure" << "\n";
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const ClassMetrics& m = report.per_class[c];
        out << std::left << std::setw(static_cast<int>(width) + 2) << classes[c] << std::right
            << std::setw(10) << std::setprecision(4) << m.precision << std::setw(10) << m.recall
            << std::setw(11) << m.f_measure << "\n";
    }

    out << "\nconfusion (rows actual, columns predicted)\n";
    out << std::left << std::setw(static_cast<int>(width) + 2) << "" << std::right;
    for (const auto& name : classes)
        out << std::setw(static_cast<int>(std::max<std::size_t>(name.size(), 6)) + 1) << name;
    out << "\n";
    for (std::size_t a = 0; a < classes.size(); ++a) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << classes[a] << std::right;
        for (std::size_t p = 0; p < classes.size(); ++p)
            out << std::setw(static_cast<int>(std::max<std::size_t>(classes[p].size(), 6)) + 1)
                << report.confusion.counts[a][p];
        out << "\n";
    }
    return out.str();
}

std::string render_text(const SweepResult& result) {
    std::size_t width = 5;
    for (const SweepRow& row : result.rows) width = std::max(width, row.model.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width) + 2) << "model" << std::right
        << std::setw(10) << "bytes" << std::setw(10) << "accuracy" << "\n";
    for (const SweepRow& row : result.rows)
        out << std::left << std::setw(static_cast<int>(width) + 2) << row.model << std::right
            << std::setw(10) << row.max_bytes << std::setw(10) << std::fixed
            << std::setprecision(4) << row.accuracy << "\n";
    return out.str();
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "size,model,accuracy\n";
    for (const SweepRow& row : result.rows) {
        std::string model = row.model;
        if (model.find_first_of(",\"\n") != std::string::npos) {
            std::string quoted = "\"";
            for (char ch : model) {
                if (ch == '"') quoted += '"';
                quoted += ch;
            }
            quoted += '"';
            model = std::move(quoted);
        }
        char acc[32];
        std::snprintf(acc, sizeof acc, "%.9g", row.accuracy);
        out << row.max_bytes << ',' << model << ',' << acc << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < report.confusion.classes.size(); ++c) {
        per_class.push_back({{"class", report.confusion.classes[c]},
                             {"precision", report.per_class[c].precision},
                             {"recall", report.per_class[c].recall},
                             {"f_measure", report.per_class[c].f_measure}});
    }
    return {{"accuracy", report.accuracy},
            {"fold_count", report.fold_count},
            {"seed", report.seed},
            {"classes", report.confusion.classes},
            {"per_class", std::move(per_class)},
            {"confusion", report.confusion.counts}};
}

nlohmann::json sweep_to_json(const SweepResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& row : result.rows)
        rows.push_back({{"max_bytes", row.max_bytes},
                        {"model", row.model},
                        {"accuracy", row.accuracy}});
    return {{"rows", std::move(rows)}};
}

} // namespace binsleuth
