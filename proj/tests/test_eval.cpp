#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "binsleuth/error.hpp"
#include "binsleuth/eval.hpp"
#include "binsleuth/rng.hpp"

using namespace binsleuth;

namespace {

// n instances per class at well-separated cluster centers.
Dataset clustered(const std::vector<std::string>& classes, int per_class, double spread,
                  std::uint64_t seed) {
    Dataset data;
    data.classes = classes;
    data.dim = 2;
    Rng rng(seed);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const double cx = static_cast<double>(c) * 10.0;
        for (int i = 0; i < per_class; ++i) {
            data.x.push_back({cx + rng.unit() * spread, rng.unit() * spread});
            data.y.push_back(static_cast<int>(c));
        }
    }
    return data;
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a typed error");
    return Errc::IoError;
}

} // namespace

TEST_CASE("stratified folds deal a balanced 2x10 dataset one-per-class-per-fold") {
    const Dataset data = clustered({"a", "b"}, 10, 1.0, 1);
    const auto folds = stratified_folds(data, 10, 42);
    REQUIRE(folds.size() == 10);
    for (const auto& fold : folds) {
        REQUIRE(fold.size() == 2);
        std::set<int> labels;
        for (std::size_t idx : fold) labels.insert(data.y[idx]);
        CHECK(labels == std::set<int>{0, 1});
        CHECK(std::is_sorted(fold.begin(), fold.end()));
    }
}

TEST_CASE("per-class fold sizes differ by at most one") {
    // 17 instances of one class over 10 folds: seven folds of 2, three of 1.
    const Dataset data = clustered({"solo"}, 17, 1.0, 2);
    const auto folds = stratified_folds(data, 10, 7);
    std::vector<std::size_t> sizes;
    for (const auto& fold : folds) sizes.push_back(fold.size());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) == 2);
    CHECK(*std::min_element(sizes.begin(), sizes.end()) == 1);
    CHECK(std::count(sizes.begin(), sizes.end(), 2) == 7);
}

TEST_CASE("folds partition the index range exactly") {
    const Dataset data = clustered({"a", "b", "c"}, 13, 1.0, 3);
    const auto folds = stratified_folds(data, 6, 9);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& fold : folds) {
        total += fold.size();
        for (std::size_t idx : fold) {
            CHECK(idx < data.size());
            CHECK(seen.insert(idx).second); // no index in two folds
        }
    }
    CHECK(total == data.size());
}

TEST_CASE("fold assignment is a pure function of (data, k, seed)") {
    const Dataset data = clustered({"a", "b"}, 9, 1.0, 4);
    CHECK(stratified_folds(data, 4, 11) == stratified_folds(data, 4, 11));
    CHECK(stratified_folds(data, 4, 11) != stratified_folds(data, 4, 12));
}

TEST_CASE("stratified_folds input validation") {
    const Dataset data = clustered({"a"}, 5, 1.0, 5);
    CHECK(code_of([&] { stratified_folds(data, 1, 1); }) == Errc::DomainError);
    CHECK(code_of([] { stratified_folds(Dataset{}, 2, 1); }) == Errc::EmptyDataset);
}

TEST_CASE("cross-validation is perfect on well-separated clusters") {
    const Dataset data = clustered({"a", "b", "c"}, 12, 1.0, 6);
    const EvalReport report = cross_validate(data, parse_model_spec("knn:k=1"), 10, 42);
    CHECK(report.accuracy == doctest::Approx(1.0));
    CHECK(report.fold_count == 10);
    CHECK(report.seed == 42);
    for (const auto& metrics : report.per_class) {
        CHECK(metrics.precision == doctest::Approx(1.0));
        CHECK(metrics.recall == doctest::Approx(1.0));
        CHECK(metrics.f_measure == doctest::Approx(1.0));
    }
}

TEST_CASE("pooled confusion counts every instance exactly once") {
    const Dataset data = clustered({"a", "b"}, 11, 8.0, 7);
    const EvalReport report = cross_validate(data, parse_model_spec("gnb"), 5, 3);
    std::int64_t total = 0;
    for (const auto& row : report.confusion.counts)
        for (std::int64_t v : row) total += v;
    CHECK(total == static_cast<std::int64_t>(data.size()));
    CHECK(report.confusion.classes == data.classes);
}

TEST_CASE("shuffled labels score near chance over twenty seeds") {
    // Permutation oracle: destroying the feature-label link must pull pooled
    // CV accuracy toward 0.5 for a balanced 2-class problem.
    Dataset data = clustered({"a", "b"}, 20, 1.0, 8);
    Rng rng(99);
    for (std::size_t i = data.y.size() - 1; i > 0; --i) {
        std::swap(data.y[i], data.y[rng.below(i + 1)]);
    }
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        mean += cross_validate(data, parse_model_spec("knn:k=3"), 5, seed).accuracy;
    }
    mean /= 20.0;
    CHECK(mean >= 0.35);
    CHECK(mean <= 0.65);
}

TEST_CASE("parallel fold training changes nothing in the report") {
    const Dataset data = clustered({"a", "b", "c"}, 10, 6.0, 10);
    const ModelSpec spec = parse_model_spec("forest:trees=8");
    const EvalReport serial = cross_validate(data, spec, 5, 77, 1);
    const EvalReport parallel = cross_validate(data, spec, 5, 77, 4);
    CHECK(serial.accuracy == parallel.accuracy);
    CHECK(serial.confusion.counts == parallel.confusion.counts);
}

TEST_CASE("metrics from a diagonal confusion are all ones") {
    ConfusionMatrix cm;
    cm.classes = {"x", "y"};
    cm.counts = {{5, 0}, {0, 5}};
    const EvalReport report = report_from_confusion(cm, 10, 0);
    CHECK(report.accuracy == doctest::Approx(1.0));
    for (const auto& m : report.per_class) {
        CHECK(m.precision == doctest::Approx(1.0));
        CHECK(m.recall == doctest::Approx(1.0));
        CHECK(m.f_measure == doctest::Approx(1.0));
    }
}

TEST_CASE("metrics from an anti-diagonal confusion are all zeros") {
    ConfusionMatrix cm;
    cm.classes = {"x", "y"};
    cm.counts = {{0, 5}, {5, 0}};
    const EvalReport report = report_from_confusion(cm, 10, 0);
    CHECK(report.accuracy == doctest::Approx(0.0));
    for (const auto& m : report.per_class) {
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.f_measure == 0.0); // 0/0 convention
    }
}

TEST_CASE("precision and recall transpose under confusion transposition") {
    ConfusionMatrix cm;
    cm.classes = {"x", "y"};
    cm.counts = {{7, 3}, {1, 9}};
    ConfusionMatrix tr = cm;
    std::swap(tr.counts[0][1], tr.counts[1][0]);
    const EvalReport a = report_from_confusion(cm, 1, 0);
    const EvalReport b = report_from_confusion(tr, 1, 0);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(a.per_class[c].precision == doctest::Approx(b.per_class[c].recall));
        CHECK(a.per_class[c].recall == doctest::Approx(b.per_class[c].precision));
    }
    CHECK(a.accuracy == doctest::Approx(b.accuracy));
}

TEST_CASE("compare_bigram_endian on identical datasets yields identical reports") {
    const Dataset data = clustered({"a", "b"}, 10, 4.0, 12);
    const auto [left, right] = compare_bigram_endian(data, data, parse_model_spec("tree"), 5, 21);
    CHECK(left.accuracy == right.accuracy);
    CHECK(left.confusion.counts == right.confusion.counts);
    for (std::size_t c = 0; c < left.per_class.size(); ++c) {
        CHECK(left.per_class[c].f_measure == right.per_class[c].f_measure);
    }
}

TEST_CASE("compare_bigram_endian rejects mismatched inputs") {
    const Dataset a = clustered({"a", "b"}, 6, 1.0, 13);
    Dataset other_classes = a;
    other_classes.classes = {"a", "z"};
    CHECK(code_of([&] {
              compare_bigram_endian(a, other_classes, parse_model_spec("gnb"), 3, 1);
          }) == Errc::ClassMismatch);

    Dataset other_labels = a;
    std::swap(other_labels.y.front(), other_labels.y.back());
    CHECK(code_of([&] {
              compare_bigram_endian(a, other_labels, parse_model_spec("gnb"), 3, 1);
          }) == Errc::ClassMismatch);

    const Dataset three = clustered({"a", "b", "c"}, 6, 1.0, 14);
    CHECK(code_of([&] {
              compare_bigram_endian(three, three, parse_model_spec("gnb"), 3, 1);
          }) == Errc::DomainError);
}

namespace {

// Synthetic code samples whose byte distributions are trivially separable:
// class 0 files hold low byte values, class 1 files high ones.
void make_sweep_corpus(int per_class, std::size_t bytes, std::uint64_t seed,
                       std::vector<CodeSample>* samples, Dataset* data) {
    std::vector<FeatureVector> rows;
    Rng rng(seed);
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < per_class; ++i) {
            CodeSample sample;
            sample.source_id = "s" + std::to_string(c) + "-" + std::to_string(i);
            for (std::size_t b = 0; b < bytes; ++b) {
                const auto lo = static_cast<std::uint8_t>(rng.below(96));
                sample.bytes.push_back(c == 0 ? lo : static_cast<std::uint8_t>(0xFF - lo));
            }
            sample.section_sizes = {bytes};
            samples->push_back(sample);
            rows.push_back(featurize_full(sample, c == 0 ? "low" : "high"));
        }
    }
    *data = make_dataset(rows);
}

} // namespace

TEST_CASE("size_sweep emits one ascending series per model") {
    std::vector<CodeSample> samples;
    Dataset data;
    make_sweep_corpus(8, 2048, 31, &samples, &data);
    const std::vector<ModelSpec> specs = {parse_model_spec("knn:k=1"), parse_model_spec("gnb")};
    const SweepResult result = size_sweep(data, samples, {64, 16, 4096}, specs, 5);
    REQUIRE(result.rows.size() == 6);
    // Model-major grouping in spec order, sizes sorted ascending inside.
    const std::vector<std::size_t> expect_sizes{16, 64, 4096};
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t s = 0; s < 3; ++s) {
            const SweepRow& row = result.rows[m * 3 + s];
            CHECK(row.model == specs[m].display);
            CHECK(row.max_bytes == expect_sizes[s]);
            CHECK(row.accuracy >= 0.0);
            CHECK(row.accuracy <= 1.0);
        }
    }
    // 4096 >= every code_len: the fragment path is exact, and this corpus is
    // separable, so the full-size accuracy is perfect.
    CHECK(result.rows[2].accuracy == doctest::Approx(1.0));
    CHECK(result.rows[5].accuracy == doctest::Approx(1.0));
}

TEST_CASE("size_sweep is deterministic and duplicate sizes collapse") {
    std::vector<CodeSample> samples;
    Dataset data;
    make_sweep_corpus(6, 512, 32, &samples, &data);
    const std::vector<ModelSpec> specs = {parse_model_spec("tree")};
    const SweepResult a = size_sweep(data, samples, {16, 64, 16, 64}, specs, 9);
    const SweepResult b = size_sweep(data, samples, {64, 16}, specs, 9);
    REQUIRE(a.rows.size() == 2);
    REQUIRE(b.rows.size() == 2);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].max_bytes == b.rows[i].max_bytes);
        CHECK(a.rows[i].accuracy == b.rows[i].accuracy);
    }
}

TEST_CASE("size_sweep validates sizes and alignment") {
    std::vector<CodeSample> samples;
    Dataset data;
    make_sweep_corpus(4, 256, 33, &samples, &data);
    const std::vector<ModelSpec> specs = {parse_model_spec("gnb")};
    CHECK(code_of([&] { size_sweep(data, samples, {3}, specs, 1); }) == Errc::DomainError);
    CHECK(code_of([&] { size_sweep(data, samples, {}, specs, 1); }) == Errc::DomainError);

    std::vector<CodeSample> short_samples(samples.begin(), samples.end() - 1);
    CHECK(code_of([&] {
              size_sweep(data, short_samples, {16}, specs, 1);
          }) == Errc::DimensionMismatch);
}

TEST_CASE("sweep jobs do not change the result") {
    std::vector<CodeSample> samples;
    Dataset data;
    make_sweep_corpus(6, 1024, 34, &samples, &data);
    const std::vector<ModelSpec> specs = {parse_model_spec("knn:k=3")};
    const SweepResult serial = size_sweep(data, samples, {16, 128}, specs, 4, 1);
    const SweepResult parallel = size_sweep(data, samples, {16, 128}, specs, 4, 4);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].accuracy == parallel.rows[i].accuracy);
    }
}

TEST_CASE("sweep CSV uses the size,model,accuracy schema") {
    SweepResult result;
    result.rows = {{16, "knn:k=1", 0.5}, {64, "knn:k=1", 0.75}, {16, "tree,deep", 1.0}};
    const std::string csv = sweep_csv(result);
    CHECK(csv.rfind("size,model,accuracy\n", 0) == 0);
    CHECK(csv.find("16,knn:k=1,0.5\n") != std::string::npos);
    CHECK(csv.find("64,knn:k=1,0.75\n") != std::string::npos);
    CHECK(csv.find("16,\"tree,deep\",1\n") != std::string::npos);
}

TEST_CASE("report JSON carries the headline numbers") {
    const Dataset data = clustered({"a", "b"}, 8, 1.0, 15);
    const EvalReport report = cross_validate(data, parse_model_spec("knn:k=1"), 4, 6);
    const nlohmann::json doc = report_to_json(report);
    CHECK(doc.at("accuracy").get<double>() == doctest::Approx(report.accuracy));
    CHECK(doc.at("fold_count").get<int>() == 4);
    CHECK(doc.at("seed").get<std::uint64_t>() == 6);
    CHECK(doc.at("classes").size() == 2);
    CHECK(doc.at("confusion").size() == 2);
    CHECK(doc.at("per_class").size() == 2);

    const std::string text = render_text(report);
    CHECK(text.find("accuracy") != std::string::npos);
    CHECK(text.find("a") != std::string::npos);
}
