#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "binsleuth/dataset.hpp"

namespace binsleuth {

struct Prediction {
    std::string label;          // argmax of scores, ties to the smallest class index
    std::vector<double> scores; // per-class, nonnegative, sums to 1
};

struct KnnModel {
    int k = 1;
    std::vector<std::vector<double>> train_x;
    std::vector<int> train_y;
};

struct GnbModel {
    std::vector<double> priors;            // per class, empirical frequencies
    std::vector<std::vector<double>> means; // [class][feature]
    std::vector<std::vector<double>> vars;  // [class][feature], floored at 1e-9
};

// Internal node when feature >= 0 (x[feature] < threshold goes left),
// leaf otherwise with its class distribution.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> dist;
};

struct TreeModel {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

struct ForestModel {
    std::vector<TreeModel> trees;
};

struct LogRegModel {
    std::vector<std::vector<double>> weights; // [class][feature]
    std::vector<double> bias;                 // [class]
};

struct Model {
    std::variant<KnnModel, GnbModel, TreeModel, ForestModel, LogRegModel> impl;
    std::vector<std::string> classes;
    std::size_t feature_dim = 0;
};

struct ForestConfig {
    int trees = 100;
    std::uint64_t seed = 1;
    bool bootstrap = true;
    int min_leaf = 1;
    int mtry = 0; // 0 = floor(sqrt(feature_dim))
};

struct LogRegConfig {
    double l2 = 1e-4;
    int epochs = 500;
    double learn_rate = 0.5;
};

Model train_knn(const Dataset& data, int k);
Model train_gnb(const Dataset& data);
Model train_tree(const Dataset& data, int min_leaf = 2);
Model train_forest(const Dataset& data, const ForestConfig& config);
Model train_logreg(const Dataset& data, const LogRegConfig& config);

Prediction predict(const Model& model, std::span<const double> v);

// Versioned JSON document; load rejects unknown format_version.
std::string save_model(const Model& model);
Model load_model(std::string_view json_text);

// Normalized per-class log-posteriors of a naive Bayes model, exposed so
// they can be checked against a density-product oracle without going
// through exp/log round trips.
std::vector<double> gnb_log_posteriors(const Model& model, std::span<const double> v);

// Multinomial cross-entropy loss with L2 penalty (weights only), plus its
// analytic gradient. The trainer steps along this gradient; tests
// finite-difference the loss against it.
double logreg_loss_grad(const Dataset& data, const std::vector<std::vector<double>>& weights,
                        const std::vector<double>& bias, double l2,
                        std::vector<std::vector<double>>* grad_w, std::vector<double>* grad_b);

// Per-epoch training losses of the most recent train_logreg call are
// returned alongside the model when using this variant.
Model train_logreg_traced(const Dataset& data, const LogRegConfig& config,
                          std::vector<double>* epoch_losses);

// Model spec strings: `knn:k=3`, `gnb`, `tree:min_leaf=2`,
// `forest:trees=100`, `logreg:l2=1e-4,epochs=500,learn_rate=0.5`.
struct ModelSpec {
    std::string kind;
    std::map<std::string, double> params;
    std::string display; // original text, used in reports
};

ModelSpec parse_model_spec(const std::string& text);
Model train_model(const Dataset& data, const ModelSpec& spec, std::uint64_t seed);

} // namespace binsleuth
