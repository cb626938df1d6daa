#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <variant>

#include "binsleuth/error.hpp"
#include "binsleuth/learners.hpp"

namespace binsleuth {

namespace {

// Ties resolve to the smallest class index so repeated runs agree.
std::size_t argmax(const std::vector<double>& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

std::vector<double> knn_scores(const KnnModel& knn, std::size_t n_classes,
                               std::span<const double> v) {
    const std::size_t n = knn.train_y.size();
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* t = knn.train_x[i].data();
        double acc = 0.0;
        for (std::size_t f = 0; f < v.size(); ++f) {
            const double d = t[f] - v[f];
            acc += d * d;
        }
        dist2[i] = acc;
    }
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t k = static_cast<std::size_t>(knn.k);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
                          return a < b;
                      });
    std::vector<double> scores(n_classes, 0.0);
    for (std::size_t i = 0; i < k; ++i) scores[knn.train_y[order[i]]] += 1.0;
    for (double& s : scores) s /= static_cast<double>(k);
    return scores;
}

std::vector<double> tree_scores(const TreeModel& tree, std::span<const double> v) {
    std::size_t node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& cur = tree.nodes[node];
        node = v[cur.feature] < cur.threshold ? cur.left : cur.right;
    }
    return tree.nodes[node].dist;
}

std::vector<double> forest_scores(const ForestModel& forest, std::size_t n_classes,
                                  std::span<const double> v) {
    std::vector<double> scores(n_classes, 0.0);
    for (const TreeModel& tree : forest.trees)
        scores[argmax(tree_scores(tree, v))] += 1.0;
    for (double& s : scores) s /= static_cast<double>(forest.trees.size());
    return scores;
}

void normalize_logits(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    for (double& v : z) v -= lse;
}

void check_dim(const Model& model, std::span<const double> v) {
    if (v.size() != model.feature_dim)
        throw Error(Errc::DimensionMismatch, "instance has " + std::to_string(v.size()) +
                                                 " features, model expects " +
                                                 std::to_string(model.feature_dim));
}

} // namespace

std::vector<double> gnb_log_posteriors(const Model& model, std::span<const double> v) {
    const auto* gnb = std::get_if<GnbModel>(&model.impl);
    if (!gnb) throw Error(Errc::DomainError, "model is not naive Bayes");
    check_dim(model, v);
    const std::size_t n_classes = gnb->priors.size();
    std::vector<double> logp(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        double acc = std::log(gnb->priors[c]);
        const double* mean = gnb->means[c].data();
        const double* var = gnb->vars[c].data();
        for (std::size_t f = 0; f < v.size(); ++f) {
            const double d = v[f] - mean[f];
            acc += -0.5 * (std::log(2.0 * M_PI * var[f]) + d * d / var[f]);
        }
        logp[c] = acc;
    }
    normalize_logits(logp);
    return logp;
}

Prediction predict(const Model& model, std::span<const double> v) {
    check_dim(model, v);
    const std::size_t n_classes = model.classes.size();
    std::vector<double> scores;
    if (const auto* knn = std::get_if<KnnModel>(&model.impl)) {
        scores = knn_scores(*knn, n_classes, v);
    } else if (std::holds_alternative<GnbModel>(model.impl)) {
        scores = gnb_log_posteriors(model, v);
        for (double& s : scores) s = std::exp(s);
    } else if (const auto* tree = std::get_if<TreeModel>(&model.impl)) {
        scores = tree_scores(*tree, v);
    } else if (const auto* forest = std::get_if<ForestModel>(&model.impl)) {
        scores = forest_scores(*forest, n_classes, v);
    } else {
        const auto& lr = std::get<LogRegModel>(model.impl);
        std::vector<double> z(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) {
            double acc = lr.bias[c];
            const double* w = lr.weights[c].data();
            for (std::size_t f = 0; f < v.size(); ++f) acc += w[f] * v[f];
            z[c] = acc;
        }
        normalize_logits(z);
        for (double& s : z) s = std::exp(s);
        scores = std::move(z);
    }
    Prediction out;
    out.label = model.classes[argmax(scores)];
    out.scores = std::move(scores);
    return out;
}

} // namespace binsleuth
