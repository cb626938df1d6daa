#include <algorithm>
#include <cmath>
#include <numeric>

#include "binsleuth/error.hpp"
#include "binsleuth/learners.hpp"
#include "binsleuth/rng.hpp"
#include "cart.hpp"

namespace binsleuth {

namespace {

void require_nonempty(const Dataset& data) {
    if (data.size() == 0 || data.classes.empty())
        throw Error(Errc::EmptyDataset, "training data is empty");
}

} // namespace

Model train_knn(const Dataset& data, int k) {
    require_nonempty(data);
    if (k < 1 || static_cast<std::size_t>(k) > data.size())
        throw Error(Errc::DomainError, "k must be in [1, instance count]");
    KnnModel knn;
    knn.k = k;
    knn.train_x = data.x;
    knn.train_y = data.y;
    return Model{std::move(knn), data.classes, data.dim};
}

Model train_gnb(const Dataset& data) {
    require_nonempty(data);
    const std::size_t n_classes = data.classes.size();
    const std::size_t dim = data.dim;

    std::vector<std::int64_t> counts(n_classes, 0);
    for (int y : data.y) ++counts[y];
    for (std::size_t c = 0; c < n_classes; ++c)
        if (counts[c] == 0)
            throw Error(Errc::EmptyDataset,
                        "class " + data.classes[c] + " has no training instances");

    GnbModel gnb;
    gnb.priors.resize(n_classes);
    gnb.means.assign(n_classes, std::vector<double>(dim, 0.0));
    gnb.vars.assign(n_classes, std::vector<double>(dim, 0.0));

    for (std::size_t i = 0; i < data.size(); ++i) {
        auto& mean = gnb.means[data.y[i]];
        for (std::size_t f = 0; f < dim; ++f) mean[f] += data.x[i][f];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        gnb.priors[c] = static_cast<double>(counts[c]) / static_cast<double>(data.size());
        for (std::size_t f = 0; f < dim; ++f) gnb.means[c][f] /= static_cast<double>(counts[c]);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int c = data.y[i];
        for (std::size_t f = 0; f < dim; ++f) {
            const double d = data.x[i][f] - gnb.means[c][f];
            gnb.vars[c][f] += d * d;
        }
    }
    for (std::size_t c = 0; c < n_classes; ++c)
        for (std::size_t f = 0; f < dim; ++f)
            gnb.vars[c][f] = std::max(gnb.vars[c][f] / static_cast<double>(counts[c]), 1e-9);

    return Model{std::move(gnb), data.classes, dim};
}

Model train_tree(const Dataset& data, int min_leaf) {
    require_nonempty(data);
    if (min_leaf < 1) throw Error(Errc::DomainError, "min_leaf must be >= 1");

    std::vector<std::uint32_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0u);
    const std::vector<double> cols = detail::to_columns(data, rows);

    detail::CartParams params;
    params.min_leaf = min_leaf;
    TreeModel tree = detail::build_cart(cols, data.size(), data.dim, data.y,
                                        static_cast<int>(data.classes.size()), params);
    return Model{std::move(tree), data.classes, data.dim};
}

Model train_forest(const Dataset& data, const ForestConfig& config) {
    require_nonempty(data);
    if (config.trees < 1) throw Error(Errc::DomainError, "forest needs at least one tree");

    const std::size_t n = data.size();
    const int mtry = config.mtry > 0
                         ? config.mtry
                         : std::max(1, static_cast<int>(std::floor(std::sqrt(
                               static_cast<double>(data.dim)))));

    ForestModel forest;
    forest.trees.reserve(config.trees);
    std::vector<int> boot_labels(n);
    for (int t = 0; t < config.trees; ++t) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> rows(n);
        if (config.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                rows[i] = static_cast<std::uint32_t>(rng.below(n));
        } else {
            std::iota(rows.begin(), rows.end(), 0u);
        }
        for (std::size_t i = 0; i < n; ++i) boot_labels[i] = data.y[rows[i]];
        const std::vector<double> cols = detail::to_columns(data, rows);

        detail::CartParams params;
        params.min_leaf = config.min_leaf;
        params.mtry = mtry;
        params.rng = &rng;
        forest.trees.push_back(detail::build_cart(cols, n, data.dim, boot_labels,
                                                  static_cast<int>(data.classes.size()), params));
    }
    return Model{std::move(forest), data.classes, data.dim};
}

double logreg_loss_grad(const Dataset& data, const std::vector<std::vector<double>>& weights,
                        const std::vector<double>& bias, double l2,
                        std::vector<std::vector<double>>* grad_w, std::vector<double>* grad_b) {
    const std::size_t n = data.size();
    const std::size_t n_classes = weights.size();
    const std::size_t dim = data.dim;

    if (grad_w) grad_w->assign(n_classes, std::vector<double>(dim, 0.0));
    if (grad_b) grad_b->assign(n_classes, 0.0);

    double loss = 0.0;
    std::vector<double> z(n_classes);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = data.x[i].data();
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double* w = weights[c].data();
            double acc = bias[c];
            for (std::size_t f = 0; f < dim; ++f) acc += w[f] * x[f];
            z[c] = acc;
        }
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double lse = zmax + std::log(sum);
        loss += lse - z[data.y[i]];

        if (grad_w || grad_b) {
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double p = std::exp(z[c] - lse);
                const double coef = p - (static_cast<int>(c) == data.y[i] ? 1.0 : 0.0);
                if (grad_b) (*grad_b)[c] += coef;
                if (grad_w) {
                    double* g = (*grad_w)[c].data();
                    for (std::size_t f = 0; f < dim; ++f) g[f] += coef * x[f];
                }
            }
        }
    }

    loss /= static_cast<double>(n);
    double penalty = 0.0;
    for (const auto& row : weights)
        for (double w : row) penalty += w * w;
    loss += 0.5 * l2 * penalty;

    if (grad_w || grad_b) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            if (grad_b) (*grad_b)[c] /= static_cast<double>(n);
            if (grad_w)
                for (std::size_t f = 0; f < dim; ++f)
                    (*grad_w)[c][f] =
                        (*grad_w)[c][f] / static_cast<double>(n) + l2 * weights[c][f];
        }
    }
    return loss;
}

Model train_logreg_traced(const Dataset& data, const LogRegConfig& config,
                          std::vector<double>* epoch_losses) {
    require_nonempty(data);
    if (config.l2 < 0 || config.epochs < 1 || config.learn_rate <= 0)
        throw Error(Errc::DomainError, "invalid logistic-regression hyperparameters");

    const std::size_t n_classes = data.classes.size();
    LogRegModel lr;
    lr.weights.assign(n_classes, std::vector<double>(data.dim, 0.0));
    lr.bias.assign(n_classes, 0.0);

    std::vector<std::vector<double>> grad_w;
    std::vector<double> grad_b;
    if (epoch_losses) epoch_losses->clear();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = logreg_loss_grad(data, lr.weights, lr.bias, config.l2, &grad_w, &grad_b);
        if (!std::isfinite(loss))
            throw Error(Errc::NonFinite, "training loss diverged; lower the learning rate");
        if (epoch_losses) epoch_losses->push_back(loss);
        for (std::size_t c = 0; c < n_classes; ++c) {
            lr.bias[c] -= config.learn_rate * grad_b[c];
            double* w = lr.weights[c].data();
            const double* g = grad_w[c].data();
            for (std::size_t f = 0; f < data.dim; ++f) w[f] -= config.learn_rate * g[f];
        }
    }
    const double final_loss = logreg_loss_grad(data, lr.weights, lr.bias, config.l2, nullptr, nullptr);
    if (!std::isfinite(final_loss))
        throw Error(Errc::NonFinite, "training loss diverged; lower the learning rate");

    return Model{std::move(lr), data.classes, data.dim};
}

Model train_logreg(const Dataset& data, const LogRegConfig& config) {
    return train_logreg_traced(data, config, nullptr);
}

} // namespace binsleuth
