#include <variant>

#include <nlohmann/json.hpp>

#include "binsleuth/error.hpp"
#include "binsleuth/learners.hpp"

namespace binsleuth {

namespace {

using nlohmann::json;

json tree_to_json(const TreeModel& tree) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
        json j;
        j["feature"] = node.feature;
        if (node.feature >= 0) {
            j["threshold"] = node.threshold;
            j["left"] = node.left;
            j["right"] = node.right;
        } else {
            j["dist"] = node.dist;
        }
        nodes.push_back(std::move(j));
    }
    return json{{"nodes", std::move(nodes)}};
}

TreeModel tree_from_json(const json& j, std::size_t n_classes, std::size_t dim) {
    TreeModel tree;
    const auto& nodes = j.at("nodes");
    if (!nodes.is_array() || nodes.empty())
        throw Error(Errc::MalformedModel, "tree has no nodes");
    for (const auto& jn : nodes) {
        TreeNode node;
        node.feature = jn.at("feature").get<int>();
        if (node.feature >= 0) {
            if (static_cast<std::size_t>(node.feature) >= dim)
                throw Error(Errc::MalformedModel, "split feature out of range");
            node.threshold = jn.at("threshold").get<double>();
            node.left = jn.at("left").get<int>();
            node.right = jn.at("right").get<int>();
            if (node.left < 0 || node.right < 0 ||
                static_cast<std::size_t>(node.left) >= nodes.size() ||
                static_cast<std::size_t>(node.right) >= nodes.size())
                throw Error(Errc::MalformedModel, "child index out of range");
        } else {
            node.dist = jn.at("dist").get<std::vector<double>>();
            if (node.dist.size() != n_classes)
                throw Error(Errc::MalformedModel, "leaf distribution has wrong arity");
        }
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

json params_to_json(const Model& model) {
    if (const auto* knn = std::get_if<KnnModel>(&model.impl)) {
        return json{{"k", knn->k}, {"train_x", knn->train_x}, {"train_y", knn->train_y}};
    }
    if (const auto* gnb = std::get_if<GnbModel>(&model.impl)) {
        return json{{"priors", gnb->priors}, {"means", gnb->means}, {"vars", gnb->vars}};
    }
    if (const auto* tree = std::get_if<TreeModel>(&model.impl)) {
        return tree_to_json(*tree);
    }
    if (const auto* forest = std::get_if<ForestModel>(&model.impl)) {
        json trees = json::array();
        for (const TreeModel& tree : forest->trees) trees.push_back(tree_to_json(tree));
        return json{{"trees", std::move(trees)}};
    }
    const auto& lr = std::get<LogRegModel>(model.impl);
    return json{{"weights", lr.weights}, {"bias", lr.bias}};
}

const char* kind_name(const Model& model) {
    if (std::holds_alternative<KnnModel>(model.impl)) return "knn";
    if (std::holds_alternative<GnbModel>(model.impl)) return "gnb";
    if (std::holds_alternative<TreeModel>(model.impl)) return "tree";
    if (std::holds_alternative<ForestModel>(model.impl)) return "forest";
    return "logreg";
}

void check_matrix(const std::vector<std::vector<double>>& m, std::size_t rows, std::size_t cols,
                  const char* what) {
    if (m.size() != rows) throw Error(Errc::MalformedModel, std::string(what) + ": wrong row count");
    for (const auto& row : m)
        if (row.size() != cols)
            throw Error(Errc::MalformedModel, std::string(what) + ": wrong column count");
}

} // namespace

std::string save_model(const Model& model) {
    json j;
    j["format_version"] = 1;
    j["kind"] = kind_name(model);
    j["classes"] = model.classes;
    j["feature_dim"] = model.feature_dim;
    j["params"] = params_to_json(model);
    return j.dump(2) + "\n";
}

Model load_model(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedModel, std::string("invalid model JSON: ") + e.what());
    }

    try {
        if (!j.is_object()) throw Error(Errc::MalformedModel, "model file is not a JSON object");
        const int version = j.at("format_version").get<int>();
        if (version != 1)
            throw Error(Errc::UnsupportedVersion,
                        "model format_version " + std::to_string(version) + " is not supported");

        Model model;
        model.classes = j.at("classes").get<std::vector<std::string>>();
        model.feature_dim = j.at("feature_dim").get<std::size_t>();
        if (model.classes.empty() || model.feature_dim == 0)
            throw Error(Errc::MalformedModel, "model has no classes or zero feature dimension");
        const std::size_t n_classes = model.classes.size();

        const std::string kind = j.at("kind").get<std::string>();
        const json& params = j.at("params");
        if (kind == "knn") {
            KnnModel knn;
            knn.k = params.at("k").get<int>();
            knn.train_x = params.at("train_x").get<std::vector<std::vector<double>>>();
            knn.train_y = params.at("train_y").get<std::vector<int>>();
            if (knn.k < 1 || knn.train_x.size() != knn.train_y.size() || knn.train_x.empty() ||
                static_cast<std::size_t>(knn.k) > knn.train_x.size())
                throw Error(Errc::MalformedModel, "inconsistent knn parameters");
            check_matrix(knn.train_x, knn.train_x.size(), model.feature_dim, "train_x");
            for (int y : knn.train_y)
                if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
                    throw Error(Errc::MalformedModel, "train label out of range");
            model.impl = std::move(knn);
        } else if (kind == "gnb") {
            GnbModel gnb;
            gnb.priors = params.at("priors").get<std::vector<double>>();
            gnb.means = params.at("means").get<std::vector<std::vector<double>>>();
            gnb.vars = params.at("vars").get<std::vector<std::vector<double>>>();
            if (gnb.priors.size() != n_classes)
                throw Error(Errc::MalformedModel, "priors have wrong arity");
            check_matrix(gnb.means, n_classes, model.feature_dim, "means");
            check_matrix(gnb.vars, n_classes, model.feature_dim, "vars");
            for (const auto& row : gnb.vars)
                for (double v : row)
                    if (!(v > 0))
                        throw Error(Errc::MalformedModel, "variance must be positive");
            model.impl = std::move(gnb);
        } else if (kind == "tree") {
            model.impl = tree_from_json(params, n_classes, model.feature_dim);
        } else if (kind == "forest") {
            ForestModel forest;
            const auto& trees = params.at("trees");
            if (!trees.is_array() || trees.empty())
                throw Error(Errc::MalformedModel, "forest has no trees");
            for (const auto& jt : trees)
                forest.trees.push_back(tree_from_json(jt, n_classes, model.feature_dim));
            model.impl = std::move(forest);
        } else if (kind == "logreg") {
            LogRegModel lr;
            lr.weights = params.at("weights").get<std::vector<std::vector<double>>>();
            lr.bias = params.at("bias").get<std::vector<double>>();
            check_matrix(lr.weights, n_classes, model.feature_dim, "weights");
            if (lr.bias.size() != n_classes)
                throw Error(Errc::MalformedModel, "bias has wrong arity");
            model.impl = std::move(lr);
        } else {
            throw Error(Errc::MalformedModel, "unknown model kind: " + kind);
        }
        return model;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedModel, std::string("invalid model JSON: ") + e.what());
    }
}

} // namespace binsleuth
