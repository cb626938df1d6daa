#include <cmath>
#include <cstdlib>
#include <set>
#include <string>

#include "binsleuth/error.hpp"
#include "binsleuth/learners.hpp"

namespace binsleuth {

namespace {

double parse_number(const std::string& text, const std::string& key) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end != begin + text.size() || text.empty() || !std::isfinite(value))
        throw Error(Errc::DomainError, "bad value for " + key + ": " + text);
    return value;
}

int as_positive_int(const ModelSpec& spec, const std::string& key, int fallback) {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) return fallback;
    const double v = it->second;
    if (v < 1 || v != std::floor(v) || v > 1e9)
        throw Error(Errc::DomainError, key + " must be a positive integer");
    return static_cast<int>(v);
}

void check_keys(const ModelSpec& spec, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : spec.params)
        if (!allowed.count(key))
            throw Error(Errc::DomainError,
                        "unknown parameter " + key + " for model " + spec.kind);
}

} // namespace

ModelSpec parse_model_spec(const std::string& text) {
    ModelSpec spec;
    spec.display = text;
    const std::size_t colon = text.find(':');
    spec.kind = text.substr(0, colon);
    if (spec.kind != "knn" && spec.kind != "gnb" && spec.kind != "tree" &&
        spec.kind != "forest" && spec.kind != "logreg")
        throw Error(Errc::DomainError, "unknown model kind: " + spec.kind);

    if (colon != std::string::npos) {
        std::string rest = text.substr(colon + 1);
        if (rest.empty()) throw Error(Errc::DomainError, "empty parameter list in " + text);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            std::size_t comma = rest.find(',', pos);
            if (comma == std::string::npos) comma = rest.size();
            const std::string item = rest.substr(pos, comma - pos);
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos || eq == 0)
                throw Error(Errc::DomainError, "expected key=value, got: " + item);
            const std::string key = item.substr(0, eq);
            if (spec.params.count(key))
                throw Error(Errc::DomainError, "duplicate parameter " + key);
            spec.params[key] = parse_number(item.substr(eq + 1), key);
            pos = comma + 1;
        }
    }
    return spec;
}

Model train_model(const Dataset& data, const ModelSpec& spec, std::uint64_t seed) {
    if (spec.kind == "knn") {
        check_keys(spec, {"k"});
        return train_knn(data, as_positive_int(spec, "k", 1));
    }
    if (spec.kind == "gnb") {
        check_keys(spec, {});
        return train_gnb(data);
    }
    if (spec.kind == "tree") {
        check_keys(spec, {"min_leaf"});
        return train_tree(data, as_positive_int(spec, "min_leaf", 2));
    }
    if (spec.kind == "forest") {
        check_keys(spec, {"trees", "min_leaf", "mtry"});
        ForestConfig config;
        config.trees = as_positive_int(spec, "trees", config.trees);
        config.min_leaf = as_positive_int(spec, "min_leaf", config.min_leaf);
        config.mtry = as_positive_int(spec, "mtry", 0);
        config.seed = seed;
        return train_forest(data, config);
    }
    check_keys(spec, {"l2", "epochs", "learn_rate"});
    LogRegConfig config;
    if (auto it = spec.params.find("l2"); it != spec.params.end()) {
        if (it->second < 0) throw Error(Errc::DomainError, "l2 must be nonnegative");
        config.l2 = it->second;
    }
    config.epochs = as_positive_int(spec, "epochs", config.epochs);
    if (auto it = spec.params.find("learn_rate"); it != spec.params.end()) {
        if (it->second <= 0) throw Error(Errc::DomainError, "learn_rate must be positive");
        config.learn_rate = it->second;
    }
    return train_logreg(data, config);
}

} // namespace binsleuth
