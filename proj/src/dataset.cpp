#include "binsleuth/dataset.hpp"

#include <algorithm>
#include <map>

#include "binsleuth/error.hpp"

namespace binsleuth {

namespace {

int class_index(Dataset& data, const std::string& label) {
    for (std::size_t i = 0; i < data.classes.size(); ++i)
        if (data.classes[i] == label) return static_cast<int>(i);
    data.classes.push_back(label);
    return static_cast<int>(data.classes.size() - 1);
}

} // namespace

Dataset make_dataset(const std::vector<FeatureVector>& instances) {
    Dataset data;
    for (const FeatureVector& fv : instances) {
        if (!fv.label)
            throw Error(Errc::DomainError, "unlabeled instance " + fv.source_id);
        if (data.x.empty()) data.dim = fv.values.size();
        if (fv.values.size() != data.dim)
            throw Error(Errc::DimensionMismatch, "instance " + fv.source_id + " has " +
                                                     std::to_string(fv.values.size()) +
                                                     " features, expected " +
                                                     std::to_string(data.dim));
        data.x.push_back(fv.values);
        data.y.push_back(class_index(data, *fv.label));
    }
    return data;
}

Dataset make_bigram_dataset(const std::vector<BigramVector>& instances) {
    Dataset data;
    data.dim = 65536;
    for (const BigramVector& bv : instances) {
        if (!bv.label)
            throw Error(Errc::DomainError, "unlabeled instance " + bv.source_id);
        std::vector<double> row(65536, 0.0);
        for (const auto& [key, value] : bv.counts) row[key] = value;
        data.x.push_back(std::move(row));
        data.y.push_back(class_index(data, *bv.label));
    }
    return data;
}

Dataset restrict_features(const Dataset& data, std::size_t begin, std::size_t end) {
    if (begin > end || end > data.dim)
        throw Error(Errc::DomainError, "feature range out of bounds");
    Dataset out;
    out.classes = data.classes;
    out.y = data.y;
    out.dim = end - begin;
    out.x.reserve(data.x.size());
    for (const auto& row : data.x)
        out.x.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(begin),
                           row.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

Dataset restrict_classes(const Dataset& data, const std::vector<std::string>& keep) {
    Dataset out;
    out.classes = keep;
    out.dim = data.dim;
    std::map<int, int> remap;
    for (std::size_t i = 0; i < data.classes.size(); ++i) {
        auto it = std::find(keep.begin(), keep.end(), data.classes[i]);
        if (it != keep.end())
            remap[static_cast<int>(i)] = static_cast<int>(it - keep.begin());
    }
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        auto it = remap.find(data.y[i]);
        if (it == remap.end()) continue;
        out.x.push_back(data.x[i]);
        out.y.push_back(it->second);
    }
    return out;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
    Dataset out;
    out.classes = data.classes;
    out.dim = data.dim;
    out.x.reserve(indices.size());
    for (std::size_t idx : indices) {
        out.x.push_back(data.x[idx]);
        out.y.push_back(data.y[idx]);
    }
    return out;
}

} // namespace binsleuth
