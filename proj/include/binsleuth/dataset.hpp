#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "binsleuth/features.hpp"

namespace binsleuth {

// Labeled training/evaluation data. `y` holds indices into `classes`;
// the class list is ordered by first appearance and drives every
// tie-break downstream.
struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::vector<std::string> classes;
    std::size_t dim = 0;

    std::size_t size() const { return x.size(); }
};

// Assembles a dataset from labeled feature vectors. Every instance must
// carry a label and all vectors must share one dimensionality.
Dataset make_dataset(const std::vector<FeatureVector>& instances);

// Densifies sparse 64k bigram vectors into a 65536-column dataset.
Dataset make_bigram_dataset(const std::vector<BigramVector>& instances);

// Column slice [begin, end) of every instance.
Dataset restrict_features(const Dataset& data, std::size_t begin, std::size_t end);

// Keeps only instances labeled with one of `keep`; the new class order is
// the order of `keep`.
Dataset restrict_classes(const Dataset& data, const std::vector<std::string>& keep);

// Instance subset by index, preserving the full class list.
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

} // namespace binsleuth
