#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "binsleuth/learners.hpp"
#include "binsleuth/rng.hpp"

namespace binsleuth::detail {

struct CartParams {
    int min_leaf = 2;
    int mtry = 0;       // 0 = consider every feature
    Rng* rng = nullptr; // required when mtry > 0
};

// Greedy binary CART on Gini impurity. Candidate thresholds are midpoints
// of consecutive distinct sorted values; a candidate is valid when both
// children keep at least min_leaf instances. The best split is accepted
// even at zero impurity gain (weighted child impurity never exceeds the
// parent's), so a node becomes a leaf only when it is pure, smaller than
// 2*min_leaf, or offers no valid candidate. Ties resolve to the smallest
// (feature, threshold).
//
// `columns` is column-major: columns[f * n + i] = feature f of instance i.
TreeModel build_cart(std::span<const double> columns, std::size_t n, std::size_t n_features,
                     std::span<const int> labels, int n_classes, const CartParams& params);

// Column-major copy of selected dataset rows (repeats allowed, e.g. for
// bootstrap resamples).
std::vector<double> to_columns(const Dataset& data, std::span<const std::uint32_t> rows);

} // namespace binsleuth::detail
