#include "cart.hpp"

#include <algorithm>
#include <numeric>

#include "binsleuth/error.hpp"

namespace binsleuth::detail {

namespace {

struct Builder {
    std::span<const double> cols;
    std::size_t n;
    std::size_t n_features;
    std::span<const int> labels;
    int n_classes;
    CartParams params;

    // Per-feature permutations of instance positions, each slice [lo, hi)
    // holding one node's positions sorted by that feature's value.
    std::vector<std::uint32_t> order;
    std::vector<std::uint32_t> scratch;
    std::vector<std::uint8_t> side;
    std::vector<std::uint32_t> feature_ids;

    std::vector<TreeNode> nodes;

    double value(std::size_t feature, std::uint32_t pos) const {
        return cols[feature * n + pos];
    }

    int build(std::size_t lo, std::size_t hi) {
        const std::size_t count = hi - lo;
        std::vector<std::int64_t> class_counts(n_classes, 0);
        for (std::size_t p = lo; p < hi; ++p) ++class_counts[labels[order[p]]];

        const bool pure =
            std::count_if(class_counts.begin(), class_counts.end(),
                          [](std::int64_t c) { return c > 0; }) <= 1;

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = 0.0;
        bool have_best = false;

        if (!pure && count >= 2 * static_cast<std::size_t>(params.min_leaf)) {
            const std::size_t n_candidates =
                params.mtry > 0 ? std::min<std::size_t>(params.mtry, n_features) : n_features;
            for (std::size_t ci = 0; ci < n_candidates; ++ci) {
                std::size_t f;
                if (params.mtry > 0) {
                    const std::size_t j = ci + params.rng->below(n_features - ci);
                    std::swap(feature_ids[ci], feature_ids[j]);
                    f = feature_ids[ci];
                } else {
                    f = ci;
                }
                scan_feature(f, lo, hi, class_counts, have_best, best_feature, best_threshold,
                             best_score);
            }
        }

        if (!have_best) {
            TreeNode leaf;
            leaf.dist.resize(n_classes);
            for (int c = 0; c < n_classes; ++c)
                leaf.dist[c] = static_cast<double>(class_counts[c]) / static_cast<double>(count);
            nodes.push_back(std::move(leaf));
            return static_cast<int>(nodes.size() - 1);
        }

        // Mark sides off the chosen split, then stably partition every
        // feature's slice so child ranges stay value-sorted.
        std::size_t n_left = 0;
        for (std::size_t p = lo; p < hi; ++p) {
            const std::uint32_t pos = order[p];
            const bool left = value(static_cast<std::size_t>(best_feature), pos) < best_threshold;
            side[pos] = left ? 1 : 0;
            n_left += left ? 1 : 0;
        }
        for (std::size_t f = 0; f < n_features; ++f) {
            std::uint32_t* slice = order.data() + f * n;
            std::copy(slice + lo, slice + hi, scratch.begin());
            std::size_t wl = lo;
            std::size_t wr = lo + n_left;
            for (std::size_t i = 0; i < count; ++i) {
                const std::uint32_t pos = scratch[i];
                if (side[pos]) slice[wl++] = pos;
                else slice[wr++] = pos;
            }
        }

        const int node_index = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[node_index].feature = best_feature;
        nodes[node_index].threshold = best_threshold;
        const int left_index = build(lo, lo + n_left);
        const int right_index = build(lo + n_left, hi);
        nodes[node_index].left = left_index;
        nodes[node_index].right = right_index;
        return node_index;
    }

    void scan_feature(std::size_t f, std::size_t lo, std::size_t hi,
                      const std::vector<std::int64_t>& totals, bool& have_best,
                      int& best_feature, double& best_threshold, double& best_score) {
        const std::size_t count = hi - lo;
        const std::uint32_t* slice = order.data() + f * n;
        std::vector<std::int64_t> left(n_classes, 0);
        std::int64_t suml2 = 0;
        std::int64_t sumr2 = 0;
        for (std::int64_t c : totals) sumr2 += c * c;

        for (std::size_t p = lo; p + 1 < hi; ++p) {
            const std::uint32_t pos = slice[p];
            const int c = labels[pos];
            suml2 += 2 * left[c] + 1;
            const std::int64_t rc = totals[c] - left[c];
            sumr2 -= 2 * rc - 1;
            ++left[c];

            const std::size_t nl = p - lo + 1;
            const std::size_t nr = count - nl;
            if (nl < static_cast<std::size_t>(params.min_leaf) ||
                nr < static_cast<std::size_t>(params.min_leaf))
                continue;
            const double v = cols[f * n + pos];
            const double v_next = cols[f * n + slice[p + 1]];
            if (!(v < v_next)) continue;

            // count * weighted Gini, computed from integer counts so the
            // comparison is exactly reproducible.
            const double score =
                (static_cast<double>(nl) - static_cast<double>(suml2) / static_cast<double>(nl)) +
                (static_cast<double>(nr) - static_cast<double>(sumr2) / static_cast<double>(nr));
            const double threshold = (v + v_next) / 2.0;
            const bool better =
                !have_best || score < best_score ||
                (score == best_score &&
                 (static_cast<int>(f) < best_feature ||
                  (static_cast<int>(f) == best_feature && threshold < best_threshold)));
            if (better) {
                have_best = true;
                best_score = score;
                best_feature = static_cast<int>(f);
                best_threshold = threshold;
            }
        }
    }
};

} // namespace

TreeModel build_cart(std::span<const double> columns, std::size_t n, std::size_t n_features,
                     std::span<const int> labels, int n_classes, const CartParams& params) {
    if (n == 0) throw Error(Errc::EmptyDataset, "cannot grow a tree on no instances");
    if (params.mtry > 0 && params.rng == nullptr)
        throw Error(Errc::DomainError, "feature subsampling requires an RNG");

    Builder b;
    b.cols = columns;
    b.n = n;
    b.n_features = n_features;
    b.labels = labels;
    b.n_classes = n_classes;
    b.params = params;

    b.order.resize(n_features * n);
    for (std::size_t f = 0; f < n_features; ++f) {
        std::uint32_t* slice = b.order.data() + f * n;
        std::iota(slice, slice + n, 0u);
        const double* col = columns.data() + f * n;
        std::sort(slice, slice + n, [col](std::uint32_t a, std::uint32_t bpos) {
            if (col[a] != col[bpos]) return col[a] < col[bpos];
            return a < bpos;
        });
    }
    b.scratch.resize(n);
    b.side.resize(n);
    if (params.mtry > 0) {
        b.feature_ids.resize(n_features);
        std::iota(b.feature_ids.begin(), b.feature_ids.end(), 0u);
    }

    b.build(0, n);

    TreeModel model;
    model.nodes = std::move(b.nodes);
    return model;
}

std::vector<double> to_columns(const Dataset& data, std::span<const std::uint32_t> rows) {
    std::vector<double> cols(data.dim * rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::vector<double>& row = data.x[rows[i]];
        for (std::size_t f = 0; f < data.dim; ++f) cols[f * rows.size() + i] = row[f];
    }
    return cols;
}

} // namespace binsleuth::detail
