#include "model_detail.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace xids {

int Tree::predict_row(const double* x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(node)];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].prediction;
}

int Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

namespace detail {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double purity = -1.0;  // sum_k c_k^2 / n over both children; larger is better
};

int majority(const std::vector<long>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Labels& y, int class_count, const TreeOptions& opt, Rng* rng)
        : x_(x), y_(y), classes_(class_count), opt_(opt), rng_(rng) {}

    Tree build(std::vector<Eigen::Index> rows) {
        Tree tree;
        struct Work {
            int node;
            std::vector<Eigen::Index> rows;
        };
        tree.nodes.emplace_back();
        std::vector<Work> stack;
        stack.push_back({0, std::move(rows)});
        while (!stack.empty()) {
            Work w = std::move(stack.back());
            stack.pop_back();
            std::vector<long> counts(static_cast<std::size_t>(classes_), 0);
            for (auto r : w.rows) ++counts[static_cast<std::size_t>(y_(r))];
            tree.nodes[static_cast<std::size_t>(w.node)].prediction = majority(counts);
            const bool pure = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }) <= 1;
            if (pure) continue;

            const Split s = best_split(w.rows, counts);
            if (s.feature < 0) continue;  // every row identical on every feature

            std::vector<Eigen::Index> left, right;
            for (auto r : w.rows) (x_(r, s.feature) <= s.threshold ? left : right).push_back(r);
            const int li = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
            node.feature = s.feature;
            node.threshold = s.threshold;
            node.left = li;
            node.right = li + 1;
            // Right first so the left subtree is expanded first.
            stack.push_back({li + 1, std::move(right)});
            stack.push_back({li, std::move(left)});
        }
        return tree;
    }

private:
    // Gini split search. Zero-gain splits are accepted: an impure node is only
    // a leaf when no feature varies across its rows.
    Split best_split(const std::vector<Eigen::Index>& rows, const std::vector<long>& parent) {
        const int d = static_cast<int>(x_.cols());
        Split best;
        if (opt_.max_features <= 0 || opt_.max_features >= d || rng_ == nullptr) {
            for (int f = 0; f < d; ++f) consider(rows, parent, f, best);
            return best;
        }
        std::vector<int> order(static_cast<std::size_t>(d));
        for (int f = 0; f < d; ++f) order[static_cast<std::size_t>(f)] = f;
        rng_->shuffle(order);
        std::vector<int> first(order.begin(), order.begin() + opt_.max_features);
        std::sort(first.begin(), first.end());
        for (int f : first) consider(rows, parent, f, best);
        for (std::size_t i = static_cast<std::size_t>(opt_.max_features); best.feature < 0 && i < order.size(); ++i)
            consider(rows, parent, order[i], best);
        return best;
    }

    void consider(const std::vector<Eigen::Index>& rows, const std::vector<long>& parent, int f, Split& best) {
        vals_.clear();
        for (auto r : rows) vals_.emplace_back(x_(r, f), y_(r));
        std::sort(vals_.begin(), vals_.end());
        if (vals_.front().first == vals_.back().first) return;

        left_.assign(static_cast<std::size_t>(classes_), 0);
        right_ = parent;
        long sq_left = 0;
        long sq_right = 0;
        for (long c : parent) sq_right += c * c;
        const long n = static_cast<long>(vals_.size());
        for (long i = 0; i + 1 < n; ++i) {
            const auto k = static_cast<std::size_t>(vals_[static_cast<std::size_t>(i)].second);
            sq_left += 2 * left_[k] + 1;
            sq_right -= 2 * right_[k] - 1;
            ++left_[k];
            --right_[k];
            const double v = vals_[static_cast<std::size_t>(i)].first;
            const double next = vals_[static_cast<std::size_t>(i + 1)].first;
            if (v == next) continue;
            const double purity = static_cast<double>(sq_left) / static_cast<double>(i + 1) +
                                  static_cast<double>(sq_right) / static_cast<double>(n - i - 1);
            if (purity > best.purity) {
                double mid = v + (next - v) / 2.0;
                if (!(mid < next)) mid = v;
                best = {f, mid, purity};
            }
        }
    }

    const Matrix& x_;
    const Labels& y_;
    int classes_;
    TreeOptions opt_;
    Rng* rng_;
    std::vector<std::pair<double, int>> vals_;
    std::vector<long> left_, right_;
};

}  // namespace

Tree build_tree(const Matrix& x, const Labels& y, int class_count, const std::vector<Eigen::Index>& rows,
                const TreeOptions& opt, Rng* rng) {
    if (rows.empty()) throw InputError("cannot grow a tree from zero rows");
    return TreeBuilder(x, y, class_count, opt, rng).build(rows);
}

ForestParams train_forest(const Matrix& x, const Labels& y, int class_count, const TrainConfig& cfg) {
    const int n_trees = std::max(1, cfg.forest_trees);
    const auto d = static_cast<int>(x.cols());
    TreeOptions opt;
    opt.max_features = cfg.forest_max_features > 0
                           ? std::min(cfg.forest_max_features, d)
                           : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

    ForestParams forest;
    forest.trees.resize(static_cast<std::size_t>(n_trees));
    // Each tree draws from its own seed-derived stream, so the forest does not
    // depend on how trees are spread over threads.
    auto grow = [&](int t) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
        if (cfg.forest_bootstrap) {
            for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(x.rows())));
            std::sort(rows.begin(), rows.end());
        } else {
            for (Eigen::Index i = 0; i < x.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
        }
        forest.trees[static_cast<std::size_t>(t)] = build_tree(x, y, class_count, rows, opt, &rng);
    };

    const int workers = std::max(1, std::min(cfg.threads, n_trees));
    if (workers == 1) {
        for (int t = 0; t < n_trees; ++t) grow(t);
        return forest;
    }
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int t = w; t < n_trees; t += workers) grow(t);
            });
    }
    return forest;
}

Labels predict_forest(const ForestParams& f, const Matrix& x, int class_count) {
    Labels out(x.rows());
    std::vector<int> votes(static_cast<std::size_t>(class_count));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        const double* row = x.row(r).data();
        for (const auto& t : f.trees) ++votes[static_cast<std::size_t>(t.predict_row(row))];
        out(r) = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    return out;
}

}  // namespace detail
}  // namespace xids
