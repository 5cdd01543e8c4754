#include "model_detail.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

namespace xids::detail {

namespace {

void predict_range(const KnnParams& p, const Matrix& x, int class_count, Eigen::Index begin, Eigen::Index end,
                   Labels& out) {
    const Eigen::Index n = p.points.rows();
    const auto k = static_cast<Eigen::Index>(std::min<Eigen::Index>(p.k, n));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    Eigen::VectorXd dist(n);
    std::vector<int> votes(static_cast<std::size_t>(class_count));
    for (Eigen::Index r = begin; r < end; ++r) {
        dist = (p.points.rowwise() - x.row(r)).rowwise().squaredNorm();
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        // (distance, row index) is a strict total order, so the k-set is unique.
        auto closer = [&](Eigen::Index a, Eigen::Index b) { return dist(a) != dist(b) ? dist(a) < dist(b) : a < b; };
        std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), closer);
        std::fill(votes.begin(), votes.end(), 0);
        for (Eigen::Index j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(p.labels(order[static_cast<std::size_t>(j)]))];
        out(r) = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
}

}  // namespace

Labels predict_knn(const KnnParams& p, const Matrix& x, int class_count, int threads) {
    Labels out(x.rows());
    const Eigen::Index rows = x.rows();
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(rows / 64) + 1));
    if (workers == 1) {
        predict_range(p, x, class_count, 0, rows, out);
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const Eigen::Index chunk = (rows + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const Eigen::Index b = w * chunk;
            const Eigen::Index e = std::min(rows, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, b, e] { predict_range(p, x, class_count, b, e, out); });
        }
    }
    return out;
}

}  // namespace xids::detail
