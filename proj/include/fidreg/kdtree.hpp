#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <numeric>
#include <queue>
#include <vector>

namespace fidreg {

/// Exact k-nearest-neighbour tree over fixed-dimension points.
///
/// Points are appended one at a time and attached below an existing leaf;
/// the tree is rebuilt balanced whenever its size has doubled since the
/// last build. Query results are ordered by (squared distance, id), so ties
/// resolve to the point inserted first and results equal a linear scan.
template <int Dim>
class KdTree {
public:
    using Point = Eigen::Matrix<double, Dim, 1>;

    struct Neighbor {
        std::size_t id;
        double squared_distance;
    };

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Point& point(std::size_t id) const { return points_[id]; }
    std::size_t rebuild_count() const noexcept { return rebuilds_; }

    /// Returns the id of the new point (ids are 0..size-1 in insertion order).
    std::size_t insert(const Point& p) {
        const std::size_t id = points_.size();
        points_.push_back(p);
        if (points_.size() >= 2 * built_size_ || root_ == kNone) {
            rebuild();
        } else {
            attach(id);
        }
        return id;
    }

    std::vector<Neighbor> nearest(const Point& query, std::size_t k) const {
        std::vector<Neighbor> out;
        if (k == 0 || root_ == kNone) {
            return out;
        }
        std::priority_queue<Neighbor, std::vector<Neighbor>, Worse> heap;
        search(root_, query, k, heap);
        out.resize(heap.size());
        for (std::size_t n = out.size(); n-- > 0;) {
            out[n] = heap.top();
            heap.pop();
        }
        return out;
    }

    static double squared_distance(const Point& a, const Point& b) {
        double sum = 0.0;
        for (int d = 0; d < Dim; ++d) {
            const double diff = a[d] - b[d];
            sum += diff * diff;
        }
        return sum;
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct Node {
        std::size_t id;
        int axis;
        std::size_t left = kNone;
        std::size_t right = kNone;
    };

    // Max-heap on (distance, id): top is the current worst kept neighbour.
    struct Worse {
        bool operator()(const Neighbor& a, const Neighbor& b) const {
            return a.squared_distance < b.squared_distance ||
                   (a.squared_distance == b.squared_distance && a.id < b.id);
        }
    };

    void rebuild() {
        nodes_.clear();
        nodes_.reserve(points_.size());
        std::vector<std::size_t> ids(points_.size());
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        root_ = build(ids, 0, ids.size(), 0);
        built_size_ = std::max<std::size_t>(points_.size(), 1);
        ++rebuilds_;
    }

    std::size_t build(std::vector<std::size_t>& ids, std::size_t lo, std::size_t hi, int depth) {
        if (lo >= hi) {
            return kNone;
        }
        const int axis = depth % Dim;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(ids.begin() + static_cast<std::ptrdiff_t>(lo), ids.begin() + static_cast<std::ptrdiff_t>(mid),
                         ids.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                             return points_[a][axis] < points_[b][axis] ||
                                    (points_[a][axis] == points_[b][axis] && a < b);
                         });
        const std::size_t node = nodes_.size();
        nodes_.push_back({ids[mid], axis});
        const std::size_t left = build(ids, lo, mid, depth + 1);
        const std::size_t right = build(ids, mid + 1, hi, depth + 1);
        nodes_[node].left = left;
        nodes_[node].right = right;
        return node;
    }

    void attach(std::size_t id) {
        const Point& p = points_[id];
        std::size_t cur = root_;
        while (true) {
            Node& n = nodes_[cur];
            const bool go_left = p[n.axis] < points_[n.id][n.axis];
            std::size_t& child = go_left ? n.left : n.right;
            if (child == kNone) {
                const int axis = (n.axis + 1) % Dim;
                child = nodes_.size();
                nodes_.push_back({id, axis});
                return;
            }
            cur = child;
        }
    }

    template <typename Heap>
    void search(std::size_t node, const Point& q, std::size_t k, Heap& heap) const {
        if (node == kNone) {
            return;
        }
        const Node& n = nodes_[node];
        const Neighbor candidate{n.id, squared_distance(points_[n.id], q)};
        if (heap.size() < k) {
            heap.push(candidate);
        } else if (Worse{}(candidate, heap.top())) {
            heap.pop();
            heap.push(candidate);
        }
        const double diff = q[n.axis] - points_[n.id][n.axis];
        const std::size_t near = diff < 0.0 ? n.left : n.right;
        const std::size_t far = diff < 0.0 ? n.right : n.left;
        search(near, q, k, heap);
        // Keep equal-distance branches: a tie may still win on id.
        if (heap.size() < k || diff * diff <= heap.top().squared_distance) {
            search(far, q, k, heap);
        }
    }

    std::vector<Point> points_;
    std::vector<Node> nodes_;
    std::size_t root_ = kNone;
    std::size_t built_size_ = 0;
    std::size_t rebuilds_ = 0;
};

}  // namespace fidreg
