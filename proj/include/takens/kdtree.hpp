#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace takens {

/// Exact kd-tree over a fixed point set in R^k.
///
/// Range queries return exactly the indices a linear scan returns (leaf
/// distances use the same expression as a scan; box pruning carries a small
/// relative slack so rounding can only admit extra nodes, never drop points).
class KdTree {
public:
  KdTree() = default;

  explicit KdTree(const std::vector<Eigen::VectorXd>& points) { build(points); }

  void build(const std::vector<Eigen::VectorXd>& points) {
    points_ = &points;
    const int n = static_cast<int>(points.size());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    if (n > 0) {
      dim_ = static_cast<int>(points[0].size());
      nodes_.reserve(2 * n / kLeafSize + 4);
      root_ = build_node(0, n);
    }
  }

  int size() const { return points_ ? static_cast<int>(points_->size()) : 0; }

  /// Indices with ||p_i - center|| < eps (strict), ascending.
  std::vector<int> radius_search(const Eigen::VectorXd& center, double eps) const {
    std::vector<int> out;
    if (size() == 0 || eps <= 0) return out;
    radius_rec(root_, center, eps * eps, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Index of the nearest point; exact ties resolved to the lowest index.
  int nearest(const Eigen::VectorXd& query) const {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    nearest_rec(root_, query, best, best_sq);
    return best;
  }

  /// The count smallest distances to query (ascending). Used for resolution
  /// floors; ties beyond position count-1 may be cut in arbitrary order.
  std::vector<double> knn_distances(const Eigen::VectorXd& query, int count) const {
    std::vector<double> heap;  // max-heap of squared distances
    knn_rec(root_, query, count, heap);
    std::sort(heap.begin(), heap.end());
    for (double& d : heap) d = std::sqrt(d);
    return heap;
  }

private:
  static constexpr int kLeafSize = 16;
  static constexpr double kBoxSlack = 1.0 + 1e-12;

  struct Node {
    double split = 0.0;
    int axis = -1;    // -1 marks a leaf
    int begin = 0;    // leaf: [begin, end) into order_
    int end = 0;
    int left = -1;
    int right = -1;
    Eigen::VectorXd lo;  // bounding box
    Eigen::VectorXd hi;
  };

  int build_node(int begin, int end) {
    Node node;
    node.lo = Eigen::VectorXd::Constant(dim_, std::numeric_limits<double>::infinity());
    node.hi = Eigen::VectorXd::Constant(dim_, -std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
      const Eigen::VectorXd& p = (*points_)[order_[i]];
      node.lo = node.lo.cwiseMin(p);
      node.hi = node.hi.cwiseMax(p);
    }
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    int axis = 0;
    (node.hi - node.lo).maxCoeff(&axis);
    int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       double pa = (*points_)[a][axis];
                       double pb = (*points_)[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = (*points_)[order_[mid]][axis];
    int left = build_node(begin, mid);
    int right = build_node(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  double box_sq_dist(const Node& node, const Eigen::VectorXd& q) const {
    double s = 0.0;
    for (int c = 0; c < dim_; ++c) {
      double d = 0.0;
      if (q[c] < node.lo[c]) d = node.lo[c] - q[c];
      else if (q[c] > node.hi[c]) d = q[c] - node.hi[c];
      s += d * d;
    }
    return s;
  }

  void radius_rec(int id, const Eigen::VectorXd& q, double eps_sq, std::vector<int>& out) const {
    const Node& node = nodes_[id];
    if (box_sq_dist(node, q) >= eps_sq * kBoxSlack) return;
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        int idx = order_[i];
        if (((*points_)[idx] - q).squaredNorm() < eps_sq) out.push_back(idx);
      }
      return;
    }
    radius_rec(node.left, q, eps_sq, out);
    radius_rec(node.right, q, eps_sq, out);
  }

  void nearest_rec(int id, const Eigen::VectorXd& q, int& best, double& best_sq) const {
    const Node& node = nodes_[id];
    if (box_sq_dist(node, q) > best_sq * kBoxSlack) return;
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        int idx = order_[i];
        double d = ((*points_)[idx] - q).squaredNorm();
        if (d < best_sq || (d == best_sq && idx < best)) {
          best_sq = d;
          best = idx;
        }
      }
      return;
    }
    // visit the child containing the query first
    int first = node.left;
    int second = node.right;
    if (q[node.axis] > node.split) std::swap(first, second);
    nearest_rec(first, q, best, best_sq);
    nearest_rec(second, q, best, best_sq);
  }

  void knn_rec(int id, const Eigen::VectorXd& q, int count, std::vector<double>& heap) const {
    const Node& node = nodes_[id];
    if (static_cast<int>(heap.size()) == count && box_sq_dist(node, q) > heap.front() * kBoxSlack)
      return;
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        double d = ((*points_)[order_[i]] - q).squaredNorm();
        if (static_cast<int>(heap.size()) < count) {
          heap.push_back(d);
          std::push_heap(heap.begin(), heap.end());
        } else if (d < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = d;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    int first = node.left;
    int second = node.right;
    if (q[node.axis] > node.split) std::swap(first, second);
    knn_rec(first, q, count, heap);
    knn_rec(second, q, count, heap);
  }

  const std::vector<Eigen::VectorXd>* points_ = nullptr;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = 0;
  int dim_ = 0;
};

}  // namespace takens
