#include "txanomaly/knn.hpp"

#include <algorithm>
#include <cmath>

#include "txanomaly/error.hpp"

namespace txanomaly {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

}  // namespace

NeighborIndex::NeighborIndex(MatrixView points, Metric metric, std::size_t leaf_size)
    : points_(points), metric_(metric), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points_.rows());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
    build(0, order_.size());
  }
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end) {
  const std::size_t d = dims();
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  boxes_.resize(boxes_.size() + 2 * d);
  double* lo = boxes_.data() + id * 2 * d;
  double* hi = lo + d;
  for (std::size_t j = 0; j < d; ++j) {
    lo[j] = points_(order_[begin], j);
    hi[j] = lo[j];
  }
  for (std::size_t p = begin + 1; p < end; ++p) {
    const auto row = points_.row(order_[p]);
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double spread = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (hi[j] - lo[j] > spread) {
      spread = hi[j] - lo[j];
      split_dim = j;
    }
  }
  if (spread <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = points_(a, split_dim);
                     const double vb = points_(b, split_dim);
                     return va < vb || (va == vb && a < b);
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double NeighborIndex::distance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  if (metric_ == Metric::kEuclidean) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      acc += diff * diff;
    }
  } else {
    for (std::size_t j = 0; j < a.size(); ++j) acc += std::abs(a[j] - b[j]);
  }
  return acc;
}

// Lower bound on the distance from q to any point in the node's box. Each term
// is computed with the same operations as distance() on a point at the box
// face, so rounding keeps it <= the computed distance of every contained point.
double NeighborIndex::box_bound(std::size_t node, std::span<const double> q) const {
  const std::size_t d = dims();
  const double* lo = boxes_.data() + node * 2 * d;
  const double* hi = lo + d;
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double gap = 0.0;
    if (q[j] < lo[j]) {
      gap = lo[j] - q[j];
    } else if (q[j] > hi[j]) {
      gap = q[j] - hi[j];
    }
    acc += metric_ == Metric::kEuclidean ? gap * gap : gap;
  }
  return acc;
}

void NeighborIndex::search(std::size_t node, std::span<const double> q, std::size_t k,
                           std::optional<std::size_t> exclude,
                           std::vector<Neighbor>& heap) const {
  if (heap.size() == k && box_bound(node, q) > heap.front().distance) return;
  const Node& n = nodes_[node];
  if (n.left == 0) {
    for (std::size_t p = n.begin; p < n.end; ++p) {
      const std::size_t idx = order_[p];
      if (exclude && *exclude == idx) continue;
      const Neighbor cand{idx, distance(q, points_.row(idx))};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double bl = box_bound(n.left, q);
  const double br = box_bound(n.right, q);
  if (bl <= br) {
    search(n.left, q, k, exclude, heap);
    search(n.right, q, k, exclude, heap);
  } else {
    search(n.right, q, k, exclude, heap);
    search(n.left, q, k, exclude, heap);
  }
}

std::vector<Neighbor> NeighborIndex::query(std::span<const double> q, std::size_t k,
                                           std::optional<std::size_t> exclude) const {
  if (q.size() != dims()) throw InvalidArgument("query dimension mismatch");
  const std::size_t eligible =
      size() - ((exclude && *exclude < size()) ? std::size_t{1} : std::size_t{0});
  if (k > eligible) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(eligible) + " eligible points");
  }
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k);
  search(0, q, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<std::size_t> NeighborIndex::query_indices(std::span<const double> q, std::size_t k,
                                                      std::optional<std::size_t> exclude) const {
  const auto hits = query(q, k, exclude);
  std::vector<std::size_t> out(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) out[i] = hits[i].index;
  return out;
}

}  // namespace txanomaly
