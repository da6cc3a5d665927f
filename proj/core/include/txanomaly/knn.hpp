#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "txanomaly/dataset.hpp"

namespace txanomaly {

enum class Metric { kEuclidean, kManhattan };

struct Neighbor {
  std::size_t index;
  // Ranking distance: squared L2 for kEuclidean, L1 for kManhattan.
  double distance;
};

// Exact k-nearest-neighbour search over a fixed point set. Results are sorted
// by (distance, row index), so equal distances resolve to the lower row.
// The index does not own the points; the referenced matrix must outlive it.
class NeighborIndex {
 public:
  explicit NeighborIndex(MatrixView points, Metric metric = Metric::kEuclidean,
                         std::size_t leaf_size = 16);

  std::size_t size() const { return points_.rows(); }
  std::size_t dims() const { return points_.cols(); }
  Metric metric() const { return metric_; }
  MatrixView points() const { return points_; }

  // The k nearest rows to q. `exclude` removes one row (typically the query's
  // own row) from consideration. Throws InvalidArgument when fewer than k rows
  // are eligible.
  std::vector<Neighbor> query(std::span<const double> q, std::size_t k,
                              std::optional<std::size_t> exclude = std::nullopt) const;
  std::vector<std::size_t> query_indices(std::span<const double> q, std::size_t k,
                                         std::optional<std::size_t> exclude = std::nullopt) const;

  double distance(std::span<const double> a, std::span<const double> b) const;

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t left = 0;  // 0 marks a leaf; the root is never a child
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double box_bound(std::size_t node, std::span<const double> q) const;
  void search(std::size_t node, std::span<const double> q, std::size_t k,
              std::optional<std::size_t> exclude, std::vector<Neighbor>& heap) const;

  MatrixView points_;
  Metric metric_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;  // per node: D lows followed by D highs
};

}  // namespace txanomaly
