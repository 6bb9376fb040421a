#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssf/geometry.hpp"

namespace ssf {

/// Static 3-d tree for nearest-neighbor queries over a fixed point set.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  struct Hit {
    std::size_t index = 0;
    double dist_sq = 0.0;
  };

  Hit nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_ for leaves
    std::int32_t left = -1, right = -1;
    int axis = -1;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);
  void search(std::int32_t node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace ssf
