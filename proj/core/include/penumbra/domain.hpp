#pragma once

#include "penumbra/linalg.hpp"

#include <vector>

namespace penumbra {

struct ParamInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;

  double length() const { return hi - lo; }
};

using DomainBox = std::vector<ParamInterval>;

/// Regular sampling of a domain box. Periodic axes carry `cells` vertices
/// (the last cell wraps to vertex 0); closed axes carry `cells + 1`.
class Grid {
 public:
  Grid(DomainBox box, std::vector<int> cells);
  Grid(DomainBox box, int cells_per_axis);

  int dims() const { return static_cast<int>(box_.size()); }
  const DomainBox& box() const { return box_; }
  int cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  int vertex_count(int axis) const;
  int cell_count(int axis) const { return cells(axis); }
  double spacing(int axis) const;
  double cell_diagonal() const;

  std::size_t total_vertices() const;
  /// Lexicographic order, axis 0 most significant.
  std::vector<int> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<int>& index) const;
  Vec vertex(const std::vector<int>& index) const;
  Vec vertex(std::size_t flat) const { return vertex(unflatten(flat)); }
  std::vector<Vec> vertices() const;

  /// Neighbor index along `axis` (+1/-1), wrapping on periodic axes; false when outside.
  bool step(std::vector<int>& index, int axis, int delta) const;

 private:
  DomainBox box_;
  std::vector<int> cells_;
};

/// Parameter-space distance honouring periodic axes.
double param_distance(const DomainBox& box, const Vec& a, const Vec& b);

/// Maps periodic coordinates back into [lo, hi).
Vec wrap_into(const DomainBox& box, const Vec& u);

bool inside(const DomainBox& box, const Vec& u, double slack = 1e-12);

}  // namespace penumbra
