#include "penumbra/domain.hpp"

#include "penumbra/error.hpp"

#include <cmath>

namespace penumbra {

Grid::Grid(DomainBox box, std::vector<int> cells) : box_(std::move(box)), cells_(std::move(cells)) {
  if (box_.size() != cells_.size()) throw Error("grid resolution arity does not match the domain box");
  for (int c : cells_) {
    if (c < 1) throw Error("grid resolution must be positive");
  }
}

Grid::Grid(DomainBox box, int cells_per_axis)
    : Grid(box, std::vector<int>(box.size(), cells_per_axis)) {}

int Grid::vertex_count(int axis) const {
  const auto& iv = box_[static_cast<std::size_t>(axis)];
  return iv.periodic ? cells(axis) : cells(axis) + 1;
}

double Grid::spacing(int axis) const { return box_[static_cast<std::size_t>(axis)].length() / cells(axis); }

double Grid::cell_diagonal() const {
  double s = 0.0;
  for (int a = 0; a < dims(); ++a) s += spacing(a) * spacing(a);
  return std::sqrt(s);
}

std::size_t Grid::total_vertices() const {
  std::size_t n = 1;
  for (int a = 0; a < dims(); ++a) n *= static_cast<std::size_t>(vertex_count(a));
  return n;
}

std::vector<int> Grid::unflatten(std::size_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(dims()));
  for (int a = dims() - 1; a >= 0; --a) {
    const auto vc = static_cast<std::size_t>(vertex_count(a));
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % vc);
    flat /= vc;
  }
  return idx;
}

std::size_t Grid::flatten(const std::vector<int>& index) const {
  std::size_t flat = 0;
  for (int a = 0; a < dims(); ++a) {
    flat = flat * static_cast<std::size_t>(vertex_count(a)) + static_cast<std::size_t>(index[static_cast<std::size_t>(a)]);
  }
  return flat;
}

Vec Grid::vertex(const std::vector<int>& index) const {
  Vec u(dims());
  for (int a = 0; a < dims(); ++a) u[a] = box_[static_cast<std::size_t>(a)].lo + spacing(a) * index[static_cast<std::size_t>(a)];
  return u;
}

std::vector<Vec> Grid::vertices() const {
  std::vector<Vec> out;
  out.reserve(total_vertices());
  for (std::size_t k = 0; k < total_vertices(); ++k) out.push_back(vertex(k));
  return out;
}

bool Grid::step(std::vector<int>& index, int axis, int delta) const {
  const auto a = static_cast<std::size_t>(axis);
  int next = index[a] + delta;
  const int vc = vertex_count(axis);
  if (box_[a].periodic) {
    next = ((next % vc) + vc) % vc;
  } else if (next < 0 || next >= vc) {
    return false;
  }
  index[a] = next;
  return true;
}

double param_distance(const DomainBox& box, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < box.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double d = box[k].periodic ? wrap_difference(a[i], b[i], box[k].length()) : a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vec wrap_into(const DomainBox& box, const Vec& u) {
  Vec w = u;
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (!box[k].periodic) continue;
    const auto i = static_cast<Eigen::Index>(k);
    const double len = box[k].length();
    double t = std::fmod(w[i] - box[k].lo, len);
    if (t < 0.0) t += len;
    w[i] = box[k].lo + t;
  }
  return w;
}

bool inside(const DomainBox& box, const Vec& u, double slack) {
  for (std::size_t k = 0; k < box.size(); ++k) {
    if (box[k].periodic) continue;
    const auto i = static_cast<Eigen::Index>(k);
    if (u[i] < box[k].lo - slack || u[i] > box[k].hi + slack) return false;
  }
  return true;
}

}  // namespace penumbra
