#include "smfsync/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "smfsync/errors.hpp"

namespace smfsync::graph {

InteractionGraph::InteractionGraph(Mat adjacency, Vec pinning)
    : adjacency_(std::move(adjacency)), pinning_(std::move(pinning)) {
  const Eigen::Index n = adjacency_.rows();
  if (adjacency_.cols() != n) throw DimensionMismatch("adjacency must be square");
  if (pinning_.size() != n) throw DimensionMismatch("pinning vector must have one gain per agent");
  if (!linalg::all_finite(adjacency_) || !pinning_.allFinite()) throw ValidationError("non-finite graph weight");
  if ((adjacency_.array() < 0.0).any()) throw ValidationError("adjacency weights must be nonnegative");
  if ((pinning_.array() < 0.0).any()) throw ValidationError("pinning gains must be nonnegative");
  for (Eigen::Index i = 0; i < n; ++i)
    if (adjacency_(i, i) != 0.0) throw ValidationError("self-loop at agent " + std::to_string(i + 1));
}

InteractionGraph InteractionGraph::from_edges(Eigen::Index n, const std::vector<Edge>& edges, Vec pinning) {
  Mat a = Mat::Zero(n, n);
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw ValidationError("edge endpoint outside 0.." + std::to_string(n - 1));
    if (e.from == e.to) throw ValidationError("self-loop at agent " + std::to_string(e.from + 1));
    a(e.to, e.from) += e.weight;
  }
  return InteractionGraph(std::move(a), std::move(pinning));
}

std::vector<Eigen::Index> InteractionGraph::neighbors(Eigen::Index i) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < size(); ++j)
    if (adjacency_(i, j) > 0.0) out.push_back(j);
  return out;
}

Mat laplacian(const InteractionGraph& g) {
  Mat l = -g.adjacency();
  l.diagonal() += g.in_degrees();
  return l;
}

GammaMatrix gamma(const InteractionGraph& g) {
  const Vec scale = (1.0 + g.in_degrees().array() + g.pinning().array()).inverse().matrix();
  Mat lg = laplacian(g);
  lg.diagonal() += g.pinning();
  GammaMatrix out;
  out.gamma = scale.asDiagonal() * lg;
  out.eigenvalues = linalg::eigenvalues_general(out.gamma);
  return out;
}

namespace {

// Nodes reachable from `start` following information flow j -> i (a_ij > 0).
std::vector<bool> reachable_from(const Mat& a, Eigen::Index start) {
  const Eigen::Index n = a.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{start};
  seen[static_cast<std::size_t>(start)] = true;
  while (!stack.empty()) {
    const Eigen::Index j = stack.back();
    stack.pop_back();
    for (Eigen::Index i = 0; i < n; ++i)
      if (a(i, j) > 0.0 && !seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = true;
        stack.push_back(i);
      }
  }
  return seen;
}

}  // namespace

SpanningTree has_pinned_spanning_tree(const InteractionGraph& g) {
  const Eigen::Index n = g.size();
  // Node 0 is the leader; follower i becomes node i + 1.
  Mat aug = Mat::Zero(n + 1, n + 1);
  aug.bottomRightCorner(n, n) = g.adjacency();
  for (Eigen::Index i = 0; i < n; ++i) aug(i + 1, 0) = g.pinning()(i);

  SpanningTree out;
  const auto from_leader = reachable_from(aug, 0);
  out.exists = std::all_of(from_leader.begin(), from_leader.end(), [](bool b) { return b; });
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(g.pinning()(i) > 0.0)) continue;
    if (!out.root) out.root = i;
    const auto r = reachable_from(g.adjacency(), i);
    if (std::all_of(r.begin(), r.end(), [](bool b) { return b; })) {
      out.root = i;
      break;
    }
  }
  return out;
}

bool circle_condition(const std::vector<Complex>& lambda, double c0, double r0, const Radius& r) {
  if (!(c0 > 0.0) || !(r0 > 0.0)) return false;
  for (const Complex& l : lambda)
    if (!(std::abs(l - c0) < r0)) return false;
  if (const double* radius = std::get_if<double>(&r)) return r0 / c0 < *radius;
  return true;
}

Circle smallest_ratio_circle(const std::vector<Complex>& lambda) {
  if (lambda.empty()) throw std::invalid_argument("smallest_ratio_circle: no eigenvalues");
  // With t = 1/c0 the ratio is max_i |lambda_i t - 1|, convex in t; its
  // minimizer lies between the per-eigenvalue minimizers Re(l)/|l|^2.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Complex& l : lambda) {
    const double m2 = std::norm(l);
    if (m2 == 0.0) continue;
    const double t = l.real() / m2;
    if (t > 0.0) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!(hi > 0.0)) throw std::invalid_argument("smallest_ratio_circle: no eigenvalue with positive real part");
  auto ratio = [&](double t) {
    double worst = 0.0;
    for (const Complex& l : lambda) worst = std::max(worst, std::abs(l * t - 1.0));
    return worst;
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = ratio(x1), f2 = ratio(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = ratio(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = ratio(x2);
    }
  }
  const double c0 = 2.0 / (a + b);
  double r0 = 0.0;
  for (const Complex& l : lambda) r0 = std::max(r0, std::abs(l - c0));
  return {c0, std::max(r0 * (1.0 + 1e-9), 1e-12 * c0)};
}

}  // namespace smfsync::graph
