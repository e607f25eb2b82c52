#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "smfsync/linalg.hpp"

namespace smfsync::graph {

/// Directed edge: `to` receives information from `from` (a_{to,from} = weight).
struct Edge {
  Eigen::Index from;
  Eigen::Index to;
  double weight = 1.0;
};

/// Follower interaction graph with leader pinning gains.
/// a(i, j) > 0 means agent i listens to agent j.
class InteractionGraph {
 public:
  InteractionGraph(Mat adjacency, Vec pinning);
  static InteractionGraph from_edges(Eigen::Index n, const std::vector<Edge>& edges, Vec pinning);

  Eigen::Index size() const { return adjacency_.rows(); }
  const Mat& adjacency() const { return adjacency_; }
  const Vec& pinning() const { return pinning_; }
  double in_degree(Eigen::Index i) const { return adjacency_.row(i).sum(); }
  Vec in_degrees() const { return adjacency_.rowwise().sum(); }
  /// Indices j with a_ij > 0.
  std::vector<Eigen::Index> neighbors(Eigen::Index i) const;

 private:
  Mat adjacency_;
  Vec pinning_;
};

/// L = D - A.
Mat laplacian(const InteractionGraph& g);

struct GammaMatrix {
  Mat gamma;                     // (I + D + G)^{-1} (L + G)
  std::vector<Complex> eigenvalues;
};

GammaMatrix gamma(const InteractionGraph& g);

struct SpanningTree {
  bool exists = false;
  std::optional<Eigen::Index> root;
};

/// Assumption on synchronizability: with the leader added as node 0 and an
/// edge leader -> i for every g_i > 0, every follower must be reachable from
/// the leader. The reported root is the first pinned follower that reaches
/// all followers (else the first pinned follower).
SpanningTree has_pinned_spanning_tree(const InteractionGraph& g);

/// Robustness radius of the Riccati design; infinite when the design puts no
/// constraint on the circle.
struct Unconstrained {};
using Radius = std::variant<double, Unconstrained>;

/// All |lambda_i - c0| < r0 and r0 / c0 < r (c0 > 0 required).
bool circle_condition(const std::vector<Complex>& lambda, double c0, double r0, const Radius& r);

struct Circle {
  double c0;
  double r0;
};

/// Smallest-ratio circle C(c0, r0) with real center enclosing every lambda:
/// minimizes max_i |lambda_i - c0| / c0 over c0 > 0. The radius is inflated by
/// a relative 1e-9 so the enclosure is strict.
Circle smallest_ratio_circle(const std::vector<Complex>& lambda);

}  // namespace smfsync::graph
