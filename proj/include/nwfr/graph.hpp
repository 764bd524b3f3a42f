#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nwfr {

struct Edge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

// Immutable weighted undirected graph. Edges are stored once per unordered
// pair with u < v; the adjacency list carries both directions.
class Network {
 public:
  Network() = default;
  Network(int n_vertices, std::vector<Edge> canonical_edges);

  int n_vertices() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::pair<int, double>>& neighbors(int u) const;
  std::optional<double> edge_weight(int u, int v) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
};

struct Partition {
  std::vector<int> labels;  // one label per vertex, contiguous 0..k-1
  int k = 0;
};

// groups[c] lists the vertices with label c, ascending
std::vector<std::vector<int>> partition_groups(const Partition& p);

struct WeightRule {
  enum class Kind { one, random, in_out } kind = Kind::one;
  double lo = 0.0, hi = 0.0;        // random range, or intra range for in_out
  double lo_out = 0.0, hi_out = 0.0;  // inter range for in_out

  static WeightRule One() { return {}; }
  static WeightRule Random(double lo = 0.1, double hi = 0.9) {
    return {Kind::random, lo, hi, 0.0, 0.0};
  }
  static WeightRule InOut(double ilo = 0.3, double ihi = 0.6,
                          double olo = 0.6, double ohi = 0.9) {
    return {Kind::in_out, ilo, ihi, olo, ohi};
  }
};

struct SbmSpec {
  std::vector<int> block_sizes;
  std::vector<double> intra_p;  // one per block, or a single broadcast value
  double inter_p = 0.0;
  WeightRule weight_rule = WeightRule::One();
};

Network build_graph(int n, const std::vector<Edge>& edge_list);

// All-pairs shortest path costs; +inf encodes unreachable. Sources run in
// parallel, one output row each.
Eigen::MatrixXd geodesic_matrix(const Network& g);

bool is_connected(const Network& g);

// Newman modularity of a labeling; unit weights unless use_edge_weights.
double modularity(const Network& g, const Partition& p,
                  bool use_edge_weights = false);

// Louvain with seed-shuffled sweep order and smallest-community-id ties.
// Stored weights are path costs, so modularity defaults to topology only.
Partition louvain_communities(const Network& g, std::uint64_t seed,
                              bool use_edge_weights = false);

// Weighted stochastic block model; resamples a disconnected draw up to 20
// times, then bridges remaining components with a minimum set of edges.
Network generate_wsbm(const SbmSpec& spec, std::uint64_t seed);

// Edge-list CSV with header "u,v,weight"; malformed rows are rejected with
// their line number.
std::vector<Edge> read_edge_csv(const std::string& path);
void write_edge_csv(const std::string& path, const Network& g);

}  // namespace nwfr
