#include "nwfr/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "nwfr/errors.hpp"
#include "nwfr/parallel.hpp"
#include "nwfr/rng.hpp"

namespace nwfr {

Network::Network(int n_vertices, std::vector<Edge> canonical_edges)
    : n_(n_vertices), edges_(std::move(canonical_edges)), adj_(n_vertices) {
  for (const Edge& e : edges_) {
    adj_[e.u].emplace_back(e.v, e.w);
    adj_[e.v].emplace_back(e.u, e.w);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

const std::vector<std::pair<int, double>>& Network::neighbors(int u) const {
  if (u < 0 || u >= n_) fail(Errc::id_out_of_range, "vertex id out of range");
  return adj_[u];
}

std::optional<double> Network::edge_weight(int u, int v) const {
  if (u < 0 || u >= n_ || v < 0 || v >= n_)
    fail(Errc::id_out_of_range, "vertex id out of range");
  for (const auto& [nb, w] : adj_[u]) {
    if (nb == v) return w;
  }
  return std::nullopt;
}

std::vector<std::vector<int>> partition_groups(const Partition& p) {
  std::vector<std::vector<int>> groups(p.k);
  for (int i = 0; i < static_cast<int>(p.labels.size()); ++i) {
    groups[p.labels[i]].push_back(i);
  }
  return groups;
}

Network build_graph(int n, const std::vector<Edge>& edge_list) {
  if (n <= 0) fail(Errc::invalid_argument, "graph needs a positive vertex count");
  std::vector<Edge> canon;
  canon.reserve(edge_list.size());
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edge_list) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
      fail(Errc::id_out_of_range,
           "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
               ") references a vertex outside [0," + std::to_string(n) + ")");
    if (e.u == e.v)
      fail(Errc::self_loop, "self-loop at vertex " + std::to_string(e.u));
    if (!(e.w >= 0.0) || !std::isfinite(e.w))
      fail(Errc::negative_weight,
           "edge weight must be finite and nonnegative, got " +
               std::to_string(e.w));
    const auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second)
      fail(Errc::duplicate_edge, "repeated edge (" + std::to_string(key.first) +
                                     "," + std::to_string(key.second) + ")");
    canon.push_back({key.first, key.second, e.w});
  }
  std::sort(canon.begin(), canon.end(), [](const Edge& a, const Edge& b) {
    return std::make_pair(a.u, a.v) < std::make_pair(b.u, b.v);
  });
  return Network(n, std::move(canon));
}

Eigen::MatrixXd geodesic_matrix(const Network& g) {
  const int n = g.n_vertices();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t src) {
    std::vector<double> dist(n, inf);
    dist[src] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0.0, static_cast<int>(src)});
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[u]) continue;
      for (const auto& [v, w] : g.neighbors(u)) {
        const double cand = du + w;
        if (cand < dist[v]) {
          dist[v] = cand;
          heap.push({cand, v});
        }
      }
    }
    for (int j = 0; j < n; ++j) d(static_cast<int>(src), j) = dist[j];
  });
  return d;
}

bool is_connected(const Network& g) {
  const int n = g.n_vertices();
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& [v, w] : g.neighbors(u)) {
      (void)w;
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

double modularity(const Network& g, const Partition& p,
                  bool use_edge_weights) {
  const int n = g.n_vertices();
  if (static_cast<int>(p.labels.size()) != n)
    fail(Errc::dimension_mismatch, "partition does not cover the graph");
  std::vector<double> deg(n, 0.0);
  double m2 = 0.0;
  double intra = 0.0;
  for (const Edge& e : g.edges()) {
    const double w = use_edge_weights ? e.w : 1.0;
    deg[e.u] += w;
    deg[e.v] += w;
    m2 += 2.0 * w;
    if (p.labels[e.u] == p.labels[e.v]) intra += 2.0 * w;
  }
  if (m2 == 0.0) return 0.0;
  std::vector<double> tot(p.k, 0.0);
  for (int i = 0; i < n; ++i) tot[p.labels[i]] += deg[i];
  double q = intra / m2;
  for (double t : tot) q -= (t / m2) * (t / m2);
  return q;
}

namespace {

// aggregated multigraph level used inside Louvain
struct LevelGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> loop;  // self-loop weight, both directions counted
};

// One pass of local moves; returns the node->community assignment (not yet
// compacted) and whether any node moved.
bool local_moves(const LevelGraph& lg, Rng& rng, std::vector<int>& comm) {
  const int n = lg.n;
  std::vector<double> deg(n, 0.0);
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = lg.loop[i];
    for (const auto& [j, w] : lg.adj[i]) {
      (void)j;
      s += w;
    }
    deg[i] = s;
    m2 += s;
  }
  comm.assign(n, 0);
  for (int i = 0; i < n; ++i) comm[i] = i;
  if (m2 == 0.0) return false;

  std::vector<double> tot = deg;  // per-community degree totals
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<double> k_in(n, 0.0);  // scratch: weight from node to community
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const int i : order) {
      const int old = comm[i];
      tot[old] -= deg[i];
      std::vector<int> touched;
      for (const auto& [j, w] : lg.adj[i]) {
        const int c = comm[j];
        if (k_in[c] == 0.0) touched.push_back(c);
        k_in[c] += w;
      }
      if (k_in[old] == 0.0) touched.push_back(old);  // allow staying put
      std::sort(touched.begin(), touched.end());
      int best = old;
      double best_gain = k_in[old] - deg[i] * tot[old] / m2;
      for (const int c : touched) {
        const double gain = k_in[c] - deg[i] * tot[c] / m2;
        if (gain > best_gain ||
            (gain == best_gain && c < best)) {
          best = c;
          best_gain = gain;
        }
      }
      for (const int c : touched) k_in[c] = 0.0;
      tot[best] += deg[i];
      if (best != old) {
        comm[i] = best;
        moved = true;
        any_move = true;
      }
    }
  }
  return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<int>& comm,
                     int n_new) {
  LevelGraph out;
  out.n = n_new;
  out.adj.resize(n_new);
  out.loop.assign(n_new, 0.0);
  std::vector<std::map<int, double>> rows(n_new);
  for (int i = 0; i < lg.n; ++i) {
    const int ci = comm[i];
    out.loop[ci] += lg.loop[i];
    for (const auto& [j, w] : lg.adj[i]) {
      const int cj = comm[j];
      if (ci == cj) {
        out.loop[ci] += w;  // each direction visited once
      } else {
        rows[ci][cj] += w;
      }
    }
  }
  for (int c = 0; c < n_new; ++c) {
    out.adj[c].assign(rows[c].begin(), rows[c].end());
  }
  return out;
}

}  // namespace

Partition louvain_communities(const Network& g, std::uint64_t seed,
                              bool use_edge_weights) {
  const int n = g.n_vertices();
  Partition p;
  p.labels.assign(n, 0);
  for (int i = 0; i < n; ++i) p.labels[i] = i;
  p.k = n;
  if (n == 0) {
    p.k = 0;
    return p;
  }

  LevelGraph lg;
  lg.n = n;
  lg.adj.resize(n);
  lg.loop.assign(n, 0.0);
  for (const Edge& e : g.edges()) {
    const double w = use_edge_weights ? e.w : 1.0;
    lg.adj[e.u].emplace_back(e.v, w);
    lg.adj[e.v].emplace_back(e.u, w);
  }

  Rng rng(derive_seed(seed, 0x4c6f757661696eull));
  std::vector<int> node_of(n);  // current level node holding each vertex
  for (int i = 0; i < n; ++i) node_of[i] = i;

  while (true) {
    std::vector<int> comm;
    const bool improved = local_moves(lg, rng, comm);
    if (!improved) break;
    // compact community ids by first appearance over ascending node id
    std::vector<int> remap(lg.n, -1);
    int next = 0;
    for (int i = 0; i < lg.n; ++i) {
      if (remap[comm[i]] < 0) remap[comm[i]] = next++;
      comm[i] = remap[comm[i]];
    }
    for (int v = 0; v < n; ++v) node_of[v] = comm[node_of[v]];
    lg = aggregate(lg, comm, next);
    if (next == 1) break;
  }

  // contiguous labels by first appearance over ascending vertex id
  std::vector<int> remap(lg.n, -1);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    if (remap[node_of[v]] < 0) remap[node_of[v]] = next++;
    p.labels[v] = remap[node_of[v]];
  }
  p.k = next;
  return p;
}

namespace {

double draw_weight(const WeightRule& rule, bool intra, Rng& rng) {
  switch (rule.kind) {
    case WeightRule::Kind::one:
      return 1.0;
    case WeightRule::Kind::random:
      return rng.uniform(rule.lo, rule.hi);
    case WeightRule::Kind::in_out:
      return intra ? rng.uniform(rule.lo, rule.hi)
                   : rng.uniform(rule.lo_out, rule.hi_out);
  }
  return 1.0;
}

std::vector<int> component_labels(const Network& g, int& n_comp) {
  const int n = g.n_vertices();
  std::vector<int> comp(n, -1);
  n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = n_comp;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : g.neighbors(u)) {
        (void)w;
        if (comp[v] < 0) {
          comp[v] = n_comp;
          stack.push_back(v);
        }
      }
    }
    ++n_comp;
  }
  return comp;
}

}  // namespace

Network generate_wsbm(const SbmSpec& spec, std::uint64_t seed) {
  const int n_blocks = static_cast<int>(spec.block_sizes.size());
  if (n_blocks == 0) fail(Errc::invalid_argument, "block sizes must be nonempty");
  int n = 0;
  for (int s : spec.block_sizes) {
    if (s <= 0) fail(Errc::invalid_argument, "block sizes must be positive");
    n += s;
  }
  std::vector<double> intra(n_blocks);
  if (static_cast<int>(spec.intra_p.size()) == n_blocks) {
    intra = spec.intra_p;
  } else if (spec.intra_p.size() == 1) {
    intra.assign(n_blocks, spec.intra_p[0]);
  } else {
    fail(Errc::invalid_argument,
         "need one intra-block probability per block (or a single shared one)");
  }
  for (double pb : intra) {
    if (!(pb >= 0.0 && pb <= 1.0))
      fail(Errc::invalid_argument, "intra-block probability outside [0,1]");
  }
  if (!(spec.inter_p >= 0.0 && spec.inter_p <= 1.0))
    fail(Errc::invalid_argument, "cross-block probability outside [0,1]");
  if (spec.weight_rule.kind != WeightRule::Kind::one) {
    const auto& r = spec.weight_rule;
    const bool ok = r.lo > 0.0 && r.hi >= r.lo &&
                    (r.kind != WeightRule::Kind::in_out ||
                     (r.lo_out > 0.0 && r.hi_out >= r.lo_out));
    if (!ok) fail(Errc::invalid_argument, "weight ranges must be positive");
  }

  std::vector<int> block(n);
  {
    int v = 0;
    for (int b = 0; b < n_blocks; ++b) {
      for (int s = 0; s < spec.block_sizes[b]; ++s) block[v++] = b;
    }
  }

  const int max_attempts = 20;
  Network g;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, 0x7773626dull, attempt));
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const bool same = block[i] == block[j];
        const double p = same ? intra[block[i]] : spec.inter_p;
        if (rng.uniform() < p) {
          edges.push_back({i, j, draw_weight(spec.weight_rule, same, rng)});
        }
      }
    }
    g = build_graph(n, edges);
    if (is_connected(g)) return g;
    if (attempt == max_attempts - 1) {
      // bridge: star from the first component's representative
      int n_comp = 0;
      const auto comp = component_labels(g, n_comp);
      std::vector<int> rep(n_comp, -1);
      for (int v = 0; v < n; ++v) {
        if (rep[comp[v]] < 0) rep[comp[v]] = v;
      }
      for (int c = 1; c < n_comp; ++c) {
        const bool same = block[rep[0]] == block[rep[c]];
        edges.push_back(
            {rep[0], rep[c], draw_weight(spec.weight_rule, same, rng)});
      }
      g = build_graph(n, edges);
      if (!is_connected(g))
        fail(Errc::connectivity_failure,
             "could not repair a disconnected sample");
      return g;
    }
  }
  fail(Errc::connectivity_failure, "unreachable");
}

std::vector<Edge> read_edge_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::bad_format, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "u,v,weight")
    fail(Errc::bad_format, path + ": expected header 'u,v,weight'");
  std::vector<Edge> edges;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto reject = [&](const std::string& why) {
      fail(Errc::bad_format,
           path + ": line " + std::to_string(lineno) + ": " + why);
    };
    std::array<std::string, 3> field;
    std::size_t start = 0;
    int nf = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf >= 3) reject("too many fields");
        field[nf++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (nf != 3) reject("expected 3 fields");
    Edge e;
    const auto parse_int = [&](const std::string& s, int& out) {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || p != s.data() + s.size())
        reject("invalid vertex id '" + s + "'");
    };
    parse_int(field[0], e.u);
    parse_int(field[1], e.v);
    try {
      std::size_t pos = 0;
      e.w = std::stod(field[2], &pos);
      if (pos != field[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      reject("invalid weight '" + field[2] + "'");
    }
    edges.push_back(e);
  }
  return edges;
}

void write_edge_csv(const std::string& path, const Network& g) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_failure, "cannot write " + path);
  out << "u,v,weight\n";
  char buf[64];
  for (const Edge& e : g.edges()) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", e.u, e.v, e.w);
    out << buf;
  }
  if (!out) fail(Errc::io_failure, "failed writing " + path);
}

}  // namespace nwfr
