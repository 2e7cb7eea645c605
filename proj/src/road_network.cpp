#include "ridepool/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "ridepool/rng.hpp"
#include "ridepool/text_io.hpp"

namespace ridepool {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RoadNetwork RoadNetwork::build(
    const std::vector<std::int64_t>& node_ids,
    const std::vector<std::tuple<std::int64_t, std::int64_t, double>>& edges,
    std::vector<LatLon> coords) {
  if (node_ids.empty()) throw std::invalid_argument("empty graph");
  RoadNetwork net;
  net.external_ids_ = node_ids;
  std::sort(net.external_ids_.begin(), net.external_ids_.end());
  net.external_ids_.erase(std::unique(net.external_ids_.begin(), net.external_ids_.end()),
                          net.external_ids_.end());
  if (!coords.empty()) {
    if (coords.size() != node_ids.size()) {
      throw std::invalid_argument("coords size mismatch");
    }
    // Reorder coords to match the sorted id order.
    std::vector<LatLon> sorted(net.external_ids_.size());
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
      auto it = std::lower_bound(net.external_ids_.begin(), net.external_ids_.end(), node_ids[i]);
      sorted[static_cast<std::size_t>(it - net.external_ids_.begin())] = coords[i];
    }
    net.coords_ = std::move(sorted);
  }
  net.adjacency_.assign(net.external_ids_.size(), {});
  for (const auto& [u, v, t] : edges) {
    if (t <= 0.0) throw std::invalid_argument("edge travel time must be > 0");
    const LocationId ui = net.internal_id(u);
    const LocationId vi = net.internal_id(v);
    if (ui == vi) throw std::invalid_argument("self-loop edge");
    net.adjacency_[ui].push_back({vi, t});
  }
  for (auto& adj : net.adjacency_) {
    std::sort(adj.begin(), adj.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  }
  net.compute_all_pairs();
  return net;
}

LocationId RoadNetwork::internal_id(std::int64_t ext) const {
  auto it = std::lower_bound(external_ids_.begin(), external_ids_.end(), ext);
  if (it == external_ids_.end() || *it != ext) {
    throw std::invalid_argument("unknown location id: " + std::to_string(ext));
  }
  return static_cast<LocationId>(it - external_ids_.begin());
}

bool RoadNetwork::has_external_id(std::int64_t ext) const {
  return std::binary_search(external_ids_.begin(), external_ids_.end(), ext);
}

int RoadNetwork::edge_count() const {
  int m = 0;
  for (const auto& adj : adjacency_) m += static_cast<int>(adj.size());
  return m;
}

void RoadNetwork::check_node(LocationId u) const {
  if (u < 0 || u >= size()) {
    throw std::invalid_argument("location id out of range: " + std::to_string(u));
  }
}

double RoadNetwork::travel_time(LocationId u, LocationId v) const {
  check_node(u);
  check_node(v);
  return dist_[static_cast<std::size_t>(u) * adjacency_.size() + v];
}

LocationId RoadNetwork::next_hop(LocationId u, LocationId v) const {
  check_node(u);
  check_node(v);
  return next_hop_[static_cast<std::size_t>(u) * adjacency_.size() + v];
}

double RoadNetwork::edge_seconds(LocationId u, LocationId v) const {
  check_node(u);
  for (const Edge& e : adjacency_[u]) {
    if (e.to == v) return e.seconds;
  }
  throw std::invalid_argument("no edge " + std::to_string(u) + " -> " + std::to_string(v));
}

void RoadNetwork::compute_all_pairs() {
  const std::size_t n = adjacency_.size();
  dist_.assign(n * n, kInf);
  next_hop_.assign(n * n, -1);
  // Repeated Dijkstra; desk-scale graphs are small enough for this.
  using Item = std::pair<double, LocationId>;
  std::vector<double> dist(n);
  std::vector<LocationId> parent(n);
  std::vector<LocationId> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    order.clear();
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[s] = 0.0;
    heap.push({0.0, static_cast<LocationId>(s)});
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      order.push_back(u);
      for (const Edge& e : adjacency_[u]) {
        const double nd = d + e.seconds;
        if (nd < dist[e.to]) {
          dist[e.to] = nd;
          parent[e.to] = u;
          heap.push({nd, e.to});
        }
      }
    }
    double* drow = dist_.data() + s * n;
    LocationId* hrow = next_hop_.data() + s * n;
    for (std::size_t v = 0; v < n; ++v) drow[v] = dist[v];
    // Nodes come off the heap in nondecreasing distance, so a node's parent
    // is always resolved before the node itself.
    for (LocationId v : order) {
      if (static_cast<std::size_t>(v) == s) {
        hrow[v] = static_cast<LocationId>(s);
      } else if (parent[v] == static_cast<LocationId>(s)) {
        hrow[v] = v;
      } else {
        hrow[v] = hrow[parent[v]];
      }
    }
  }
}

bool RoadNetwork::strongly_connected() const {
  for (double d : dist_) {
    if (d == kInf) return false;
  }
  return true;
}

namespace {

// Tarjan SCC, iterative.
std::vector<int> scc_components(const std::vector<std::vector<RoadNetwork::Edge>>& adj, int& count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> comp(n, -1), low(n, 0), num(n, -1);
  std::vector<int> stack, call_node, call_edge;
  std::vector<bool> on_stack(n, false);
  int index = 0;
  count = 0;
  for (int start = 0; start < n; ++start) {
    if (num[start] != -1) continue;
    call_node.push_back(start);
    call_edge.push_back(0);
    num[start] = low[start] = index++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!call_node.empty()) {
      const int u = call_node.back();
      int& ei = call_edge.back();
      if (ei < static_cast<int>(adj[u].size())) {
        const int v = adj[u][ei++].to;
        if (num[v] == -1) {
          num[v] = low[v] = index++;
          stack.push_back(v);
          on_stack[v] = true;
          call_node.push_back(v);
          call_edge.push_back(0);
        } else if (on_stack[v]) {
          low[u] = std::min(low[u], num[v]);
        }
      } else {
        if (low[u] == num[u]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = count;
            if (w == u) break;
          }
          ++count;
        }
        call_node.pop_back();
        call_edge.pop_back();
        if (!call_node.empty()) {
          const int p = call_node.back();
          low[p] = std::min(low[p], low[u]);
        }
      }
    }
  }
  return comp;
}

}  // namespace

RoadNetwork RoadNetwork::largest_scc() const {
  if (adjacency_.empty()) throw std::invalid_argument("empty graph");
  int count = 0;
  const std::vector<int> comp = scc_components(adjacency_, count);
  std::vector<int> sizes(count, 0);
  std::vector<std::int64_t> min_ext(count, std::numeric_limits<std::int64_t>::max());
  for (int u = 0; u < size(); ++u) {
    ++sizes[comp[u]];
    min_ext[comp[u]] = std::min(min_ext[comp[u]], external_ids_[u]);
  }
  int best = 0;
  for (int c = 1; c < count; ++c) {
    if (sizes[c] > sizes[best] || (sizes[c] == sizes[best] && min_ext[c] < min_ext[best])) {
      best = c;
    }
  }
  std::vector<std::int64_t> keep_ids;
  std::vector<LatLon> keep_coords;
  for (int u = 0; u < size(); ++u) {
    if (comp[u] == best) {
      keep_ids.push_back(external_ids_[u]);
      if (has_coords()) keep_coords.push_back(coords_[u]);
    }
  }
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> keep_edges;
  for (int u = 0; u < size(); ++u) {
    if (comp[u] != best) continue;
    for (const Edge& e : adjacency_[u]) {
      if (comp[e.to] == best) {
        keep_edges.emplace_back(external_ids_[u], external_ids_[e.to], e.seconds);
      }
    }
  }
  return build(keep_ids, keep_edges, std::move(keep_coords));
}

LocationId RoadNetwork::nearest_intersection(double lat, double lon) const {
  if (!has_coords()) throw std::invalid_argument("network has no coordinates");
  LocationId best = 0;
  double best_d2 = kInf;
  for (int u = 0; u < size(); ++u) {
    const double dlat = coords_[u].lat - lat;
    const double dlon = coords_[u].lon - lon;
    const double d2 = dlat * dlat + dlon * dlon;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<LocationId>(u);
    }
  }
  return best;
}

std::string RoadNetwork::serialize() const {
  std::ostringstream out;
  for (int u = 0; u < size(); ++u) {
    out << "node " << external_ids_[u];
    if (has_coords()) {
      out << ' ' << fmt_double(coords_[u].lat) << ' ' << fmt_double(coords_[u].lon);
    }
    out << '\n';
  }
  for (int u = 0; u < size(); ++u) {
    for (const Edge& e : adjacency_[u]) {
      out << "edge " << external_ids_[u] << ' ' << external_ids_[e.to] << ' '
          << fmt_double(e.seconds) << '\n';
    }
  }
  return out.str();
}

RoadNetwork RoadNetwork::deserialize(const std::string& text) {
  std::vector<std::int64_t> ids;
  std::vector<LatLon> coords;
  bool any_coords = false;
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> edges;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tok = split(t, ' ');
    std::vector<std::string> f;
    for (const auto& s : tok) {
      if (!s.empty()) f.push_back(s);
    }
    if (f.empty()) continue;
    if (f[0] == "node" && (f.size() == 2 || f.size() == 4)) {
      ids.push_back(parse_i64(f[1]));
      if (f.size() == 4) {
        coords.push_back({parse_double(f[2]), parse_double(f[3])});
        any_coords = true;
      } else {
        coords.push_back({});
      }
    } else if (f[0] == "edge" && f.size() == 4) {
      edges.emplace_back(parse_i64(f[1]), parse_i64(f[2]), parse_double(f[3]));
    } else {
      throw std::invalid_argument("bad graph line " + std::to_string(lineno) + ": " + line);
    }
  }
  if (!any_coords) coords.clear();
  return build(ids, edges, std::move(coords));
}

void RoadNetwork::save(const std::string& path) const { write_file(path, serialize()); }

RoadNetwork RoadNetwork::load(const std::string& path) { return deserialize(read_file(path)); }

double ClusterAssignment::cluster_distance(int k1, int k2) const {
  if (k1 < 0 || k1 >= num_clusters || k2 < 0 || k2 >= num_clusters) {
    throw std::invalid_argument("invalid cluster id");
  }
  return cluster_distance_[static_cast<std::size_t>(k1) * num_clusters + k2];
}

std::vector<LocationId> ClusterAssignment::members(int k) const {
  if (k < 0 || k >= num_clusters) throw std::invalid_argument("invalid cluster id");
  std::vector<LocationId> out;
  for (std::size_t u = 0; u < cluster_of.size(); ++u) {
    if (cluster_of[u] == k) out.push_back(static_cast<LocationId>(u));
  }
  return out;
}

std::string ClusterAssignment::serialize_csv(const RoadNetwork& net) const {
  std::ostringstream out;
  out << "location_id,cluster_id\n";
  for (std::size_t u = 0; u < cluster_of.size(); ++u) {
    out << net.external_id(static_cast<LocationId>(u)) << ',' << cluster_of[u] << '\n';
  }
  return out.str();
}

namespace {

std::vector<double> compute_cluster_distance_table(const std::vector<int>& cluster_of,
                                                   int k, const RoadNetwork& net) {
  std::vector<double> sum(static_cast<std::size_t>(k) * k, 0.0);
  std::vector<double> cnt(static_cast<std::size_t>(k) * k, 0.0);
  const int n = net.size();
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const std::size_t idx =
          static_cast<std::size_t>(cluster_of[u]) * k + cluster_of[v];
      sum[idx] += net.travel_time(u, v);
      cnt[idx] += 1.0;
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = cnt[i] > 0 ? sum[i] / cnt[i] : 0.0;
  return sum;
}

}  // namespace

ClusterAssignment ClusterAssignment::deserialize_csv(const std::string& text,
                                                     const RoadNetwork& net) {
  ClusterAssignment out;
  out.cluster_of.assign(net.size(), -1);
  std::istringstream in(text);
  std::string line;
  bool first = true;
  int max_k = -1;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    const auto f = split(line, ',');
    if (f.size() != 2) throw std::invalid_argument("bad cluster csv line: " + line);
    const LocationId u = net.internal_id(parse_i64(f[0]));
    const int c = static_cast<int>(parse_i64(f[1]));
    out.cluster_of[u] = c;
    max_k = std::max(max_k, c);
  }
  for (int c : out.cluster_of) {
    if (c < 0) throw std::invalid_argument("cluster csv does not cover all intersections");
  }
  out.num_clusters = max_k + 1;
  out.cluster_distance_ = compute_cluster_distance_table(out.cluster_of, out.num_clusters, net);
  // Medoids are not stored in the CSV; recompute per cluster as the member
  // minimizing total travel time from cluster members.
  out.medoids.assign(out.num_clusters, -1);
  for (int c = 0; c < out.num_clusters; ++c) {
    const auto mem = out.members(c);
    if (mem.empty()) throw std::invalid_argument("empty cluster in csv");
    double best = kInf;
    for (LocationId m : mem) {
      double s = 0.0;
      for (LocationId u : mem) s += net.travel_time(u, m);
      if (s < best) {
        best = s;
        out.medoids[c] = m;
      }
    }
  }
  return out;
}

namespace {

double assignment_objective(const std::vector<LocationId>& medoids, const RoadNetwork& net,
                            std::vector<int>* cluster_of_out) {
  const int n = net.size();
  const int k = static_cast<int>(medoids.size());
  double total = 0.0;
  if (cluster_of_out) cluster_of_out->assign(n, -1);
  for (int u = 0; u < n; ++u) {
    double best = kInf;
    int best_c = -1;
    for (int c = 0; c < k; ++c) {
      const double d = net.travel_time(u, medoids[c]);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    total += best;
    if (cluster_of_out) (*cluster_of_out)[u] = best_c;
  }
  return total;
}

}  // namespace

ClusterAssignment cluster_intersections(const RoadNetwork& net, int k, std::uint64_t seed) {
  const int n = net.size();
  if (k <= 0) throw std::invalid_argument("cluster count must be positive");
  if (k > n) throw std::invalid_argument("cluster count exceeds intersection count");

  // Farthest-first init from the smallest external id (internal id 0 after
  // sorting), symmetrized distance so one-way unreachability cannot pick a
  // stranded seed. Ties toward the smaller id.
  std::vector<LocationId> medoids;
  std::vector<bool> is_medoid(n, false);
  medoids.push_back(0);
  is_medoid[0] = true;
  std::vector<double> min_d(n, kInf);
  while (static_cast<int>(medoids.size()) < k) {
    const LocationId last = medoids.back();
    for (int u = 0; u < n; ++u) {
      const double d = 0.5 * (net.travel_time(last, u) + net.travel_time(u, last));
      min_d[u] = std::min(min_d[u], d);
    }
    int far = -1;
    double far_d = -1.0;
    for (int u = 0; u < n; ++u) {
      if (!is_medoid[u] && min_d[u] > far_d) {
        far_d = min_d[u];
        far = u;
      }
    }
    medoids.push_back(static_cast<LocationId>(far));
    is_medoid[far] = true;
  }

  // Seeded perturbation: each medoid may be replaced by a random non-medoid.
  Rng rng(seed);
  for (std::size_t i = 0; i < medoids.size(); ++i) {
    if (n > k && rng.uniform() < 0.2) {
      LocationId cand;
      do {
        cand = static_cast<LocationId>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      } while (is_medoid[cand]);
      is_medoid[medoids[i]] = false;
      medoids[i] = cand;
      is_medoid[cand] = true;
    }
  }

  // PAM swap descent to a local minimum; first-improvement in a fixed scan
  // order keeps the result deterministic.
  std::vector<int> cluster_of;
  double best_obj = assignment_objective(medoids, net, &cluster_of);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t mi = 0; mi < medoids.size() && !improved; ++mi) {
      for (int h = 0; h < n && !improved; ++h) {
        if (is_medoid[h]) continue;
        const LocationId old = medoids[mi];
        medoids[mi] = static_cast<LocationId>(h);
        std::vector<int> cand_assign;
        const double obj = assignment_objective(medoids, net, &cand_assign);
        if (obj + 1e-12 < best_obj) {
          best_obj = obj;
          is_medoid[old] = false;
          is_medoid[h] = true;
          cluster_of = std::move(cand_assign);
          improved = true;
        } else {
          medoids[mi] = old;
        }
      }
    }
  }

  // Nearest-medoid assignment can leave a cluster empty only if its medoid is
  // claimed by another at equal distance; assignment_objective ties toward the
  // lowest cluster index, and a medoid is at distance 0 of itself, so every
  // cluster keeps at least its own medoid unless two medoids coincide (which
  // construction forbids).
  ClusterAssignment out;
  out.num_clusters = k;
  out.cluster_of = std::move(cluster_of);
  out.medoids = medoids;
  // A medoid always belongs to its own cluster (distance 0, lowest index wins
  // among exact ties only when two medoids are 0 apart, excluded above).
  for (int c = 0; c < k; ++c) out.cluster_of[medoids[c]] = c;
  out.cluster_distance_ = compute_cluster_distance_table(out.cluster_of, k, net);
  return out;
}

double cluster_distance(const ClusterAssignment& assign, const RoadNetwork& net, int k1, int k2) {
  if (k1 < 0 || k1 >= assign.num_clusters || k2 < 0 || k2 >= assign.num_clusters) {
    throw std::invalid_argument("invalid cluster id");
  }
  const auto a = assign.members(k1);
  const auto b = assign.members(k2);
  double sum = 0.0;
  for (LocationId u : a) {
    for (LocationId v : b) sum += net.travel_time(u, v);
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

RoadNetwork generate_grid_city(int rows, int cols, double edge_time, std::uint64_t seed,
                               double jitter_frac) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("grid needs rows, cols >= 2");
  if (edge_time <= 0.0) throw std::invalid_argument("edge_time must be > 0");
  if (jitter_frac < 0.0 || jitter_frac >= 1.0) {
    throw std::invalid_argument("jitter_frac must be in [0, 1)");
  }
  Rng rng(seed);
  std::vector<std::int64_t> ids;
  std::vector<LatLon> coords;
  ids.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      ids.push_back(static_cast<std::int64_t>(r) * cols + c);
      coords.push_back({r * 0.001, c * 0.001});
    }
  }
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> edges;
  auto add_pair = [&](std::int64_t a, std::int64_t b) {
    const double ta = jitter_frac == 0.0
                          ? edge_time
                          : edge_time * (1.0 + rng.uniform(-jitter_frac, jitter_frac));
    const double tb = jitter_frac == 0.0
                          ? edge_time
                          : edge_time * (1.0 + rng.uniform(-jitter_frac, jitter_frac));
    edges.emplace_back(a, b, ta);
    edges.emplace_back(b, a, tb);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::int64_t id = static_cast<std::int64_t>(r) * cols + c;
      if (c + 1 < cols) add_pair(id, id + 1);
      if (r + 1 < rows) add_pair(id, id + cols);
    }
  }
  return RoadNetwork::build(ids, edges, std::move(coords));
}

}  // namespace ridepool
