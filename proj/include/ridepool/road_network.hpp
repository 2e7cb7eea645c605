#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ridepool {

using LocationId = std::int32_t;  // dense index into a RoadNetwork

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Weighted directed road graph with a precomputed all-pairs travel-time
/// table (seconds) and next-hop matrix for path walking. Immutable after
/// construction and safe to share across threads.
class RoadNetwork {
public:
  struct Edge {
    LocationId to;
    double seconds;
  };

  // Builds from external (possibly sparse) node ids. Edges reference external
  // ids. Travel times must be > 0.
  static RoadNetwork build(const std::vector<std::int64_t>& node_ids,
                           const std::vector<std::tuple<std::int64_t, std::int64_t, double>>& edges,
                           std::vector<LatLon> coords = {});

  int size() const { return static_cast<int>(adjacency_.size()); }
  std::int64_t external_id(LocationId u) const { return external_ids_[u]; }
  LocationId internal_id(std::int64_t ext) const;
  bool has_external_id(std::int64_t ext) const;

  const std::vector<Edge>& out_edges(LocationId u) const { return adjacency_[u]; }
  int edge_count() const;

  bool has_coords() const { return !coords_.empty(); }
  LatLon coord(LocationId u) const { return coords_[u]; }

  /// Shortest-path travel time in seconds. Throws on out-of-range ids.
  double travel_time(LocationId u, LocationId v) const;

  /// First node after `u` on a shortest path u -> v; u itself when u == v.
  LocationId next_hop(LocationId u, LocationId v) const;

  /// Direct edge weight u -> v; throws if the edge does not exist.
  double edge_seconds(LocationId u, LocationId v) const;

  bool strongly_connected() const;

  /// Induced subgraph on the largest strongly connected component.
  /// Ties between equal-sized components break toward the component
  /// containing the smallest external node id. Throws on an empty graph.
  RoadNetwork largest_scc() const;

  /// Nearest intersection to a coordinate by squared lat/lon distance,
  /// ties toward the smaller external id. Requires coordinates.
  LocationId nearest_intersection(double lat, double lon) const;

  // Line-oriented text format: `node <id> [<lat> <lon>]`, `edge <u> <v> <seconds>`.
  std::string serialize() const;
  static RoadNetwork deserialize(const std::string& text);
  void save(const std::string& path) const;
  static RoadNetwork load(const std::string& path);

private:
  void compute_all_pairs();
  void check_node(LocationId u) const;

  std::vector<std::vector<Edge>> adjacency_;
  std::vector<std::int64_t> external_ids_;         // sorted ascending
  std::vector<LatLon> coords_;                     // empty when absent
  std::vector<double> dist_;                       // n*n, row-major
  std::vector<LocationId> next_hop_;               // n*n, -1 = unreachable
};

/// Partition of intersections into K travel-time clusters plus the KxK
/// mean inter-cluster travel-time table.
struct ClusterAssignment {
  int num_clusters = 0;
  std::vector<int> cluster_of;            // by LocationId
  std::vector<LocationId> medoids;        // one per cluster
  std::vector<double> cluster_distance_;  // KxK, row-major, seconds

  int cluster(LocationId u) const { return cluster_of[u]; }
  double cluster_distance(int k1, int k2) const;
  std::vector<LocationId> members(int k) const;

  std::string serialize_csv(const RoadNetwork& net) const;
  static ClusterAssignment deserialize_csv(const std::string& text, const RoadNetwork& net);
};

/// K-medoids (PAM swap descent) on the all-pairs travel-time table.
/// Deterministic given seed: farthest-first init from the smallest external
/// id, then a seeded perturbation, then swap descent to a local minimum of
/// sum of travel times from each intersection to its cluster medoid.
ClusterAssignment cluster_intersections(const RoadNetwork& net, int k, std::uint64_t seed);

/// Mean travel time over all ordered pairs (u in k1, v in k2), u == v pairs
/// included when k1 == k2. Recomputed from the network (the cached table in
/// ClusterAssignment stores the same values).
double cluster_distance(const ClusterAssignment& assign, const RoadNetwork& net, int k1, int k2);

/// Bidirectional grid city with travel times jittered uniformly within
/// edge_time * (1 +- jitter_frac). rows, cols >= 2.
RoadNetwork generate_grid_city(int rows, int cols, double edge_time, std::uint64_t seed,
                               double jitter_frac = 0.2);

}  // namespace ridepool
