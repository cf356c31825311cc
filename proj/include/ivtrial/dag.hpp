#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ivtrial {

struct DagNode {
  std::string name;
  bool latent = false;
};

struct DagEdge {
  std::string from;
  std::string to;
};

/// Immutable directed acyclic graph. Construction rejects cycles, self loops,
/// duplicate edges and edges to undeclared nodes.
class Dag {
 public:
  Dag(std::vector<DagNode> nodes, std::vector<DagEdge> edges);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<DagNode>& nodes() const noexcept { return nodes_; }
  const std::vector<DagEdge>& edges() const noexcept { return edges_; }

  /// Throws UnknownNode.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;
  bool has_edge(std::size_t from, std::size_t to) const noexcept;
  const std::vector<std::size_t>& children(std::size_t v) const noexcept { return children_[v]; }
  const std::vector<std::size_t>& parents(std::size_t v) const noexcept { return parents_[v]; }
  /// True when `d` is reachable from `v` by a directed path (v counts as its own descendant).
  bool is_descendant(std::size_t d, std::size_t v) const noexcept { return descendant_[v][d] != 0; }

  /// A directed path from -> ... -> to, if one exists.
  std::optional<std::vector<std::size_t>> directed_path(std::size_t from, std::size_t to) const;

 private:
  std::vector<DagNode> nodes_;
  std::vector<DagEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<char>> descendant_;
};

/// Parses the line format: `A -> B` edges, `latent U` and `node X`
/// declarations, `#` comments. Throws ParseError with the line number.
Dag parse_dag(std::string_view text);
Dag load_dag(const std::string& path);

enum class TripleRule { chain, fork, collider };
std::string_view to_string(TripleRule rule) noexcept;

struct PathVerdict {
  std::vector<std::string> nodes;
  std::vector<bool> forward;  // forward[k]: edge nodes[k] -> nodes[k+1]; otherwise nodes[k] <- nodes[k+1]
  std::vector<TripleRule> rules;  // one per interior node
  bool open = true;
  std::optional<std::string> blocking_node;
};

/// Renders a path as e.g. "R <- U -> Y".
std::string to_string(const PathVerdict& path);

struct SeparationResult {
  bool separated = true;
  std::vector<PathVerdict> paths;  // every simple path between the endpoints
};

/// d-separation by exhaustive enumeration of simple paths. Chains and forks
/// block when the middle node is conditioned on; a collider is open only when
/// it or one of its descendants is conditioned on.
SeparationResult d_separated(const Dag& g, std::string_view a, std::string_view b,
                             const std::vector<std::string>& conditioned);

/// Same verdict without building witnesses; index based.
bool is_d_separated(const Dag& g, std::size_t a, std::size_t b, const std::vector<char>& conditioned);

struct IvReport {
  bool iv1 = false;  // relevance: directed path instrument -> treatment
  bool iv2 = false;  // randomization: instrument independent of every confounder
  bool iv3 = false;  // exclusion: instrument independent of outcome given treatment and confounders
  std::optional<std::vector<std::string>> relevance_path;
  std::vector<PathVerdict> iv2_open_paths;
  std::vector<PathVerdict> iv3_open_paths;
};

IvReport check_iv(const Dag& g, std::string_view instrument, std::string_view treatment, std::string_view outcome,
                  const std::vector<std::string>& confounders);

}  // namespace ivtrial
