#include "ivtrial/dag.hpp"

#include "ivtrial/error.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ivtrial {

Dag::Dag(std::vector<DagNode> nodes, std::vector<DagEdge> edges) : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name.empty()) throw Error(ErrorKind::InvalidGraph, "empty node name");
    if (!index_.emplace(nodes_[i].name, i).second) {
      throw Error(ErrorKind::InvalidGraph, "duplicate node '" + nodes_[i].name + "'");
    }
  }
  const std::size_t n = nodes_.size();
  children_.assign(n, {});
  parents_.assign(n, {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : edges_) {
    const auto u = index_of(e.from);
    const auto v = index_of(e.to);
    if (u == v) throw Error(ErrorKind::InvalidGraph, "self loop on '" + e.from + "'");
    if (!seen.emplace(u, v).second) throw Error(ErrorKind::InvalidGraph, "duplicate edge " + e.from + " -> " + e.to);
    children_[u].push_back(v);
    parents_[v].push_back(u);
  }

  // Kahn's algorithm; anything left over sits on a cycle.
  std::vector<std::size_t> indegree(n);
  for (std::size_t v = 0; v < n; ++v) indegree[v] = parents_[v].size();
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (auto c : children_[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (visited != n) {
    std::string members;
    for (std::size_t v = 0; v < n; ++v) {
      if (indegree[v] > 0) members += (members.empty() ? "" : ", ") + nodes_[v].name;
    }
    throw Error(ErrorKind::InvalidGraph, "directed cycle through {" + members + "}");
  }

  descendant_.assign(n, std::vector<char>(n, 0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    descendant_[s][s] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto c : children_[v]) {
        if (!descendant_[s][c]) {
          descendant_[s][c] = 1;
          stack.push_back(c);
        }
      }
    }
  }
}

std::size_t Dag::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error(ErrorKind::UnknownNode, "no node named '" + std::string(name) + "'");
  return it->second;
}

bool Dag::contains(std::string_view name) const noexcept { return index_.count(std::string(name)) != 0; }

bool Dag::has_edge(std::size_t from, std::size_t to) const noexcept {
  const auto& c = children_[from];
  return std::find(c.begin(), c.end(), to) != c.end();
}

std::optional<std::vector<std::size_t>> Dag::directed_path(std::size_t from, std::size_t to) const {
  if (!is_descendant(to, from)) return std::nullopt;
  // Walk forward through children that still reach `to`.
  std::vector<std::size_t> path{from};
  auto v = from;
  while (v != to) {
    for (auto c : children_[v]) {
      if (is_descendant(to, c)) {
        v = c;
        break;
      }
    }
    path.push_back(v);
  }
  return path;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

Dag parse_dag(std::string_view text) {
  std::vector<DagNode> nodes;
  std::vector<DagEdge> edges;
  auto declare = [&](const std::string& name) -> DagNode& {
    for (auto& node : nodes) {
      if (node.name == name) return node;
    }
    nodes.push_back({name, false});
    return nodes.back();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + why + " in '" + line + "'");
    };

    if (line.find("->") != std::string::npos) {
      std::vector<std::string> parts;
      std::size_t start = 0;
      while (true) {
        const auto arrow = line.find("->", start);
        parts.push_back(trim(std::string_view(line).substr(start, arrow == std::string::npos ? std::string::npos
                                                                                             : arrow - start)));
        if (arrow == std::string::npos) break;
        start = arrow + 2;
      }
      for (const auto& p : parts) {
        if (!valid_name(p)) fail("malformed edge");
      }
      for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        declare(parts[k]);
        declare(parts[k + 1]);
        for (const auto& e : edges) {
          if (e.from == parts[k] && e.to == parts[k + 1]) fail("duplicate edge");
        }
        edges.push_back({parts[k], parts[k + 1]});
      }
    } else {
      std::istringstream words(line);
      std::string keyword, name, extra;
      words >> keyword >> name;
      if (name.empty() || (words >> extra)) fail("expected 'latent NAME', 'node NAME' or 'A -> B'");
      if (keyword == "latent") {
        declare(name).latent = true;
      } else if (keyword == "node") {
        declare(name);
      } else {
        fail("unknown keyword '" + keyword + "'");
      }
    }
    if (end == text.size()) break;
  }
  return Dag(std::move(nodes), std::move(edges));
}

Dag load_dag(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open DAG file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dag(buffer.str());
}

std::string_view to_string(TripleRule rule) noexcept {
  switch (rule) {
    case TripleRule::chain: return "chain";
    case TripleRule::fork: return "fork";
    case TripleRule::collider: return "collider";
  }
  return "unknown";
}

std::string to_string(const PathVerdict& path) {
  std::string out;
  for (std::size_t k = 0; k < path.nodes.size(); ++k) {
    if (k > 0) out += path.forward[k - 1] ? " -> " : " <- ";
    out += path.nodes[k];
  }
  return out;
}

namespace {

TripleRule classify(bool into_middle_from_left, bool out_of_middle_to_right) {
  // into_middle_from_left: left -> middle; out_of_middle_to_right: middle -> right
  if (into_middle_from_left && !out_of_middle_to_right) return TripleRule::collider;
  if (!into_middle_from_left && out_of_middle_to_right) return TripleRule::fork;
  return TripleRule::chain;
}

std::vector<char> collider_openers(const Dag& g, const std::vector<char>& conditioned) {
  // opener[m]: m or one of its descendants is conditioned on
  std::vector<char> opener(g.size(), 0);
  for (std::size_t m = 0; m < g.size(); ++m) {
    for (std::size_t d = 0; d < g.size() && !opener[m]; ++d) {
      if (conditioned[d] && g.is_descendant(d, m)) opener[m] = 1;
    }
  }
  return opener;
}

bool triple_blocked(TripleRule rule, std::size_t middle, const std::vector<char>& conditioned,
                    const std::vector<char>& opener) {
  if (rule == TripleRule::collider) return !opener[middle];
  return conditioned[middle] != 0;
}

void check_query(const Dag& g, std::size_t a, std::size_t b, const std::vector<char>& conditioned) {
  if (a == b) throw Error(ErrorKind::InvalidParam, "d-separation query needs two distinct nodes");
  if (conditioned[a] || conditioned[b]) {
    throw Error(ErrorKind::InvalidParam, "query endpoints may not be in the conditioning set");
  }
  (void)g;
}

}  // namespace

SeparationResult d_separated(const Dag& g, std::string_view a, std::string_view b,
                             const std::vector<std::string>& conditioned) {
  const auto ia = g.index_of(a);
  const auto ib = g.index_of(b);
  std::vector<char> cond(g.size(), 0);
  for (const auto& c : conditioned) cond[g.index_of(c)] = 1;
  check_query(g, ia, ib, cond);
  const auto opener = collider_openers(g, cond);

  SeparationResult result;
  std::vector<std::size_t> path{ia};
  std::vector<bool> forward;
  std::vector<char> on_path(g.size(), 0);
  on_path[ia] = 1;

  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    if (v == ib) {
      PathVerdict verdict;
      for (auto n : path) verdict.nodes.push_back(g.nodes()[n].name);
      verdict.forward = forward;
      for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        const auto rule = classify(forward[k - 1], forward[k]);
        verdict.rules.push_back(rule);
        if (verdict.open && triple_blocked(rule, path[k], cond, opener)) {
          verdict.open = false;
          verdict.blocking_node = g.nodes()[path[k]].name;
        }
      }
      if (verdict.open) result.separated = false;
      result.paths.push_back(std::move(verdict));
      return;
    }
    auto step = [&](std::size_t next, bool is_forward) {
      if (on_path[next]) return;
      on_path[next] = 1;
      path.push_back(next);
      forward.push_back(is_forward);
      walk(next);
      forward.pop_back();
      path.pop_back();
      on_path[next] = 0;
    };
    for (auto c : g.children(v)) step(c, true);
    for (auto p : g.parents(v)) step(p, false);
  };
  walk(ia);
  return result;
}

bool is_d_separated(const Dag& g, std::size_t a, std::size_t b, const std::vector<char>& conditioned) {
  check_query(g, a, b, conditioned);
  const auto opener = collider_openers(g, conditioned);
  std::vector<char> on_path(g.size(), 0);
  on_path[a] = 1;

  // Extends open prefixes only: a blocked triple blocks every extension too.
  std::function<bool(std::size_t, bool, bool)> open_from = [&](std::size_t v, bool has_prev, bool prev_forward) {
    if (v == b) return true;
    auto try_step = [&](std::size_t next, bool is_forward) {
      if (on_path[next]) return false;
      if (has_prev && triple_blocked(classify(prev_forward, is_forward), v, conditioned, opener)) return false;
      on_path[next] = 1;
      const bool found = open_from(next, true, is_forward);
      on_path[next] = 0;
      return found;
    };
    for (auto c : g.children(v)) {
      if (try_step(c, true)) return true;
    }
    for (auto p : g.parents(v)) {
      if (try_step(p, false)) return true;
    }
    return false;
  };
  return !open_from(a, false, false);
}

IvReport check_iv(const Dag& g, std::string_view instrument, std::string_view treatment, std::string_view outcome,
                  const std::vector<std::string>& confounders) {
  const auto iz = g.index_of(instrument);
  const auto it = g.index_of(treatment);
  const auto iy = g.index_of(outcome);
  std::set<std::size_t> distinct{iz, it, iy};
  for (const auto& c : confounders) distinct.insert(g.index_of(c));
  if (distinct.size() != 3 + confounders.size()) {
    throw Error(ErrorKind::InvalidParam, "instrument, treatment, outcome and confounders must be distinct nodes");
  }

  IvReport report;
  if (auto path = g.directed_path(iz, it)) {
    report.iv1 = true;
    std::vector<std::string> names;
    for (auto v : *path) names.push_back(g.nodes()[v].name);
    report.relevance_path = std::move(names);
  }

  report.iv2 = true;
  for (const auto& c : confounders) {
    auto res = d_separated(g, instrument, c, {});
    if (!res.separated) {
      report.iv2 = false;
      for (auto& p : res.paths) {
        if (p.open) report.iv2_open_paths.push_back(std::move(p));
      }
    }
  }

  std::vector<std::string> given{std::string(treatment)};
  given.insert(given.end(), confounders.begin(), confounders.end());
  auto res = d_separated(g, instrument, outcome, given);
  report.iv3 = res.separated;
  for (auto& p : res.paths) {
    if (p.open) report.iv3_open_paths.push_back(std::move(p));
  }
  return report;
}

}  // namespace ivtrial
