#pragma once

// Agglomeration of a fine triangulation into polygons, one subdomain at a
// time so that no coarse element straddles the interface.
//
// Clusters come from seeded k-means (k-means++ start) on the fine-element
// centroids. A repair loop then enforces, per subdomain, the exact target
// count and clusters whose union is a simple polygon, star-shaped about its
// centroid. Disconnected clusters are split into components. Invalid ones
// trade boundary elements with their neighbours and are bisected if that
// stalls. Surplus clusters are merged into a neighbour when the union stays
// valid (or dissolved element by element), and missing ones come from
// bisecting the largest cluster.

#include "polymps/faces.hpp"
#include "polymps/mesh.hpp"

#include <numeric>
#include <random>
#include <set>

namespace polymps {

struct AgglomerationConfig {
  std::size_t target_el = 1;
  std::size_t target_f = 1;
  std::uint64_t seed = 1;
  std::size_t max_repair_iterations = 100000;
  std::size_t kmeans_iterations = 50;
};

struct AgglomerationResult {
  PolyMesh coarse;
  std::vector<std::size_t> assignment;  // fine element -> coarse element
};

struct PartitionReport {
  std::size_t n_clusters = 0;
  std::vector<std::size_t> impure;                                 // clusters mixing domains
  std::vector<std::pair<std::size_t, std::size_t>> disconnected;   // (cluster, #components)
  double area_error_el = 0.0;   // relative, coarse vs fine per domain (0 without coarse mesh)
  double area_error_f = 0.0;
  bool interface_preserved = true;

  bool ok(double area_tol = 1e-10) const {
    return impure.empty() && disconnected.empty() && area_error_el <= area_tol && area_error_f <= area_tol &&
           interface_preserved;
  }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Oriented boundary loop of a set of fine elements, or nullopt when the
/// union is not a simple polygon (pinched, holed or disconnected).
inline std::optional<std::vector<std::size_t>> cluster_loop(const PolyMesh& fine, const std::vector<std::size_t>& members,
                                                            const std::vector<long>& label, long id) {
  std::map<std::size_t, std::size_t> next;
  for (std::size_t k : members)
    for (std::size_t eid : fine.element_edges(k)) {
      const MeshEdge& e = fine.edges()[eid];
      const bool first = static_cast<std::size_t>(e.elem[0]) == k;
      const long other = first ? e.elem[1] : e.elem[0];
      if (other >= 0 && label[static_cast<std::size_t>(other)] == id) continue;
      const std::size_t a = first ? e.v[0] : e.v[1], b = first ? e.v[1] : e.v[0];
      if (!next.emplace(a, b).second) return std::nullopt;  // pinch vertex
    }
  if (next.empty()) return std::nullopt;
  std::vector<std::size_t> loop;
  std::size_t v = next.begin()->first;
  do {
    loop.push_back(v);
    auto it = next.find(v);
    if (it == next.end() || loop.size() > next.size()) return std::nullopt;
    v = it->second;
  } while (v != loop.front());
  if (loop.size() != next.size()) return std::nullopt;  // several loops
  return loop;
}

/// Number of centroid-fan triangles of a loop that are not strictly positive;
/// 0 means the polygon is star-shaped about its centroid.
inline std::size_t fan_defects(const std::vector<Point>& xs, const std::vector<std::size_t>& loop) {
  const ElementGeometry g = compute_geometry(xs, loop);
  if (!(g.area > 0.0)) return loop.size();
  const double tol = 1e-10 * g.diameter * g.diameter;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point& p = xs[loop[i]];
    const Point& q = xs[loop[(i + 1) % loop.size()]];
    if (!(0.5 * cross(p - g.centroid, q - g.centroid) > tol)) ++bad;
  }
  return bad;
}

constexpr std::size_t not_simple = std::numeric_limits<std::size_t>::max() / 2;

/// Partition state of one subdomain: fine-element labels plus the member
/// sets of every cluster.
class ClusterSet {
 public:
  ClusterSet(const PolyMesh& fine, const std::vector<std::size_t>& elems, std::vector<long>& label)
      : fine_(fine), label_(label) {
    for (std::size_t k : elems) {
      in_domain_.insert(k);
      members_[label_[k]].insert(k);
      next_id_ = std::max(next_id_, label_[k] + 1);
    }
  }

  const std::map<long, std::set<std::size_t>>& clusters() const { return members_; }
  std::size_t size() const { return members_.size(); }
  long label(std::size_t k) const { return label_[k]; }

  /// Same-domain neighbours of fine element k.
  std::vector<std::size_t> neighbours(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t eid : fine_.element_edges(k)) {
      const MeshEdge& e = fine_.edges()[eid];
      const long o = static_cast<std::size_t>(e.elem[0]) == k ? e.elem[1] : e.elem[0];
      if (o >= 0 && in_domain_.count(static_cast<std::size_t>(o))) out.push_back(static_cast<std::size_t>(o));
    }
    return out;
  }

  /// Fan defects of a cluster, `not_simple` when its union is not a simple polygon.
  std::size_t defects(long id) const {
    const auto it = members_.find(id);
    if (it == members_.end() || it->second.empty()) return 0;
    const std::vector<std::size_t> m(it->second.begin(), it->second.end());
    const auto loop = cluster_loop(fine_, m, label_, id);
    return loop ? fan_defects(fine_.vertices(), *loop) : not_simple;
  }

  bool valid(long id) const { return defects(id) == 0; }

  bool connected_without(long id, std::size_t removed) const {
    const auto& m = members_.at(id);
    if (m.size() <= 1) return true;
    std::size_t start = *m.begin() == removed ? *std::next(m.begin()) : *m.begin();
    std::set<std::size_t> seen{start};
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b : neighbours(a))
        if (b != removed && label_[b] == id && seen.insert(b).second) stack.push_back(b);
    }
    return seen.size() + 1 == m.size();
  }

  void move(std::size_t k, long to) {
    const long from = label_[k];
    if (journal_) journal_->emplace_back(k, from);
    auto it = members_.find(from);
    it->second.erase(k);
    if (it->second.empty()) members_.erase(it);
    label_[k] = to;
    members_[to].insert(k);
  }

  void relabel(long from, long to) {
    for (std::size_t k : std::set<std::size_t>(members_.at(from))) move(k, to);
  }

  long fresh_id() { return next_id_++; }

  /// Records moves from now on so that `rollback` can undo them.
  void begin() { journal_.emplace(); }
  void commit() { journal_.reset(); }
  void rollback() {
    auto j = std::move(*journal_);
    journal_.reset();
    for (auto it = j.rbegin(); it != j.rend(); ++it) move(it->first, it->second);
  }

  /// Relabels every connected component of every cluster as its own cluster.
  void split_components() {
    for (const auto& [id, m] : std::map<long, std::set<std::size_t>>(members_)) {
      std::set<std::size_t> left = m;
      bool first = true;
      while (!left.empty()) {
        const std::size_t s = *left.begin();
        std::vector<std::size_t> comp{s}, stack{s};
        left.erase(s);
        while (!stack.empty()) {
          const std::size_t a = stack.back();
          stack.pop_back();
          for (std::size_t b : neighbours(a))
            if (left.erase(b)) {
              comp.push_back(b);
              stack.push_back(b);
            }
        }
        if (!first) {
          const long nid = fresh_id();
          for (std::size_t k : comp) move(k, nid);
        }
        first = false;
      }
    }
  }

  /// Splits a cluster in two connected halves grown from two distant seeds.
  void bisect(long id) {
    const std::vector<std::size_t> m(members_.at(id).begin(), members_.at(id).end());
    if (m.size() < 2) return;
    Point c = Point::Zero();
    for (std::size_t k : m) c += fine_.geometry(k).centroid;
    c /= static_cast<double>(m.size());
    auto farthest = [&](const Point& from) {
      std::size_t best = m.front();
      double d = -1.0;
      for (std::size_t k : m) {
        const double dk = (fine_.geometry(k).centroid - from).squaredNorm();
        if (dk > d + 1e-15) {
          d = dk;
          best = k;
        }
      }
      return best;
    };
    const std::size_t s0 = farthest(c);
    const std::size_t s1 = farthest(fine_.geometry(s0).centroid);
    std::map<std::size_t, int> side{{s0, 0}, {s1, 1}};
    std::vector<std::size_t> frontier{s0, s1};
    while (!frontier.empty()) {
      std::vector<std::size_t> nxt;
      for (std::size_t a : frontier)
        for (std::size_t b : neighbours(a))
          if (label_[b] == id && !side.count(b)) {
            side[b] = side[a];
            nxt.push_back(b);
          }
      frontier = std::move(nxt);
    }
    const long nid = fresh_id();
    for (const auto& [k, s] : side)
      if (s == 1) move(k, nid);
  }

  /// Neighbouring cluster ids of a cluster.
  std::set<long> adjacent(long id) const {
    std::set<long> out;
    for (std::size_t k : members_.at(id))
      for (std::size_t o : neighbours(k))
        if (label_[o] != id) out.insert(label_[o]);
    return out;
  }

  /// Greedy single-element transfers with the neighbours that lower the
  /// defect count of `id` while keeping every other touched cluster valid
  /// and connected. Returns true once `id` is valid.
  bool repair(long id, std::size_t max_moves) {
    std::size_t score = defects(id);
    for (std::size_t it = 0; score > 0 && it < max_moves; ++it) {
      std::size_t best_score = score;
      std::pair<std::size_t, long> best{0, -1};
      auto consider = [&](std::size_t k, long to) {
        const long from = label_[k];
        move(k, to);
        const long other = from == id ? to : from;
        if (valid(other)) {
          const std::size_t s = defects(id);
          if (s < best_score) {
            best_score = s;
            best = {k, to};
          }
        }
        move(k, from);
      };
      std::set<std::pair<std::size_t, long>> push, pull;
      for (std::size_t k : members_.at(id))
        for (std::size_t o : neighbours(k))
          if (label_[o] != id) {
            push.emplace(k, label_[o]);
            pull.emplace(o, id);
          }
      for (const auto& [k, to] : push)
        if (members_.at(id).size() > 1 && connected_without(id, k)) consider(k, to);
      for (const auto& [k, to] : pull) {
        const long from = label_[k];
        if (members_.at(from).size() > 1 && connected_without(from, k)) consider(k, to);
      }
      if (best.second < 0) return false;
      move(best.first, best.second);
      score = best_score;
    }
    return score == 0;
  }

  /// Hands every element of `id` to valid neighbours, one at a time; the
  /// moves are undone if the cluster cannot be emptied.
  bool dissolve(long id) {
    std::vector<std::pair<std::size_t, long>> done;
    while (members_.count(id)) {
      bool moved = false;
      for (std::size_t k : std::set<std::size_t>(members_.at(id))) {
        if (!connected_without(id, k)) continue;
        std::set<long> targets;
        for (std::size_t o : neighbours(k))
          if (label_[o] != id) targets.insert(label_[o]);
        for (long to : targets) {
          move(k, to);
          if (valid(to)) {
            done.emplace_back(k, to);
            moved = true;
            break;
          }
          move(k, id);
        }
        if (moved) break;
      }
      if (!moved) {
        for (auto it = done.rbegin(); it != done.rend(); ++it) move(it->first, id);
        return false;
      }
    }
    return true;
  }

 private:
  const PolyMesh& fine_;
  std::set<std::size_t> in_domain_;
  std::vector<long>& label_;
  std::map<long, std::set<std::size_t>> members_;
  long next_id_ = 0;
  std::optional<std::vector<std::pair<std::size_t, long>>> journal_;
};

/// Seeded k-means (k-means++ start) on element centroids, area weighted.
inline std::vector<long> kmeans(const PolyMesh& fine, const std::vector<std::size_t>& elems, std::size_t k,
                                std::uint64_t seed, std::size_t iterations) {
  std::mt19937_64 rng(seed);
  const std::size_t n = elems.size();
  std::vector<Point> x(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = fine.geometry(elems[i]).centroid;
    w[i] = fine.geometry(elems[i]).area;
  }
  std::vector<Point> centers;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      r -= d2[i];
      if (r <= 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(x[pick]);
  }
  std::vector<long> assign(n, -1);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      long best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (x[i] - centers[c]).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<long>(c);
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Point> sum(k, Point::Zero());
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assign[i])] += w[i] * x[i];
      mass[static_cast<std::size_t>(assign[i])] += w[i];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (mass[c] > 0.0) centers[c] = sum[c] / mass[c];
  }
  return assign;
}

/// Partition of one subdomain into exactly `target` valid clusters.
inline void partition_domain(const PolyMesh& fine, const std::vector<std::size_t>& elems, std::size_t target,
                             const AgglomerationConfig& cfg, std::uint64_t seed, std::vector<long>& label) {
  if (elems.empty()) return;
  if (target < 1 || target > elems.size())
    throw InputError("agglomeration target " + std::to_string(target) + " outside [1, " +
                     std::to_string(elems.size()) + "]");
  const auto km = kmeans(fine, elems, target, seed, cfg.kmeans_iterations);
  for (std::size_t i = 0; i < elems.size(); ++i) label[elems[i]] = km[i];
  ClusterSet cs(fine, elems, label);
  cs.split_components();

  auto budget_exhausted = [&](std::size_t iter) {
    if (iter >= cfg.max_repair_iterations)
      throw MeshError("agglomeration: target " + std::to_string(target) + " not reached within the repair budget (" +
                      std::to_string(cs.size()) + " clusters)");
  };
  std::size_t iter = 0;
  for (;; ++iter) {
    budget_exhausted(iter);
    long bad = -1;
    for (const auto& [id, m] : cs.clusters())
      if (!cs.valid(id)) {
        bad = id;
        break;
      }
    if (bad >= 0) {
      if (!cs.repair(bad, 4 * cs.clusters().at(bad).size())) {
        cs.bisect(bad);
        cs.split_components();
      }
      continue;
    }
    if (cs.size() == target) break;
    if (cs.size() < target) {
      long largest = cs.clusters().begin()->first;
      for (const auto& [id, m] : cs.clusters())
        if (m.size() > cs.clusters().at(largest).size()) largest = id;
      cs.bisect(largest);
      cs.split_components();
      continue;
    }
    // Too many: merge the smallest cluster that admits a valid merge, else
    // dissolve the smallest cluster that can be absorbed element-wise.
    std::vector<std::pair<std::size_t, long>> order;
    for (const auto& [id, m] : cs.clusters()) order.emplace_back(m.size(), id);
    std::sort(order.begin(), order.end());
    bool merged = false;
    for (const auto& [sz, id] : order) {
      std::vector<std::pair<std::size_t, long>> cand;
      for (long o : cs.adjacent(id)) cand.emplace_back(cs.clusters().at(o).size(), o);
      std::sort(cand.begin(), cand.end());
      for (const auto& [osz, o] : cand) {
        cs.begin();
        cs.relabel(id, o);
        if (cs.valid(o) || cs.repair(o, cs.clusters().at(o).size())) {
          cs.commit();
          merged = true;
          break;
        }
        cs.rollback();
      }
      if (merged) break;
    }
    if (merged) continue;
    for (const auto& [sz, id] : order)
      if (cs.dissolve(id)) {
        merged = true;
        break;
      }
    if (!merged)
      throw MeshError("agglomeration: no admissible merge left with " + std::to_string(cs.size()) +
                      " clusters for target " + std::to_string(target));
  }
}

}  // namespace detail

/// Coarse mesh from a fine triangulation; each subdomain is partitioned
/// independently into exactly its target number of polygons.
inline AgglomerationResult agglomerate(const PolyMesh& fine, const AgglomerationConfig& cfg) {
  std::vector<std::size_t> el, fl;
  for (std::size_t k = 0; k < fine.n_elements(); ++k) {
    if (fine.element(k).vertices.size() != 3) throw InputError("agglomerate: fine mesh must consist of triangles");
    (fine.element(k).domain == Domain::elastic ? el : fl).push_back(k);
  }
  std::vector<long> label(fine.n_elements(), -1);
  detail::partition_domain(fine, el, cfg.target_el, cfg, cfg.seed, label);
  std::vector<long> label_f(fine.n_elements(), -1);
  detail::partition_domain(fine, fl, cfg.target_f, cfg, cfg.seed + 1, label_f);

  // Number clusters: elastic first, then fluid, ordered by smallest member.
  std::map<std::pair<int, long>, std::size_t> ids;
  std::vector<std::size_t> assignment(fine.n_elements());
  for (std::size_t k = 0; k < fine.n_elements(); ++k) {
    const bool is_el = fine.element(k).domain == Domain::elastic;
    const auto key = std::make_pair(is_el ? 0 : 1, is_el ? label[k] : label_f[k]);
    auto it = ids.find(key);
    if (it == ids.end()) it = ids.emplace(key, ids.size()).first;
    assignment[k] = it->second;
  }
  std::vector<std::vector<std::size_t>> members(ids.size());
  for (std::size_t k = 0; k < fine.n_elements(); ++k) members[assignment[k]].push_back(k);
  // Order coarse elements elastic-first by first fine member for determinism.
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ea = fine.element(members[a].front()).domain == Domain::elastic;
    const bool eb = fine.element(members[b].front()).domain == Domain::elastic;
    if (ea != eb) return ea;
    return members[a].front() < members[b].front();
  });
  std::vector<std::size_t> rank(members.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  for (auto& a : assignment) a = rank[a];
  std::vector<std::vector<std::size_t>> sorted(members.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = members[order[i]];

  std::vector<long> lab(fine.n_elements());
  for (std::size_t k = 0; k < fine.n_elements(); ++k) lab[k] = static_cast<long>(assignment[k]);
  std::vector<Element> coarse;
  std::vector<long> remap(fine.vertices().size(), -1);
  std::vector<Point> xs;
  for (std::size_t c = 0; c < sorted.size(); ++c) {
    auto loop = detail::cluster_loop(fine, sorted[c], lab, static_cast<long>(c));
    if (!loop) throw MeshError("agglomeration produced a non-simple polygon (cluster " + std::to_string(c) + ")");
    for (auto& v : *loop) {
      if (remap[v] < 0) {
        remap[v] = static_cast<long>(xs.size());
        xs.push_back(fine.vertices()[v]);
      }
      v = static_cast<std::size_t>(remap[v]);
    }
    coarse.push_back({*loop, fine.element(sorted[c].front()).domain});
  }
  BoundaryLabels labels;
  for (const auto& [key, name] : fine.boundary_labels()) {
    if (remap[key.first] < 0 || remap[key.second] < 0) continue;
    labels[edge_key(static_cast<std::size_t>(remap[key.first]), static_cast<std::size_t>(remap[key.second]))] = name;
  }
  return {PolyMesh(std::move(xs), std::move(coarse), std::move(labels)), assignment};
}

namespace detail {

using Segment = std::pair<std::pair<double, double>, std::pair<double, double>>;

inline std::set<Segment> interface_segments(const PolyMesh& m) {
  std::set<Segment> out;
  for (const auto& e : m.edges()) {
    if (!m.is_interface(e)) continue;
    auto p = [&m](std::size_t v) { return std::make_pair(m.vertices()[v].x(), m.vertices()[v].y()); };
    auto a = p(e.v[0]), b = p(e.v[1]);
    if (b < a) std::swap(a, b);
    out.emplace(a, b);
  }
  return out;
}

}  // namespace detail

/// Checks a fine-to-coarse assignment: domain purity, connectivity of each
/// cluster and, given the coarse mesh, area conservation and interface
/// preservation.
inline PartitionReport validate_partition(const PolyMesh& fine, const std::vector<std::size_t>& assignment,
                                          const PolyMesh* coarse = nullptr) {
  if (assignment.size() != fine.n_elements()) throw InputError("assignment does not cover the fine mesh");
  PartitionReport r;
  r.n_clusters = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
  std::vector<int> dom(r.n_clusters, -1);
  std::set<std::size_t> impure;
  for (std::size_t k = 0; k < fine.n_elements(); ++k) {
    const int d = static_cast<int>(fine.element(k).domain);
    int& slot = dom[assignment[k]];
    if (slot < 0) slot = d;
    else if (slot != d) impure.insert(assignment[k]);
  }
  r.impure.assign(impure.begin(), impure.end());

  detail::UnionFind uf(fine.n_elements());
  for (const auto& e : fine.edges())
    if (!e.on_boundary()) {
      const auto a = static_cast<std::size_t>(e.elem[0]), b = static_cast<std::size_t>(e.elem[1]);
      if (assignment[a] == assignment[b]) uf.unite(a, b);
    }
  std::vector<std::set<std::size_t>> roots(r.n_clusters);
  for (std::size_t k = 0; k < fine.n_elements(); ++k) roots[assignment[k]].insert(uf.find(k));
  for (std::size_t c = 0; c < r.n_clusters; ++c)
    if (roots[c].size() > 1) r.disconnected.emplace_back(c, roots[c].size());

  if (coarse) {
    auto rel = [](double a, double b) { return b > 0.0 ? std::abs(a - b) / b : std::abs(a); };
    r.area_error_el = rel(coarse->area(Domain::elastic), fine.area(Domain::elastic));
    r.area_error_f = rel(coarse->area(Domain::fluid), fine.area(Domain::fluid));
    r.interface_preserved = detail::interface_segments(*coarse) == detail::interface_segments(fine);
  }
  return r;
}

/// Synthetic two-domain fine triangulation of the unit square: tissue
/// surrounding an elliptic ventricle drained by a vertical channel down to
/// y = 0. Labels: "wall_el" on the tissue boundary, "out" at the channel exit.
inline PolyMesh synthetic_brain_mesh(std::size_t n = 100) {
  if (n < 20 || n % 2 != 0) throw InputError("synthetic brain mesh needs an even resolution >= 20");
  const double cx = 0.5, cy = 0.55, rx = 0.3, ry = 0.08, half_channel = 0.03;
  auto fluid = [=](const Point& c) {
    const double ex = (c.x() - cx) / rx, ey = (c.y() - cy) / ry;
    const bool ventricle = ex * ex + ey * ey < 1.0;
    const bool channel = std::abs(c.x() - cx) < half_channel && c.y() < cy;
    return ventricle || channel;
  };
  auto domain_of = [&](const Point& c) { return fluid(c) ? Domain::fluid : Domain::elastic; };
  auto label_of = [=](const Point& a, const Point& b) -> std::string {
    const Point m = 0.5 * (a + b);
    return m.y() < 1e-12 && std::abs(m.x() - cx) < half_channel ? "out" : "wall_el";
  };
  return structured_grid(0.0, 1.0, 0.0, 1.0, n, n, true, domain_of, label_of);
}

inline BoundaryConditionMap synthetic_brain_conditions() {
  BoundaryConditionMap m;
  BoundaryCondition wall;
  wall.dirichlet_d = true;
  m["wall_el"] = wall;
  BoundaryCondition out;
  out.outlet = true;
  m["out"] = out;
  return m;
}

}  // namespace polymps
