#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "partition_map.hpp"

namespace qtmtt {

/// Search configuration for turning a (possibly noisy) partition map back
/// into a split tree. th_qt caps how many cells a QT candidate may overshoot
/// the predicted QT depth; th_mtt caps the per-layer L1 error of an NS/BT/TT
/// candidate (+inf keeps every legal mode). max_tree_depth bounds the number
/// of split decisions along any root-to-leaf path of the search.
struct PostConfig {
  int th_qt = 0;
  double th_mtt = std::numeric_limits<double>::infinity();
  int max_tree_depth = 7;  // 4 QT rounds + 3 MTT rounds: no legal tree excluded
  std::size_t node_budget = 1'000'000;
  PartitionRules rules{};
};

/// A CU awaiting its split decision during the search.
/// md_base is the cumulative depth its cells carry after mtt_stage layers
/// (equal to qt_depth while still on the QT spine); depth counts the split
/// decisions above the CU within this search.
struct FrontierCu {
  CuGeometry geom{};
  int qt_depth = 0;
  int mtt_stage = 0;
  int md_base = 0;
  int depth = 0;
};

class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(const CuGeometry& root)
      : std::runtime_error("map-tree node budget exceeded for CTU rooted at " +
                           qtmtt::to_string(root)),
        root_(root) {}
  const CuGeometry& root() const { return root_; }

 private:
  CuGeometry root_;
};

/// L1 error charged by deciding `mode` for `cu`, measured on the layer the
/// decision writes: cumulative depth values (md_base plus the per-child
/// increment) against pred.md[stage], plus the direction layer difference.
/// QT decisions are charged nothing here; their depth shortfall surfaces in
/// the layer comparison of whatever is decided below. An NS decision at the
/// last MTT stage has no layer left to write and is free.
inline std::int64_t decision_error(const FrontierCu& cu, SplitMode mode, const PartitionMap& pred)
{
  if (mode == SplitMode::QT) return 0;
  const int layer = cu.mtt_stage;
  if (mode == SplitMode::NS && layer == kMttLayers) return 0;
  std::int64_t err = 0;
  auto charge = [&](const CuGeometry& g, int depth_value, int dir) {
    for (int r = g.cy0(); r < g.cy1(); ++r)
      for (int c = g.cx0(); c < g.cx1(); ++c) {
        err += std::abs(depth_value - pred.md[layer].at(r, c));
        err += std::abs(dir - pred.mdir[layer].at(r, c));
      }
  };
  if (mode == SplitMode::NS) {
    charge(cu.geom, cu.md_base, 0);
  } else {
    const int dir = is_horizontal(mode) ? 1 : -1;
    const auto rects = apply_split(cu.geom, mode);
    for (std::size_t i = 0; i < rects.size(); ++i)
      charge(rects[i], cu.md_base + child_md_increment(mode, i), dir);
  }
  return err;
}

/// Cells a QT split of `cu` would push past the predicted QT depth.
inline int qt_overshoot(const FrontierCu& cu, const PartitionMap& pred)
{
  int n = 0;
  const CuGeometry& g = cu.geom;
  for (int r = g.cy0(); r < g.cy1(); ++r)
    for (int c = g.cx0(); c < g.cx1(); ++c)
      if (cu.qt_depth + 1 > pred.qd.at(r, c)) ++n;
  return n;
}

/// Modes surviving the threshold gates, in canonical order. Never empty: when
/// every gate fails, the legal NS/BT/TT mode with the least layer error is
/// kept so the search always completes.
inline std::vector<SplitMode> candidate_modes(const FrontierCu& cu, const PartitionMap& pred,
                                              const PostConfig& cfg)
{
  const auto legal = legal_splits(cu.geom, cu.qt_depth, cu.mtt_stage, cfg.rules);
  std::vector<SplitMode> out;
  for (SplitMode m : legal) {
    if (m == SplitMode::QT) {
      if (qt_overshoot(cu, pred) <= cfg.th_qt) out.push_back(m);
    } else if (double(decision_error(cu, m, pred)) <= cfg.th_mtt) {
      out.push_back(m);
    }
  }
  if (out.empty()) {
    SplitMode best = SplitMode::NS;
    std::int64_t best_err = std::numeric_limits<std::int64_t>::max();
    for (SplitMode m : legal) {
      if (m == SplitMode::QT) continue;
      const std::int64_t e = decision_error(cu, m, pred);
      if (e < best_err) { best_err = e; best = m; }
    }
    out.push_back(best);
  }
  return out;
}

inline FrontierCu child_cu(const FrontierCu& cu, SplitMode mode, const CuGeometry& child_geom,
                           std::size_t child_index)
{
  FrontierCu c;
  c.geom = child_geom;
  c.depth = cu.depth + 1;
  if (mode == SplitMode::QT) {
    c.qt_depth = cu.qt_depth + 1;
    c.mtt_stage = 0;
    c.md_base = c.qt_depth;
  } else {
    c.qt_depth = cu.qt_depth;
    c.mtt_stage = cu.mtt_stage + 1;
    c.md_base = cu.md_base + child_md_increment(mode, child_index);
  }
  return c;
}

/// Candidate search tree. Frontier CUs decide independently (the map error is
/// a sum of per-decision terms, so a joint assignment over sibling CUs scores
/// as the sum of its parts); each node therefore holds one CU with one branch
/// per surviving mode, instead of materializing the cross product of sibling
/// choices, which is unbounded at permissive thresholds.
struct MapNode {
  FrontierCu cu;
  struct Branch {
    SplitMode mode = SplitMode::NS;
    std::vector<MapNode> children;
  };
  std::vector<Branch> branches;
};

struct MapTree {
  MapNode root;
  std::size_t node_count = 0;
};

namespace detail {

inline MapNode expand_map_node(const FrontierCu& cu, const PartitionMap& pred,
                               const PostConfig& cfg, const CuGeometry& search_root,
                               std::size_t& nodes)
{
  if (++nodes > cfg.node_budget) throw BudgetExceededError(search_root);
  MapNode node;
  node.cu = cu;
  std::vector<SplitMode> modes;
  if (cu.depth >= cfg.max_tree_depth)
    modes = {SplitMode::NS};
  else
    modes = candidate_modes(cu, pred, cfg);
  for (SplitMode m : modes) {
    MapNode::Branch b;
    b.mode = m;
    if (m != SplitMode::NS) {
      const auto rects = apply_split(cu.geom, m);
      for (std::size_t i = 0; i < rects.size(); ++i)
        b.children.push_back(
            expand_map_node(child_cu(cu, m, rects[i], i), pred, cfg, search_root, nodes));
    }
    node.branches.push_back(std::move(b));
  }
  return node;
}

}  // namespace detail

/// Expands the gated candidate search from `root` depth-first. Throws
/// BudgetExceededError when the expansion outgrows cfg.node_budget.
inline MapTree generate_map_tree(const PartitionMap& pred, const PostConfig& cfg,
                                 const CuState& root = ctu_root())
{
  if (root.mtt_stage != 0) throw std::invalid_argument("generate_map_tree: MTT root");
  MapTree t;
  FrontierCu cu{root.geom, root.qt_depth, root.mtt_stage, root.qt_depth, 0};
  t.node_count = 0;
  t.root = detail::expand_map_node(cu, pred, cfg, root.geom, t.node_count);
  return t;
}

/// Number of complete candidate trees the search admits.
inline unsigned long long count_candidate_trees(const MapNode& n)
{
  unsigned long long total = 0;
  for (const auto& b : n.branches) {
    unsigned long long prod = 1;
    for (const auto& c : b.children) prod *= count_candidate_trees(c);
    total += prod;
  }
  return total;
}

inline unsigned long long count_candidate_trees(const MapTree& t)
{
  return count_candidate_trees(t.root);
}

namespace detail {

struct PathChoice {
  SplitTree tree;
  std::int64_t error = 0;
  int splits = 0;
  std::vector<std::uint8_t> preorder;  // mode sequence, for deterministic ties
};

// Candidate order: least error, then fewest splits, then the preorder mode
// sequence in enum order (NS < QT < BT_H < BT_V < TT_H < TT_V).
inline bool path_less(const PathChoice& a, const PathChoice& b)
{
  if (a.error != b.error) return a.error < b.error;
  if (a.splits != b.splits) return a.splits < b.splits;
  return a.preorder < b.preorder;
}

inline PathChoice select_path(const MapNode& node, const PartitionMap& pred)
{
  std::optional<PathChoice> best;
  for (const auto& branch : node.branches) {
    PathChoice p;
    p.tree = SplitTree{node.cu.geom, branch.mode, node.cu.qt_depth, node.cu.mtt_stage, {}};
    p.error = decision_error(node.cu, branch.mode, pred);
    p.splits = branch.mode == SplitMode::NS ? 0 : 1;
    p.preorder.push_back(static_cast<std::uint8_t>(branch.mode));
    for (const auto& c : branch.children) {
      PathChoice sub = select_path(c, pred);
      p.tree.children.push_back(std::move(sub.tree));
      p.error += sub.error;
      p.splits += sub.splits;
      p.preorder.insert(p.preorder.end(), sub.preorder.begin(), sub.preorder.end());
    }
    if (!best || path_less(p, *best)) best = std::move(p);
  }
  if (!best) throw std::logic_error("select_best_path: node without branches");
  return std::move(*best);
}

}  // namespace detail

/// Folds the search tree to the complete candidate with the least accumulated
/// layer error, ties broken toward fewer splits and earlier mode order.
inline SplitTree select_best_path(const MapTree& t, const PartitionMap& pred)
{
  return detail::select_path(t.root, pred).tree;
}

/// generate_map_tree followed by select_best_path.
inline SplitTree reconstruct(const PartitionMap& pred, const PostConfig& cfg,
                             const CuState& root = ctu_root())
{
  return select_best_path(generate_map_tree(pred, cfg, root), pred);
}

/// Accumulated layer error of a complete tree against a predicted map: the
/// sum of decision_error over every node, i.e. the objective the search
/// minimizes. The root must lie on the QT spine.
inline std::int64_t accumulated_error(const SplitTree& t, const PartitionMap& pred)
{
  struct Walker {
    const PartitionMap& pred;
    std::int64_t walk(const SplitTree& n, int md_base)
    {
      FrontierCu cu{n.geometry, n.qt_depth, n.mtt_stage, md_base, 0};
      std::int64_t err = decision_error(cu, n.mode, pred);
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const int child_base = n.mode == SplitMode::QT
                                   ? n.qt_depth + 1
                                   : md_base + child_md_increment(n.mode, i);
        err += walk(n.children[i], child_base);
      }
      return err;
    }
  };
  if (t.mtt_stage != 0) throw std::invalid_argument("accumulated_error: MTT root");
  return Walker{pred}.walk(t, t.qt_depth);
}

namespace detail {

// Standalone exhaustive search used as a test oracle. Keeps its own scoring
// and comparison code on purpose; only the shared partition vocabulary
// (legal_splits / apply_split) is reused.
struct BruteForce {
  const PartitionMap& pred;
  const PartitionRules& rules;
  int depth_cap;

  struct Scored {
    SplitTree tree;
    std::int64_t error = 0;
    int splits = 0;
    std::vector<std::uint8_t> preorder;
  };

  static bool less(const Scored& a, const Scored& b)
  {
    if (a.error != b.error) return a.error < b.error;
    if (a.splits != b.splits) return a.splits < b.splits;
    return a.preorder < b.preorder;
  }

  std::int64_t mode_error(const CuGeometry& g, int qt_depth, int stage, int base,
                          SplitMode m) const
  {
    if (m == SplitMode::QT) return 0;
    if (m == SplitMode::NS && stage == kMttLayers) return 0;
    std::int64_t err = 0;
    auto add = [&](const CuGeometry& sub, int value, int dir) {
      for (int r = sub.cy0(); r < sub.cy1(); ++r)
        for (int c = sub.cx0(); c < sub.cx1(); ++c)
          err += std::abs(value - pred.md[stage].at(r, c)) +
                 std::abs(dir - pred.mdir[stage].at(r, c));
    };
    if (m == SplitMode::NS) {
      add(g, base, 0);
    } else {
      const auto rects = apply_split(g, m);
      for (std::size_t i = 0; i < rects.size(); ++i)
        add(rects[i], base + child_md_increment(m, i), is_horizontal(m) ? 1 : -1);
    }
    (void)qt_depth;
    return err;
  }

  Scored best(const CuGeometry& g, int qt_depth, int stage, int base, int depth) const
  {
    std::optional<Scored> winner;
    std::vector<SplitMode> modes;
    if (depth >= depth_cap)
      modes = {SplitMode::NS};
    else
      modes = legal_splits(g, qt_depth, stage, rules);
    for (SplitMode m : modes) {
      Scored s;
      s.tree = SplitTree{g, m, qt_depth, stage, {}};
      s.error = mode_error(g, qt_depth, stage, base, m);
      s.splits = m == SplitMode::NS ? 0 : 1;
      s.preorder.push_back(static_cast<std::uint8_t>(m));
      const auto rects = apply_split(g, m);
      for (std::size_t i = 0; i < rects.size(); ++i) {
        Scored sub;
        if (m == SplitMode::QT)
          sub = best(rects[i], qt_depth + 1, 0, qt_depth + 1, depth + 1);
        else
          sub = best(rects[i], qt_depth, stage + 1, base + child_md_increment(m, i), depth + 1);
        s.tree.children.push_back(std::move(sub.tree));
        s.error += sub.error;
        s.splits += sub.splits;
        s.preorder.insert(s.preorder.end(), sub.preorder.begin(), sub.preorder.end());
      }
      if (!winner || less(s, *winner)) winner = std::move(s);
    }
    return std::move(*winner);
  }
};

}  // namespace detail

/// Exhaustive minimum of the accumulated layer error over all legal trees
/// rooted at `root` with at most depth_cap splits along any path, with the
/// same tie-breaking as select_best_path. Oracle use only; the input size is
/// capped so enumeration stays tractable.
inline SplitTree brute_force_best_tree(const PartitionMap& pred, const PartitionRules& rules,
                                       int depth_cap, const CuState& root)
{
  if (root.geom.w > 64 || root.geom.h > 64 || depth_cap > 4)
    throw std::invalid_argument("brute_force_best_tree: instance too large to enumerate");
  if (root.mtt_stage != 0) throw std::invalid_argument("brute_force_best_tree: MTT root");
  detail::BruteForce bf{pred, rules, depth_cap};
  return bf.best(root.geom, root.qt_depth, 0, root.qt_depth, 0).tree;
}

}  // namespace qtmtt
