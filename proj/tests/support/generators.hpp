#pragma once

// Deterministic random and exhaustive generators shared by the unit and
// acceptance suites. Everything takes an explicit engine; tests seed it.

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <qtmtt/partition.hpp>
#include <qtmtt/partition_map.hpp>
#include <qtmtt/split_log.hpp>

namespace qtmtt::testgen {

/// Random legal tree. The chance of splitting decays with depth so trees
/// stay small but occasionally reach the stage and depth caps.
inline SplitTree random_legal_tree(std::mt19937_64& rng, const PartitionRules& rules,
                                   const CuState& root = ctu_root())
{
  SplitTree t;
  t.geometry = root.geom;
  t.qt_depth = root.qt_depth;
  t.mtt_stage = root.mtt_stage;
  t.mode = SplitMode::NS;

  const auto legal = legal_splits(root.geom, root.qt_depth, root.mtt_stage, rules);
  std::vector<SplitMode> splits;
  for (SplitMode m : legal)
    if (m != SplitMode::NS) splits.push_back(m);

  const int depth = root.qt_depth + root.mtt_stage;
  const double p_split = splits.empty() ? 0.0 : 0.72 / (1.0 + 0.55 * depth);
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= p_split) return t;

  t.mode = splits[std::uniform_int_distribution<std::size_t>(0, splits.size() - 1)(rng)];
  const bool qt = t.mode == SplitMode::QT;
  for (const CuGeometry& cg : apply_split(root.geom, t.mode))
    t.children.push_back(random_legal_tree(
        rng, rules,
        CuState{cg, qt ? root.qt_depth + 1 : root.qt_depth, qt ? 0 : root.mtt_stage + 1}));
  return t;
}

namespace detail {

using ScoredTree = std::pair<SplitTree, int>;  // tree, splits used

inline std::vector<ScoredTree> enumerate_trees_impl(const CuState& cu,
                                                    const PartitionRules& rules, int budget);

// All ways to fill a split's child list with at most `budget` further splits.
inline std::vector<std::pair<std::vector<SplitTree>, int>> enumerate_child_combos(
    const std::vector<CuState>& children, std::size_t from, const PartitionRules& rules,
    int budget)
{
  std::vector<std::pair<std::vector<SplitTree>, int>> out;
  if (from == children.size()) {
    out.push_back({{}, 0});
    return out;
  }
  for (const auto& [head, used] : enumerate_trees_impl(children[from], rules, budget))
    for (const auto& [tail, tail_used] :
         enumerate_child_combos(children, from + 1, rules, budget - used)) {
      std::vector<SplitTree> combo{head};
      combo.insert(combo.end(), tail.begin(), tail.end());
      out.push_back({std::move(combo), used + tail_used});
    }
  return out;
}

inline std::vector<ScoredTree> enumerate_trees_impl(const CuState& cu,
                                                    const PartitionRules& rules, int budget)
{
  SplitTree leaf;
  leaf.geometry = cu.geom;
  leaf.qt_depth = cu.qt_depth;
  leaf.mtt_stage = cu.mtt_stage;
  std::vector<ScoredTree> out{{leaf, 0}};
  if (budget <= 0) return out;

  for (SplitMode m : legal_splits(cu.geom, cu.qt_depth, cu.mtt_stage, rules)) {
    if (m == SplitMode::NS) continue;
    const bool qt = m == SplitMode::QT;
    std::vector<CuState> children;
    for (const CuGeometry& cg : apply_split(cu.geom, m))
      children.push_back(
          CuState{cg, qt ? cu.qt_depth + 1 : cu.qt_depth, qt ? 0 : cu.mtt_stage + 1});
    for (auto& [combo, used] : enumerate_child_combos(children, 0, rules, budget - 1)) {
      SplitTree t = leaf;
      t.mode = m;
      t.children = std::move(combo);
      out.push_back({std::move(t), used + 1});
    }
  }
  return out;
}

}  // namespace detail

/// Every legal tree with at most `max_splits` split nodes in total.
inline std::vector<SplitTree> enumerate_trees(const CuState& root, const PartitionRules& rules,
                                              int max_splits)
{
  std::vector<SplitTree> out;
  for (auto& [tree, used] : detail::enumerate_trees_impl(root, rules, max_splits))
    out.push_back(std::move(tree));
  return out;
}

/// Uniformly random cell grids; values deliberately stray outside what any
/// real tree can produce.
inline PartitionMap random_garbage_map(std::mt19937_64& rng)
{
  PartitionMap m;
  std::uniform_int_distribution<int> qd(0, 5), md(0, 8), dir(-1, 1), bit(0, 1);
  for (int i = 0; i < kGridCells; ++i) {
    m.qd.v[i] = qd(rng);
    for (int n = 0; n < kMttLayers; ++n) {
      m.md[n].v[i] = md(rng);
      m.mdir[n].v[i] = dir(rng);
    }
  }
  m.mask = bit(rng) != 0;
  return m;
}

/// Map of a random legal tree with `cells` random single-cell edits, i.e. the
/// kind of locally wrong prediction a network produces.
inline PartitionMap noisy_map_from_tree(std::mt19937_64& rng, const SplitTree& tree, int cells)
{
  PartitionMap m = tree_to_map(tree);
  const int cx0 = tree.geometry.cx0(), cx1 = tree.geometry.cx1();
  const int cy0 = tree.geometry.cy0(), cy1 = tree.geometry.cy1();
  std::uniform_int_distribution<int> px(cx0, cx1 - 1), py(cy0, cy1 - 1);
  std::uniform_int_distribution<int> which(0, 2), delta(-2, 2), dir(-1, 1);
  for (int i = 0; i < cells; ++i) {
    const int r = py(rng), c = px(rng);
    switch (which(rng)) {
      case 0:
        m.qd.at(r, c) = std::clamp(m.qd.at(r, c) + delta(rng), 0, 4);
        break;
      case 1: {
        const int n = std::uniform_int_distribution<int>(0, kMttLayers - 1)(rng);
        m.md[n].at(r, c) = std::clamp(m.md[n].at(r, c) + delta(rng), 0, 10);
        break;
      }
      default: {
        const int n = std::uniform_int_distribution<int>(0, kMttLayers - 1)(rng);
        m.mdir[n].at(r, c) = dir(rng);
        break;
      }
    }
  }
  return m;
}

struct FuzzedLog {
  std::string text;
  int width = 0;
  int height = 0;
  int frames = 0;
};

/// Random multi-frame log: records shuffled, NS leaves randomly omitted,
/// comment and blank lines sprinkled in.
inline FuzzedLog fuzz_split_log(std::mt19937_64& rng, const PartitionRules& rules = {})
{
  FuzzedLog log;
  std::uniform_int_distribution<int> cols_d(1, 3), rows_d(1, 2), frames_d(1, 3);
  const int cols = cols_d(rng), rows = rows_d(rng);
  log.width = cols * kCtuSize;
  log.height = rows * kCtuSize;
  log.frames = frames_d(rng);

  std::vector<SplitLogRecord> records;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int poc = 0; poc < log.frames; ++poc)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (coin(rng) < 0.25) continue;  // absent CTU, equal to an NS root
        const SplitTree t = random_legal_tree(rng, rules);
        append_tree_records(t, poc, c * kCtuSize, r * kCtuSize, records);
      }

  std::erase_if(records, [&](const SplitLogRecord& rec) {
    return rec.mode == SplitMode::NS && coin(rng) < 0.5;
  });
  std::shuffle(records.begin(), records.end(), rng);

  for (const SplitLogRecord& rec : records) {
    if (coin(rng) < 0.05) log.text += "# fuzz\n";
    if (coin(rng) < 0.05) log.text += "\n";
    log.text += split_log_to_string({rec});
  }
  return log;
}

}  // namespace qtmtt::testgen
