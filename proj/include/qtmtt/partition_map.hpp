#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "partition.hpp"

namespace qtmtt {

/// 32x32 grid of per-cell integers covering one CTU at 4x4-pixel granularity.
struct CellGrid {
  std::array<int, kGridCells> v{};

  int& at(int row, int col) { return v[row * kGridSize + col]; }
  int at(int row, int col) const { return v[row * kGridSize + col]; }
  void fill(int value) { v.fill(value); }

  bool operator==(const CellGrid&) const = default;
};

/// Per-CTU partition map: QT depth layer, three cumulative MTT depth layers,
/// three MTT direction layers (+1 horizontal, -1 vertical, 0 none), and the
/// MTT activity mask. For maps produced from trees,
///   qd <= md[0] <= md[1] <= md[2], per-layer increments are in {0,1,2},
/// and mdir[n] is nonzero exactly where layer n carries an increment.
struct PartitionMap {
  CellGrid qd;
  std::array<CellGrid, kMttLayers> md;
  std::array<CellGrid, kMttLayers> mdir;
  bool mask = false;

  bool operator==(const PartitionMap&) const = default;
};

/// Root CU state for conversions and searches rooted below the CTU.
struct CuState {
  CuGeometry geom{};
  int qt_depth = 0;
  int mtt_stage = 0;
};

inline CuState ctu_root() { return CuState{}; }

/// A map region that cannot be interpreted as a legal split tree.
class MapDecodeError : public std::runtime_error {
 public:
  MapDecodeError(const CuGeometry& block, const std::string& what)
      : std::runtime_error("undecodable map block " + qtmtt::to_string(block) + ": " + what),
        block_(block) {}
  const CuGeometry& block() const { return block_; }

 private:
  CuGeometry block_;
};

/// MTT activity mask: false when the predicted QT depth dominates the first
/// MTT layer on every cell, i.e. no cell calls for a BT/TT split.
inline bool derive_mtt_mask(const CellGrid& qd, const CellGrid& md0)
{
  for (int i = 0; i < kGridCells; ++i)
    if (qd.v[i] < md0.v[i]) return true;
  return false;
}

namespace detail {

inline void write_tree_layers(const SplitTree& t, CellGrid& qd,
                              std::array<CellGrid, kMttLayers>& inc,
                              std::array<CellGrid, kMttLayers>& dir)
{
  if (t.mode == SplitMode::NS) {
    for (int r = t.geometry.cy0(); r < t.geometry.cy1(); ++r)
      for (int c = t.geometry.cx0(); c < t.geometry.cx1(); ++c)
        qd.at(r, c) = t.qt_depth;
    return;
  }
  if (is_mtt_split(t.mode)) {
    const int layer = t.mtt_stage;  // this split consumes stage layer+1
    const int d = is_horizontal(t.mode) ? 1 : -1;
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      const CuGeometry& g = t.children[i].geometry;
      const int add = child_md_increment(t.mode, i);
      for (int r = g.cy0(); r < g.cy1(); ++r)
        for (int c = g.cx0(); c < g.cx1(); ++c) {
          inc[layer].at(r, c) = add;
          dir[layer].at(r, c) = d;
        }
    }
  }
  for (const auto& c : t.children) write_tree_layers(c, qd, inc, dir);
}

}  // namespace detail

/// Converts a split tree into its partition map. The tree must satisfy the
/// SplitTree invariants; cells not covered by the tree (sub-CTU roots) stay 0.
inline PartitionMap tree_to_map(const SplitTree& t)
{
  if (t.mtt_stage != 0 && t.mode == SplitMode::QT)
    throw std::invalid_argument("tree_to_map: QT below MTT");
  PartitionMap m;
  std::array<CellGrid, kMttLayers> inc{};
  detail::write_tree_layers(t, m.qd, inc, m.mdir);
  for (int i = 0; i < kGridCells; ++i) {
    int d = m.qd.v[i];
    for (int n = 0; n < kMttLayers; ++n) {
      d += inc[n].v[i];
      m.md[n].v[i] = d;
    }
  }
  m.mask = derive_mtt_mask(m.qd, m.md[0]);
  return m;
}

namespace detail {

inline SplitTree decode_mtt(const PartitionMap& m, const CuGeometry& g, int qt_depth, int stage,
                            const PartitionRules& rules);

inline SplitTree decode_qt(const PartitionMap& m, const CuGeometry& g, int qt_depth,
                           const PartitionRules& rules)
{
  bool all_eq = true, all_deeper = true;
  for (int r = g.cy0(); r < g.cy1(); ++r)
    for (int c = g.cx0(); c < g.cx1(); ++c) {
      const int v = m.qd.at(r, c);
      if (v != qt_depth) all_eq = false;
      if (v < qt_depth + 1) all_deeper = false;
    }
  if (all_eq) return decode_mtt(m, g, qt_depth, 0, rules);
  if (!all_deeper) throw MapDecodeError(g, "mixed QT depth");
  const auto legal = legal_splits(g, qt_depth, 0, rules);
  if (std::find(legal.begin(), legal.end(), SplitMode::QT) == legal.end())
    throw MapDecodeError(g, "QT depth exceeds legal range");
  SplitTree t{g, SplitMode::QT, qt_depth, 0, {}};
  for (const CuGeometry& cg : apply_split(g, SplitMode::QT))
    t.children.push_back(decode_qt(m, cg, qt_depth + 1, rules));
  return t;
}

inline SplitTree decode_mtt(const PartitionMap& m, const CuGeometry& g, int qt_depth, int stage,
                            const PartitionRules& rules)
{
  auto prev = [&](int r, int c) { return stage == 0 ? m.qd.at(r, c) : m.md[stage - 1].at(r, c); };

  if (stage == kMttLayers) return SplitTree{g, SplitMode::NS, qt_depth, stage, {}};

  bool any_inc = false;
  for (int r = g.cy0(); r < g.cy1() && !any_inc; ++r)
    for (int c = g.cx0(); c < g.cx1(); ++c)
      if (m.md[stage].at(r, c) != prev(r, c)) { any_inc = true; break; }

  if (!any_inc) {
    // Leaf: every remaining layer must inherit and carry no direction.
    for (int n = stage; n < kMttLayers; ++n)
      for (int r = g.cy0(); r < g.cy1(); ++r)
        for (int c = g.cx0(); c < g.cx1(); ++c) {
          const int base = n == 0 ? m.qd.at(r, c) : m.md[n - 1].at(r, c);
          if (m.md[n].at(r, c) != base)
            throw MapDecodeError(g, "depth increment after leaf layer " + std::to_string(stage));
          if (m.mdir[n].at(r, c) != 0)
            throw MapDecodeError(g, "direction without depth increment");
        }
    return SplitTree{g, SplitMode::NS, qt_depth, stage, {}};
  }

  int dir = m.mdir[stage].at(g.cy0(), g.cx0());
  if (dir != 1 && dir != -1) throw MapDecodeError(g, "direction missing");
  for (int r = g.cy0(); r < g.cy1(); ++r)
    for (int c = g.cx0(); c < g.cx1(); ++c)
      if (m.mdir[stage].at(r, c) != dir) throw MapDecodeError(g, "direction not uniform");

  // Classify the increment pattern as BT (+1 everywhere) or TT (+2/+1/+2).
  auto inc_uniform = [&](const CuGeometry& sub, int want) {
    for (int r = sub.cy0(); r < sub.cy1(); ++r)
      for (int c = sub.cx0(); c < sub.cx1(); ++c)
        if (m.md[stage].at(r, c) - prev(r, c) != want) return false;
    return true;
  };
  SplitMode mode;
  if (inc_uniform(g, 1)) {
    mode = dir == 1 ? SplitMode::BT_H : SplitMode::BT_V;
  } else {
    mode = dir == 1 ? SplitMode::TT_H : SplitMode::TT_V;
    const int side = dir == 1 ? g.h : g.w;
    if (side / 4 < kCellSize) throw MapDecodeError(g, "increment pattern fits no split");
    const auto thirds = apply_split(g, mode);
    for (std::size_t i = 0; i < thirds.size(); ++i)
      if (!inc_uniform(thirds[i], child_md_increment(mode, i)))
        throw MapDecodeError(g, "increment pattern fits no split");
  }
  const auto legal = legal_splits(g, qt_depth, stage, rules);
  if (std::find(legal.begin(), legal.end(), mode) == legal.end())
    throw MapDecodeError(g, std::string(to_token(mode)) + " illegal under rules");

  SplitTree t{g, mode, qt_depth, stage, {}};
  for (const CuGeometry& cg : apply_split(g, mode))
    t.children.push_back(decode_mtt(m, cg, qt_depth, stage + 1, rules));
  return t;
}

}  // namespace detail

/// Exact inverse of tree_to_map. Throws MapDecodeError (with the first
/// offending block) when the grids do not describe a legal tree.
inline SplitTree map_to_tree_exact(const PartitionMap& m, const PartitionRules& rules,
                                   const CuState& root = ctu_root())
{
  if (root.mtt_stage != 0) throw std::invalid_argument("map_to_tree_exact: MTT root");
  return detail::decode_qt(m, root.geom, root.qt_depth, rules);
}

struct ValidityReport {
  bool valid = false;
  int inconsistent_cells = 0;
  double inconsistency_error = 0.0;  // inconsistent_cells / kGridCells
};

namespace detail {

// Majority-vote projection of the QT depth layer: a block whose cells agree
// with the expected depth on at least half its area becomes a leaf (deviants
// counted); otherwise descend into quadrants with depth + 1.
inline int project_qd(const CellGrid& qd, int r0, int c0, int side, int depth)
{
  int eq = 0;
  for (int r = r0; r < r0 + side; ++r)
    for (int c = c0; c < c0 + side; ++c)
      if (qd.at(r, c) == depth) ++eq;
  if (2 * eq >= side * side || side == 1) return side * side - eq;
  const int h = side / 2;
  return project_qd(qd, r0, c0, h, depth + 1) + project_qd(qd, r0, c0 + h, h, depth + 1) +
         project_qd(qd, r0 + h, c0, h, depth + 1) + project_qd(qd, r0 + h, c0 + h, h, depth + 1);
}

}  // namespace detail

/// Validity = decodability under the rules. The inconsistency error counts
/// cells the majority-vote projection of the QT layer would alter.
inline ValidityReport validate_map(const PartitionMap& m, const PartitionRules& rules)
{
  ValidityReport rep;
  try {
    (void)map_to_tree_exact(m, rules);
    rep.valid = true;
  } catch (const MapDecodeError&) {
    rep.valid = false;
  }
  rep.inconsistent_cells = detail::project_qd(m.qd, 0, 0, kGridSize, 0);
  rep.inconsistency_error = double(rep.inconsistent_cells) / kGridCells;
  return rep;
}

/// Keeps MTT layers 1..level and flattens the deeper ones onto the last kept
/// layer (level 0 leaves the QT layer only). The mask is preserved.
inline PartitionMap prune_map(const PartitionMap& m, int level)
{
  if (level < 0 || level > kMttLayers)
    throw std::invalid_argument("prune_map: level out of range");
  PartitionMap out = m;
  for (int n = level; n < kMttLayers; ++n) {
    out.md[n] = n == 0 ? m.qd : out.md[n - 1];
    out.mdir[n].fill(0);
  }
  return out;
}

}  // namespace qtmtt
