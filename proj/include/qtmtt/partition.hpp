#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qtmtt {

inline constexpr int kCtuSize   = 128;                   // luma pixels per CTU side
inline constexpr int kCellSize  = 4;                     // map granularity in pixels
inline constexpr int kGridSize  = kCtuSize / kCellSize;  // 32 cells per CTU side
inline constexpr int kGridCells = kGridSize * kGridSize;
inline constexpr int kMttLayers = 3;

/// Split modes of the QT+MTT coding tree. NS marks a leaf.
enum class SplitMode : std::uint8_t { NS = 0, QT, BT_H, BT_V, TT_H, TT_V };

inline constexpr std::array<SplitMode, 6> kAllSplitModes = {
    SplitMode::NS,   SplitMode::QT,   SplitMode::BT_H,
    SplitMode::BT_V, SplitMode::TT_H, SplitMode::TT_V};

constexpr std::string_view to_token(SplitMode m)
{
  switch (m) {
    case SplitMode::NS:   return "NS";
    case SplitMode::QT:   return "QT";
    case SplitMode::BT_H: return "BTH";
    case SplitMode::BT_V: return "BTV";
    case SplitMode::TT_H: return "TTH";
    case SplitMode::TT_V: return "TTV";
  }
  return "??";
}

inline SplitMode split_mode_from_token(std::string_view s)
{
  for (SplitMode m : kAllSplitModes)
    if (s == to_token(m)) return m;
  throw std::invalid_argument("unknown split mode token '" + std::string(s) + "'");
}

constexpr bool is_mtt_split(SplitMode m) { return m >= SplitMode::BT_H; }
constexpr bool is_horizontal(SplitMode m) { return m == SplitMode::BT_H || m == SplitMode::TT_H; }

/// CU rectangle in luma pixels, CTU-local unless stated otherwise.
/// All coordinates and sizes are multiples of the cell size.
struct CuGeometry {
  int x = 0;
  int y = 0;
  int w = kCtuSize;
  int h = kCtuSize;

  // Covered cell range, half-open.
  constexpr int cx0() const { return x / kCellSize; }
  constexpr int cy0() const { return y / kCellSize; }
  constexpr int cx1() const { return (x + w) / kCellSize; }
  constexpr int cy1() const { return (y + h) / kCellSize; }
  constexpr int cells() const { return (w / kCellSize) * (h / kCellSize); }

  bool operator==(const CuGeometry&) const = default;
};

inline bool is_valid_geometry(const CuGeometry& g)
{
  auto aligned = [](int v) { return v % kCellSize == 0; };
  return g.w >= kCellSize && g.h >= kCellSize && g.w <= kCtuSize && g.h <= kCtuSize &&
         g.x >= 0 && g.y >= 0 && aligned(g.x) && aligned(g.y) && aligned(g.w) && aligned(g.h);
}

inline std::string to_string(const CuGeometry& g)
{
  return "(" + std::to_string(g.x) + "," + std::to_string(g.y) + " " +
         std::to_string(g.w) + "x" + std::to_string(g.h) + ")";
}

/// Partitioning constraints mirroring the usual inter-coding setup.
struct PartitionRules {
  int min_cu_side   = 4;
  int max_qt_depth  = 4;
  int max_mtt_stage = 3;
  int max_bt_side   = 64;
  int max_tt_side   = 64;
  bool allow_qt_after_mtt = false;

  bool operator==(const PartitionRules&) const = default;
};

/// Recursive split decision tree for one CTU (or a sub-CU used as search root).
/// qt_depth counts QT splits above the node, mtt_stage counts BT/TT splits.
/// QT never appears below a BT/TT node, and mtt_stage never exceeds kMttLayers.
struct SplitTree {
  CuGeometry geometry;
  SplitMode mode = SplitMode::NS;
  int qt_depth = 0;
  int mtt_stage = 0;
  std::vector<SplitTree> children;

  bool operator==(const SplitTree&) const = default;
};

/// Modes permitted at a node, in canonical order (NS first).
inline std::vector<SplitMode> legal_splits(const CuGeometry& g, int qt_depth, int mtt_stage,
                                           const PartitionRules& r)
{
  std::vector<SplitMode> out;
  out.push_back(SplitMode::NS);
  const int long_side = g.w > g.h ? g.w : g.h;
  if ((mtt_stage == 0 || r.allow_qt_after_mtt) && g.w == g.h &&
      g.w / 2 >= r.min_cu_side && qt_depth < r.max_qt_depth)
    out.push_back(SplitMode::QT);
  if (mtt_stage < r.max_mtt_stage) {
    if (long_side <= r.max_bt_side && g.h / 2 >= r.min_cu_side) out.push_back(SplitMode::BT_H);
    if (long_side <= r.max_bt_side && g.w / 2 >= r.min_cu_side) out.push_back(SplitMode::BT_V);
    if (long_side <= r.max_tt_side && g.h / 4 >= r.min_cu_side) out.push_back(SplitMode::TT_H);
    if (long_side <= r.max_tt_side && g.w / 4 >= r.min_cu_side) out.push_back(SplitMode::TT_V);
  }
  return out;
}

/// Child rectangles of a split, top-to-bottom then left-to-right.
inline std::vector<CuGeometry> apply_split(const CuGeometry& g, SplitMode m)
{
  switch (m) {
    case SplitMode::NS:
      return {};
    case SplitMode::QT: {
      const int hw = g.w / 2, hh = g.h / 2;
      return {{g.x, g.y, hw, hh}, {g.x + hw, g.y, hw, hh},
              {g.x, g.y + hh, hw, hh}, {g.x + hw, g.y + hh, hw, hh}};
    }
    case SplitMode::BT_H: {
      const int hh = g.h / 2;
      return {{g.x, g.y, g.w, hh}, {g.x, g.y + hh, g.w, hh}};
    }
    case SplitMode::BT_V: {
      const int hw = g.w / 2;
      return {{g.x, g.y, hw, g.h}, {g.x + hw, g.y, hw, g.h}};
    }
    case SplitMode::TT_H: {
      const int q = g.h / 4;
      return {{g.x, g.y, g.w, q}, {g.x, g.y + q, g.w, 2 * q}, {g.x, g.y + 3 * q, g.w, q}};
    }
    case SplitMode::TT_V: {
      const int q = g.w / 4;
      return {{g.x, g.y, q, g.h}, {g.x + q, g.y, 2 * q, g.h}, {g.x + 3 * q, g.y, q, g.h}};
    }
  }
  throw std::invalid_argument("apply_split: bad mode");
}

/// Depth added by an MTT split for the given child. The TT middle child gains 1,
/// the quarter-sized end children gain 2; BT children gain 1.
constexpr int child_md_increment(SplitMode m, std::size_t child_index)
{
  if (m == SplitMode::TT_H || m == SplitMode::TT_V) return child_index == 1 ? 1 : 2;
  return 1;
}

inline int count_splits(const SplitTree& t)
{
  int n = t.mode == SplitMode::NS ? 0 : 1;
  for (const auto& c : t.children) n += count_splits(c);
  return n;
}

inline int count_nodes(const SplitTree& t)
{
  int n = 1;
  for (const auto& c : t.children) n += count_nodes(c);
  return n;
}

/// Checks structural soundness: geometry alignment, child tiling and depth
/// bookkeeping per mode, legality of every split under the rules, no QT below
/// any BT/TT node, and the MTT stage cap. Fills `why` with the first violation.
inline bool is_valid_split_tree(const SplitTree& t, const PartitionRules& r,
                                std::string* why = nullptr)
{
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg + " at " + to_string(t.geometry);
    return false;
  };
  if (!is_valid_geometry(t.geometry)) return fail("bad geometry");
  if (t.mtt_stage > kMttLayers) return fail("mtt_stage exceeds layer count");
  if (t.mode == SplitMode::QT && t.mtt_stage != 0) return fail("QT below MTT");
  if (t.mode == SplitMode::NS) {
    if (!t.children.empty()) return fail("leaf with children");
    return true;
  }
  const auto legal = legal_splits(t.geometry, t.qt_depth, t.mtt_stage, r);
  if (std::find(legal.begin(), legal.end(), t.mode) == legal.end())
    return fail(std::string("illegal mode ") + std::string(to_token(t.mode)));
  const auto rects = apply_split(t.geometry, t.mode);
  if (t.children.size() != rects.size()) return fail("child count mismatch");
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const SplitTree& c = t.children[i];
    if (!(c.geometry == rects[i])) return fail("child tiling mismatch");
    const int want_qt = t.qt_depth + (t.mode == SplitMode::QT ? 1 : 0);
    const int want_mtt = t.mtt_stage + (is_mtt_split(t.mode) ? 1 : 0);
    if (c.qt_depth != want_qt || c.mtt_stage != want_mtt) return fail("child depth mismatch");
    if (!is_valid_split_tree(c, r, why)) return false;
  }
  return true;
}

}  // namespace qtmtt
