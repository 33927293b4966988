#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "frame.hpp"
#include "partition_map.hpp"

namespace qtmtt {

/// Dual-threshold CTU handling. th1/th2 act on the predicted MTT activity
/// probability: below th1 the CTU skips MTT outright, at or above th2 it
/// follows the network decisions, in between the encoder keeps its usual MTT
/// search. th2 == 1.0 turns the follow-network band off entirely.
struct GatingConfig {
  double th1 = 0.2;
  double th2 = 0.9;
  int d_max = 7;   // decision depth cap (qt_depth + mtt_stage)
  int level = 3;   // MTT layers taken from the prediction, 0..3
  PartitionRules rules{};
};

enum class CtuClass : std::uint8_t { MTT_ET, MTT_RDO, MTT_NN };

enum class GateAction : std::uint8_t { STOP, FORCE_QT, SKIP_MTT, FULL_RDO, FOLLOW_NN };

struct CtuPrediction {
  PartitionMap map;    // post-processed prediction
  double p_mask = 0.0; // predicted MTT activity probability
  int row = 0;
  int col = 0;
};

struct GatingReport {
  long n_et = 0;
  long n_rdo = 0;
  long n_nn = 0;
  std::int64_t nodes_full = 0;   // split-mode evaluations, exhaustive search
  std::int64_t nodes_gated = 0;  // split-mode evaluations left after gating
  double skip_ratio = 0.0;       // 1 - nodes_gated / nodes_full
  int level = 3;
};

inline CtuClass classify_ctu(double p_mask, const GatingConfig& cfg)
{
  if (p_mask < cfg.th1) return CtuClass::MTT_ET;
  if (cfg.th2 < 1.0 && p_mask >= cfg.th2) return CtuClass::MTT_NN;
  return CtuClass::MTT_RDO;
}

/// Per-node action: depth cap first, then prediction-forced QT until the
/// predicted QT depth is reached, then the class decides the MTT handling.
/// QT is never searched; it only ever follows the prediction.
inline GateAction gate_node(int depth, int qt_depth, int qd_pred, CtuClass cls,
                            const GatingConfig& cfg)
{
  if (depth > cfg.d_max) return GateAction::STOP;
  if (qt_depth < qd_pred) return GateAction::FORCE_QT;
  switch (cls) {
    case CtuClass::MTT_ET: return GateAction::SKIP_MTT;
    case CtuClass::MTT_NN: return GateAction::FOLLOW_NN;
    case CtuClass::MTT_RDO: return GateAction::FULL_RDO;
  }
  return GateAction::FULL_RDO;
}

namespace detail {

// One evaluation per legal mode at each visited node, recursing into every
// split alternative the exhaustive search would try.
inline std::int64_t full_search_evals(const CuGeometry& g, int qt_depth, int mtt_stage,
                                      const GatingConfig& cfg)
{
  const int depth = qt_depth + mtt_stage;
  if (depth > cfg.d_max) return 0;
  const auto modes = legal_splits(g, qt_depth, mtt_stage, cfg.rules);
  std::int64_t total = static_cast<std::int64_t>(modes.size());
  for (SplitMode m : modes) {
    if (m == SplitMode::NS) continue;
    for (const CuGeometry& c : apply_split(g, m))
      total += full_search_evals(c, qt_depth + (m == SplitMode::QT ? 1 : 0),
                                 mtt_stage + (is_mtt_split(m) ? 1 : 0), cfg);
  }
  return total;
}

// MTT-only search below a node whose QT depth already matches the prediction.
inline std::int64_t mtt_search_evals(const CuGeometry& g, int qt_depth, int mtt_stage,
                                     const GatingConfig& cfg)
{
  const int depth = qt_depth + mtt_stage;
  if (depth > cfg.d_max) return 0;
  std::int64_t total = 0;
  for (SplitMode m : legal_splits(g, qt_depth, mtt_stage, cfg.rules)) {
    if (m == SplitMode::QT) continue;
    ++total;
    if (m == SplitMode::NS) continue;
    for (const CuGeometry& c : apply_split(g, m))
      total += mtt_search_evals(c, qt_depth, mtt_stage + 1, cfg);
  }
  return total;
}

inline std::int64_t gated_ctu_evals(const CuGeometry& g, int qt_depth, const PartitionMap& pred,
                                    CtuClass cls, const GatingConfig& cfg)
{
  const GateAction a =
      gate_node(qt_depth, qt_depth, pred.qd.at(g.cy0(), g.cx0()), cls, cfg);
  switch (a) {
    case GateAction::STOP:
      return 0;
    case GateAction::FORCE_QT: {
      const auto legal = legal_splits(g, qt_depth, 0, cfg.rules);
      if (std::find(legal.begin(), legal.end(), SplitMode::QT) == legal.end())
        break;  // prediction deeper than the rules allow; fall through to MTT handling
      std::int64_t total = 0;
      for (const CuGeometry& c : apply_split(g, SplitMode::QT))
        total += gated_ctu_evals(c, qt_depth + 1, pred, cls, cfg);
      return total;
    }
    default:
      break;
  }
  switch (cls) {
    case CtuClass::MTT_ET:
    case CtuClass::MTT_NN:
      return 0;  // forced decisions, nothing evaluated
    case CtuClass::MTT_RDO:
      return mtt_search_evals(g, qt_depth, 0, cfg);
  }
  return 0;
}

}  // namespace detail

/// Node-count proxy for the encoder-side saving: compares split-mode
/// evaluation counts of the exhaustive search against the gated one. Forced
/// decisions (prediction-driven QT, skipped or followed MTT) evaluate
/// nothing; the acceleration level selects how much of the followed map is
/// applied and does not add evaluations. This is a search-size proxy, not an
/// encoding-time measurement.
inline GatingReport simulate_frame(const FramePartition& labels,
                                   const std::vector<CtuPrediction>& preds,
                                   const GatingConfig& cfg)
{
  if (cfg.th1 < 0.0 || cfg.th1 > cfg.th2 || cfg.th2 > 1.0)
    throw std::invalid_argument("simulate_frame: need 0 <= th1 <= th2 <= 1");
  if (cfg.level < 0 || cfg.level > kMttLayers)
    throw std::invalid_argument("simulate_frame: bad level");
  if (static_cast<long>(preds.size()) !=
      static_cast<long>(labels.ctu_rows()) * labels.ctu_cols())
    throw std::invalid_argument("simulate_frame: prediction/label CTU count mismatch");

  GatingReport rep;
  rep.level = cfg.level;
  const CuGeometry ctu{0, 0, kCtuSize, kCtuSize};
  const std::int64_t full_one = detail::full_search_evals(ctu, 0, 0, cfg);
  for (const CtuPrediction& p : preds) {
    if (p.row < 0 || p.row >= labels.ctu_rows() || p.col < 0 || p.col >= labels.ctu_cols())
      throw std::invalid_argument("simulate_frame: prediction CTU position out of range");
    const CtuClass cls = classify_ctu(p.p_mask, cfg);
    switch (cls) {
      case CtuClass::MTT_ET: ++rep.n_et; break;
      case CtuClass::MTT_RDO: ++rep.n_rdo; break;
      case CtuClass::MTT_NN: ++rep.n_nn; break;
    }
    const PartitionMap pruned = prune_map(p.map, cfg.level);
    rep.nodes_full += full_one;
    rep.nodes_gated += detail::gated_ctu_evals(ctu, 0, pruned, cls, cfg);
  }
  rep.skip_ratio = rep.nodes_full == 0
                       ? 0.0
                       : 1.0 - double(rep.nodes_gated) / double(rep.nodes_full);
  return rep;
}

/// Fraction of CTUs classified MTT_ET.
inline double et_ratio(const std::vector<double>& p_masks, const GatingConfig& cfg)
{
  if (p_masks.empty()) throw std::invalid_argument("et_ratio: empty input");
  long n = 0;
  for (double p : p_masks)
    if (classify_ctu(p, cfg) == CtuClass::MTT_ET) ++n;
  return double(n) / double(p_masks.size());
}

}  // namespace qtmtt
