#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frame.hpp"
#include "partition.hpp"
#include "partition_map.hpp"

namespace qtmtt {

/// One split decision in frame coordinates. A frame's records form a forest
/// rooted at the 128-aligned 128x128 rectangles.
struct SplitLogRecord {
  int poc = 0;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  SplitMode mode = SplitMode::NS;

  bool operator==(const SplitLogRecord&) const = default;
};

class SplitLogParseError : public std::runtime_error {
public:
  SplitLogParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }

  int line() const { return line_; }

private:
  int line_ = 0;
};

struct CtuTreeEntry {
  int poc = 0;
  int ctu_row = 0;
  int ctu_col = 0;
  SplitTree tree;  // CTU-local coordinates, root at (0,0)
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline int parse_int_field(std::string_view field, int line, const char* name)
{
  field = trim(field);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw SplitLogParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

struct NumberedRecord {
  SplitLogRecord rec;
  int line = 0;
};

inline std::vector<NumberedRecord> tokenize_split_log(std::string_view text)
{
  std::vector<NumberedRecord> records;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = stripped.find(',', start);
      fields.push_back(
          stripped.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6)
      throw SplitLogParseError(line_no, "expected 6 fields `poc,x,y,w,h,mode`, got " +
                                            std::to_string(fields.size()));

    SplitLogRecord r;
    r.poc = parse_int_field(fields[0], line_no, "poc");
    r.x = parse_int_field(fields[1], line_no, "x");
    r.y = parse_int_field(fields[2], line_no, "y");
    r.w = parse_int_field(fields[3], line_no, "w");
    r.h = parse_int_field(fields[4], line_no, "h");
    try {
      r.mode = split_mode_from_token(trim(fields[5]));
    } catch (const std::invalid_argument& e) {
      throw SplitLogParseError(line_no, e.what());
    }
    if (r.poc < 0 || r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0)
      throw SplitLogParseError(line_no, "negative position or empty rectangle");
    records.push_back({r, line_no});
  }
  return records;
}

struct LoggedNode {
  SplitMode mode = SplitMode::NS;
  int line = 0;
  bool used = false;
};

// (poc, x, y, w, h) identifies a node; rectangles shrink strictly along a
// path, so equal rectangles cannot nest.
using NodeKey = std::array<int, 5>;

inline SplitTree build_logged_tree(std::map<NodeKey, LoggedNode>& nodes, int poc, int ox, int oy,
                                   const CuGeometry& local, int qt_depth, int mtt_stage,
                                   const PartitionRules& rules)
{
  SplitTree t;
  t.geometry = local;
  t.qt_depth = qt_depth;
  t.mtt_stage = mtt_stage;
  t.mode = SplitMode::NS;

  const auto it = nodes.find({poc, ox + local.x, oy + local.y, local.w, local.h});
  if (it != nodes.end()) {
    it->second.used = true;
    t.mode = it->second.mode;
    if (t.mode != SplitMode::NS) {
      const auto legal = legal_splits(local, qt_depth, mtt_stage, rules);
      if (std::find(legal.begin(), legal.end(), t.mode) == legal.end())
        throw SplitLogParseError(it->second.line,
                                 "split " + std::string(to_token(t.mode)) + " is illegal for " +
                                     std::to_string(local.w) + "x" + std::to_string(local.h) +
                                     " at qt depth " + std::to_string(qt_depth));
    }
  }
  if (t.mode == SplitMode::NS) return t;

  const bool qt = t.mode == SplitMode::QT;
  for (const CuGeometry& cg : apply_split(local, t.mode))
    t.children.push_back(build_logged_tree(nodes, poc, ox, oy, cg, qt ? qt_depth + 1 : qt_depth,
                                           qt ? 0 : mtt_stage + 1, rules));
  return t;
}

}  // namespace detail

inline std::vector<SplitLogRecord> parse_split_log_records(std::string_view text)
{
  std::vector<SplitLogRecord> out;
  for (const detail::NumberedRecord& nr : detail::tokenize_split_log(text)) out.push_back(nr.rec);
  return out;
}

/// Rebuilds each CTU's split tree from logged decisions. Records may appear
/// in any order; children without a record default to NS. Conflicting
/// duplicates, records no tree reaches, and illegal splits are errors.
inline std::vector<CtuTreeEntry> parse_split_log(std::string_view text,
                                                 const PartitionRules& rules = {})
{
  std::map<detail::NodeKey, detail::LoggedNode> nodes;
  for (const detail::NumberedRecord& nr : detail::tokenize_split_log(text)) {
    const SplitLogRecord& r = nr.rec;
    const detail::NodeKey key{r.poc, r.x, r.y, r.w, r.h};
    const auto [it, inserted] = nodes.insert({key, {r.mode, nr.line, false}});
    if (!inserted && it->second.mode != r.mode)
      throw SplitLogParseError(nr.line, "conflicting duplicate for rectangle at (" +
                                            std::to_string(r.x) + "," + std::to_string(r.y) +
                                            "), earlier line " + std::to_string(it->second.line));
  }

  std::vector<CtuTreeEntry> entries;
  for (const auto& [key, node] : nodes) {
    const auto [poc, x, y, w, h] = key;
    if (w != kCtuSize || h != kCtuSize || x % kCtuSize != 0 || y % kCtuSize != 0) continue;
    CtuTreeEntry e;
    e.poc = poc;
    e.ctu_row = y / kCtuSize;
    e.ctu_col = x / kCtuSize;
    e.tree = detail::build_logged_tree(nodes, poc, x, y, CuGeometry{0, 0, kCtuSize, kCtuSize}, 0,
                                       0, rules);
    entries.push_back(e);
  }

  for (const auto& [key, node] : nodes)
    if (!node.used)
      throw SplitLogParseError(node.line, "record not reachable from any 128x128 root");
  return entries;
}

/// Converts a parsed log into per-frame CTU grids. `frame_count` < 0 derives
/// the count from the highest POC present.
inline std::vector<FramePartition> split_log_to_frames(const std::vector<CtuTreeEntry>& entries,
                                                       int width, int height,
                                                       int frame_count = -1)
{
  if (frame_count < 0) {
    frame_count = 0;
    for (const CtuTreeEntry& e : entries) frame_count = std::max(frame_count, e.poc + 1);
  }
  std::vector<FramePartition> frames;
  frames.reserve(std::size_t(frame_count));
  for (int poc = 0; poc < frame_count; ++poc)
    frames.push_back(make_frame_partition(poc, width, height));
  for (const CtuTreeEntry& e : entries) {
    if (e.poc >= frame_count)
      throw std::invalid_argument("split_log_to_frames: POC " + std::to_string(e.poc) +
                                  " beyond frame count " + std::to_string(frame_count));
    FramePartition& f = frames[std::size_t(e.poc)];
    if (e.ctu_row >= f.ctu_rows() || e.ctu_col >= f.ctu_cols())
      throw std::invalid_argument("split_log_to_frames: CTU (" + std::to_string(e.ctu_row) + "," +
                                  std::to_string(e.ctu_col) + ") outside " +
                                  std::to_string(width) + "x" + std::to_string(height));
    f.at(e.ctu_row, e.ctu_col) = tree_to_map(e.tree);
  }
  return frames;
}

/// Appends one CTU tree as records in preorder, translating the tree's
/// CTU-local coordinates by the CTU origin.
inline void append_tree_records(const SplitTree& t, int poc, int origin_x, int origin_y,
                                std::vector<SplitLogRecord>& out)
{
  out.push_back({poc, origin_x + t.geometry.x, origin_y + t.geometry.y, t.geometry.w,
                 t.geometry.h, t.mode});
  for (const SplitTree& c : t.children) append_tree_records(c, poc, origin_x, origin_y, out);
}

inline std::string split_log_to_string(const std::vector<SplitLogRecord>& records)
{
  std::string out;
  for (const SplitLogRecord& r : records) {
    out += std::to_string(r.poc);
    out += ',';
    out += std::to_string(r.x);
    out += ',';
    out += std::to_string(r.y);
    out += ',';
    out += std::to_string(r.w);
    out += ',';
    out += std::to_string(r.h);
    out += ',';
    out += to_token(r.mode);
    out += '\n';
  }
  return out;
}

}  // namespace qtmtt
