#pragma once

#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "io_util.hpp"
#include "partition_map.hpp"

namespace qtmtt {

/// All CTU maps of one frame. The CTU grid covers the padded picture; cells
/// whose top-left pixel falls outside width x height do not enter metrics.
struct FramePartition {
  int poc = 0;
  int width = 0;
  int height = 0;
  std::vector<PartitionMap> ctus;  // row-major

  int ctu_rows() const { return (height + kCtuSize - 1) / kCtuSize; }
  int ctu_cols() const { return (width + kCtuSize - 1) / kCtuSize; }

  PartitionMap& at(int row, int col) { return ctus[row * ctu_cols() + col]; }
  const PartitionMap& at(int row, int col) const { return ctus[row * ctu_cols() + col]; }

  bool operator==(const FramePartition&) const = default;
};

inline FramePartition make_frame_partition(int poc, int width, int height)
{
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("frame dimensions must be positive");
  FramePartition f;
  f.poc = poc;
  f.width = width;
  f.height = height;
  f.ctus.resize(static_cast<std::size_t>(f.ctu_rows()) * f.ctu_cols());
  return f;
}

struct LayerAccuracy {
  double qd = 0.0;
  double mask = 0.0;
  std::array<double, kMttLayers> md{};
  std::array<double, kMttLayers> mdir{};
};

/// Fraction of in-picture cells where prediction equals label, per layer; the
/// mask entry is the fraction of CTUs with matching masks.
inline LayerAccuracy layer_accuracy(const FramePartition& pred, const FramePartition& label)
{
  if (pred.width != label.width || pred.height != label.height)
    throw std::invalid_argument("layer_accuracy: frame geometry mismatch");
  LayerAccuracy acc;
  long cells = 0, qd_ok = 0, mask_ok = 0;
  std::array<long, kMttLayers> md_ok{}, mdir_ok{};
  const int rows = label.ctu_rows(), cols = label.ctu_cols();
  for (int cr = 0; cr < rows; ++cr)
    for (int cc = 0; cc < cols; ++cc) {
      const PartitionMap& p = pred.at(cr, cc);
      const PartitionMap& l = label.at(cr, cc);
      if (p.mask == l.mask) ++mask_ok;
      for (int r = 0; r < kGridSize; ++r)
        for (int c = 0; c < kGridSize; ++c) {
          const int px = cc * kCtuSize + c * kCellSize;
          const int py = cr * kCtuSize + r * kCellSize;
          if (px >= label.width || py >= label.height) continue;
          ++cells;
          if (p.qd.at(r, c) == l.qd.at(r, c)) ++qd_ok;
          for (int n = 0; n < kMttLayers; ++n) {
            if (p.md[n].at(r, c) == l.md[n].at(r, c)) ++md_ok[n];
            if (p.mdir[n].at(r, c) == l.mdir[n].at(r, c)) ++mdir_ok[n];
          }
        }
    }
  if (cells == 0) throw std::invalid_argument("layer_accuracy: no in-picture cells");
  acc.qd = double(qd_ok) / cells;
  acc.mask = double(mask_ok) / (rows * cols);
  for (int n = 0; n < kMttLayers; ++n) {
    acc.md[n] = double(md_ok[n]) / cells;
    acc.mdir[n] = double(mdir_ok[n]) / cells;
  }
  return acc;
}

class PmapParseError : public std::runtime_error {
 public:
  PmapParseError(int line, const std::string& what)
      : std::runtime_error("pmap line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline void write_grid(std::ostream& os, const CellGrid& g)
{
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (c) os << ' ';
      os << g.at(r, c);
    }
    os << '\n';
  }
}

struct LineReader {
  std::istream& in;
  int line_no = 0;

  bool next(std::istringstream& out)
  {
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    out.clear();
    out.str(line);
    return true;
  }
};

inline void read_grid(LineReader& lr, CellGrid& g)
{
  std::istringstream ls;
  for (int r = 0; r < kGridSize; ++r) {
    if (!lr.next(ls)) throw PmapParseError(lr.line_no + 1, "unexpected end of file in grid");
    for (int c = 0; c < kGridSize; ++c) {
      int v;
      if (!(ls >> v)) throw PmapParseError(lr.line_no, "expected 32 integers");
      g.at(r, c) = v;
    }
    int extra;
    if (ls >> extra) throw PmapParseError(lr.line_no, "trailing values in grid row");
  }
}

}  // namespace detail

// Text format, one frame per file:
//   PMAP1 <poc> <width> <height>
// then per CTU in row-major order:
//   CTU <row> <col> <mask>
// followed by seven 32x32 integer grids (qd, md1..md3, mdir1..mdir3),
// one grid row per line.
inline void write_pmap(std::ostream& os, const FramePartition& f)
{
  os << "PMAP1 " << f.poc << ' ' << f.width << ' ' << f.height << '\n';
  for (int r = 0; r < f.ctu_rows(); ++r)
    for (int c = 0; c < f.ctu_cols(); ++c) {
      const PartitionMap& m = f.at(r, c);
      os << "CTU " << r << ' ' << c << ' ' << (m.mask ? 1 : 0) << '\n';
      detail::write_grid(os, m.qd);
      for (int n = 0; n < kMttLayers; ++n) detail::write_grid(os, m.md[n]);
      for (int n = 0; n < kMttLayers; ++n) detail::write_grid(os, m.mdir[n]);
    }
}

inline FramePartition read_pmap(std::istream& is)
{
  detail::LineReader lr{is};
  std::istringstream ls;
  if (!lr.next(ls)) throw PmapParseError(1, "empty file");
  std::string magic;
  int poc, width, height;
  if (!(ls >> magic >> poc >> width >> height) || magic != "PMAP1")
    throw PmapParseError(lr.line_no, "bad header, expected 'PMAP1 poc width height'");
  if (width <= 0 || height <= 0) throw PmapParseError(lr.line_no, "bad frame dimensions");
  FramePartition f = make_frame_partition(poc, width, height);
  std::vector<bool> seen(f.ctus.size(), false);
  for (std::size_t i = 0; i < f.ctus.size(); ++i) {
    if (!lr.next(ls)) throw PmapParseError(lr.line_no + 1, "missing CTU block");
    std::string tag;
    int row, col, mask;
    if (!(ls >> tag >> row >> col >> mask) || tag != "CTU" || (mask != 0 && mask != 1))
      throw PmapParseError(lr.line_no, "bad CTU header");
    if (row < 0 || row >= f.ctu_rows() || col < 0 || col >= f.ctu_cols())
      throw PmapParseError(lr.line_no, "CTU position out of range");
    const std::size_t idx = static_cast<std::size_t>(row) * f.ctu_cols() + col;
    if (seen[idx]) throw PmapParseError(lr.line_no, "duplicate CTU block");
    seen[idx] = true;
    PartitionMap& m = f.ctus[idx];
    m.mask = mask == 1;
    detail::read_grid(lr, m.qd);
    for (int n = 0; n < kMttLayers; ++n) detail::read_grid(lr, m.md[n]);
    for (int n = 0; n < kMttLayers; ++n) detail::read_grid(lr, m.mdir[n]);
  }
  if (lr.next(ls)) {
    std::string stray;
    if (ls >> stray) throw PmapParseError(lr.line_no, "trailing content after last CTU");
  }
  return f;
}

inline std::string pmap_to_string(const FramePartition& f)
{
  std::ostringstream ss;
  write_pmap(ss, f);
  return ss.str();
}

inline FramePartition read_pmap_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_pmap(in);
  } catch (const PmapParseError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void write_pmap_file(const std::filesystem::path& path, const FramePartition& f)
{
  write_file_atomic(path, pmap_to_string(f));
}

}  // namespace qtmtt
