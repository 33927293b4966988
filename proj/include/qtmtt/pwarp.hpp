#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qtmtt {

template <typename T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  T& at(int x, int y) { return data[std::size_t(y) * width + x]; }
  T at(int x, int y) const { return data[std::size_t(y) * width + x]; }

  bool operator==(const Plane&) const = default;
};

using LumaRaster = Plane<std::uint8_t>;
using RealPlane = Plane<double>;

/// Dense backward motion field, one (u, v) pair per pixel.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u, v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(std::size_t(w) * h, 0.0), v(std::size_t(w) * h, 0.0) {}

  std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }

  bool operator==(const FlowField&) const = default;
};

/// Real-valued QT depth at 4x4-pixel granularity (network-style output).
struct DepthField {
  int width = 0;   // cells
  int height = 0;  // cells
  std::vector<double> v;

  DepthField() = default;
  DepthField(int w, int h) : width(w), height(h), v(std::size_t(w) * h, 0.0) {}

  double& at(int x, int y) { return v[std::size_t(y) * width + x]; }
  double at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

/// Blockwise-mean smoothing of the flow. Depth k pools over 2^(7-k) pixel
/// blocks (128, 64, 32, 16) and broadcasts the mean back to every pixel.
inline FlowField pool_flow(const FlowField& f, int k)
{
  if (k < 0 || k > 3) throw std::invalid_argument("pool_flow: depth must be in 0..3");
  const int block = 128 >> k;
  if (f.width <= 0 || f.height <= 0 || f.width % block || f.height % block)
    throw std::invalid_argument("pool_flow: dimensions must be multiples of the block size");
  FlowField out(f.width, f.height);
  for (int by = 0; by < f.height; by += block)
    for (int bx = 0; bx < f.width; bx += block) {
      double su = 0.0, sv = 0.0;
      for (int y = by; y < by + block; ++y)
        for (int x = bx; x < bx + block; ++x) {
          su += f.u[f.idx(x, y)];
          sv += f.v[f.idx(x, y)];
        }
      const double n = double(block) * block;
      su /= n;
      sv /= n;
      for (int y = by; y < by + block; ++y)
        for (int x = bx; x < bx + block; ++x) {
          out.u[out.idx(x, y)] = su;
          out.v[out.idx(x, y)] = sv;
        }
    }
  return out;
}

/// Depth-adaptive flow: per pixel, the clamped depth q in [k, k+1) blends the
/// pooled fields as (k+1-q) * V(k) + (q-k) * V(k+1). Depths at or above 3 use
/// the finest bracket; the depth field is upsampled 4x nearest to pixels.
inline FlowField adaptive_flow(const FlowField& f, const DepthField& depth)
{
  if (f.width % 128 || f.height % 128 || f.width <= 0 || f.height <= 0)
    throw std::invalid_argument("adaptive_flow: flow dimensions must be multiples of 128");
  if (depth.width * 4 != f.width || depth.height * 4 != f.height)
    throw std::invalid_argument("adaptive_flow: depth grid does not match flow at 4x4 cells");
  constexpr double kDepthEps = 1e-6;
  FlowField pooled[4] = {pool_flow(f, 0), pool_flow(f, 1), pool_flow(f, 2), pool_flow(f, 3)};
  FlowField out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double q = depth.at(x / 4, y / 4);
      q = std::clamp(q, 0.0, 3.0 - kDepthEps);
      const int k = int(q);  // 0..2
      const double w1 = q - k;
      const std::size_t i = out.idx(x, y);
      out.u[i] = (1.0 - w1) * pooled[k].u[i] + w1 * pooled[k + 1].u[i];
      out.v[i] = (1.0 - w1) * pooled[k].v[i] + w1 * pooled[k + 1].v[i];
    }
  return out;
}

/// Backward warp with bilinear sampling; sample positions are clamped to the
/// picture edges.
inline RealPlane warp(const LumaRaster& ref, const FlowField& flow)
{
  if (ref.width != flow.width || ref.height != flow.height)
    throw std::invalid_argument("warp: reference and flow dimensions differ");
  RealPlane out(ref.width, ref.height);
  for (int y = 0; y < ref.height; ++y)
    for (int x = 0; x < ref.width; ++x) {
      double sx = x + flow.u[flow.idx(x, y)];
      double sy = y + flow.v[flow.idx(x, y)];
      sx = std::clamp(sx, 0.0, double(ref.width - 1));
      sy = std::clamp(sy, 0.0, double(ref.height - 1));
      const int x0 = int(sx), y0 = int(sy);
      const int x1 = std::min(x0 + 1, ref.width - 1);
      const int y1 = std::min(y0 + 1, ref.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      // bilinear interpolate
      const double top = (1.0 - fx) * ref.at(x0, y0) + fx * ref.at(x1, y0);
      const double bot = (1.0 - fx) * ref.at(x0, y1) + fx * ref.at(x1, y1);
      out.at(x, y) = (1.0 - fy) * top + fy * bot;
    }
  return out;
}

/// Partition-adaptive warped residual: cur minus the reference warped with
/// the depth-adaptive flow.
inline RealPlane pwarp_residual(const LumaRaster& cur, const LumaRaster& ref,
                                const FlowField& flow, const DepthField& depth)
{
  if (cur.width != ref.width || cur.height != ref.height)
    throw std::invalid_argument("pwarp_residual: frame dimensions differ");
  const RealPlane pred = warp(ref, adaptive_flow(flow, depth));
  RealPlane out(cur.width, cur.height);
  for (int y = 0; y < cur.height; ++y)
    for (int x = 0; x < cur.width; ++x) out.at(x, y) = double(cur.at(x, y)) - pred.at(x, y);
  return out;
}

inline int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

/// Replicates the last row/column out to the padded size.
inline LumaRaster replicate_pad(const LumaRaster& in, int multiple)
{
  const int w = round_up(in.width, multiple), h = round_up(in.height, multiple);
  if (w == in.width && h == in.height) return in;
  LumaRaster out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(x, y) = in.at(std::min(x, in.width - 1), std::min(y, in.height - 1));
  return out;
}

inline FlowField replicate_pad(const FlowField& in, int multiple)
{
  const int w = round_up(in.width, multiple), h = round_up(in.height, multiple);
  if (w == in.width && h == in.height) return in;
  FlowField out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t src = in.idx(std::min(x, in.width - 1), std::min(y, in.height - 1));
      out.u[out.idx(x, y)] = in.u[src];
      out.v[out.idx(x, y)] = in.v[src];
    }
  return out;
}

inline DepthField replicate_pad(const DepthField& in, int multiple)
{
  const int w = round_up(in.width, multiple), h = round_up(in.height, multiple);
  if (w == in.width && h == in.height) return in;
  DepthField out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(x, y) = in.at(std::min(x, in.width - 1), std::min(y, in.height - 1));
  return out;
}

template <typename T>
inline Plane<T> crop(const Plane<T>& in, int width, int height)
{
  if (width > in.width || height > in.height) throw std::invalid_argument("crop: enlarging");
  Plane<T> out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.at(x, y) = in.at(x, y);
  return out;
}

inline FlowField crop(const FlowField& in, int width, int height)
{
  if (width > in.width || height > in.height) throw std::invalid_argument("crop: enlarging");
  FlowField out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      out.u[out.idx(x, y)] = in.u[in.idx(x, y)];
      out.v[out.idx(x, y)] = in.v[in.idx(x, y)];
    }
  return out;
}

}  // namespace qtmtt
