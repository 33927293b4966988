#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "io_util.hpp"
#include "pwarp.hpp"

namespace qtmtt {

namespace detail {

inline void put_u32le(std::string& s, std::uint32_t v)
{
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}

inline void put_i16le(std::string& s, std::int16_t v)
{
  const std::uint16_t u = static_cast<std::uint16_t>(v);
  s.push_back(char(u & 0xff));
  s.push_back(char((u >> 8) & 0xff));
}

inline void put_f32le(std::string& s, float v)
{
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32le(s, u);
}

struct ByteReader {
  const std::string& s;
  std::size_t pos = 0;
  std::string name;

  void need(std::size_t n) const
  {
    if (pos + n > s.size()) throw std::runtime_error(name + ": truncated file");
  }
  std::uint32_t u32le()
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | std::uint8_t(s[pos + i]);
    pos += 4;
    return v;
  }
  std::int16_t i16le()
  {
    need(2);
    const std::uint16_t v = std::uint16_t(std::uint8_t(s[pos])) |
                            (std::uint16_t(std::uint8_t(s[pos + 1])) << 8);
    pos += 2;
    return static_cast<std::int16_t>(v);
  }
  float f32le()
  {
    const std::uint32_t u = u32le();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  }
};

inline void check_dims(long w, long h, const std::string& name)
{
  if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16)
    throw std::runtime_error(name + ": implausible dimensions " + std::to_string(w) + "x" +
                             std::to_string(h));
}

}  // namespace detail

// ---- PGM (P5, maxval 255) ----

inline LumaRaster read_pgm(const std::string& bytes, const std::string& name = "pgm")
{
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(std::uint8_t(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws();
    if (pos >= bytes.size() || !std::isdigit(std::uint8_t(bytes[pos])))
      throw std::runtime_error(name + ": malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(std::uint8_t(bytes[pos])))
      v = v * 10 + (bytes[pos++] - '0');
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw std::runtime_error(name + ": not a binary PGM (P5) file");
  pos = 2;
  const long w = read_int(), h = read_int(), maxval = read_int();
  detail::check_dims(w, h, name);
  if (maxval != 255) throw std::runtime_error(name + ": only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(std::uint8_t(bytes[pos])))
    throw std::runtime_error(name + ": malformed header");
  ++pos;
  const std::size_t need = std::size_t(w) * h;
  if (bytes.size() - pos < need) throw std::runtime_error(name + ": truncated pixel data");
  LumaRaster img{int(w), int(h)};
  std::memcpy(img.data.data(), bytes.data() + pos, need);
  return img;
}

inline LumaRaster read_pgm_file(const std::filesystem::path& p)
{
  return read_pgm(read_file_to_string(p), p.string());
}

inline std::string pgm_to_string(const LumaRaster& img)
{
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
  return out;
}

inline void write_pgm_file(const std::filesystem::path& p, const LumaRaster& img)
{
  write_file_atomic(p, pgm_to_string(img));
}

// ---- .flo optical flow (magic "PIEH", little-endian) ----

inline FlowField read_flo(const std::string& bytes, const std::string& name = "flo")
{
  detail::ByteReader r{bytes, 0, name};
  r.need(4);
  if (bytes.compare(0, 4, "PIEH") != 0)
    throw std::runtime_error(name + ": bad flow file magic");
  r.pos = 4;
  const long w = long(int(r.u32le()));
  const long h = long(int(r.u32le()));
  detail::check_dims(w, h, name);
  FlowField f{int(w), int(h)};
  for (long i = 0; i < w * h; ++i) {
    f.u[i] = r.f32le();
    f.v[i] = r.f32le();
  }
  if (r.pos != bytes.size()) throw std::runtime_error(name + ": trailing bytes");
  return f;
}

inline FlowField read_flo_file(const std::filesystem::path& p)
{
  return read_flo(read_file_to_string(p), p.string());
}

inline std::string flo_to_string(const FlowField& f)
{
  std::string out = "PIEH";
  detail::put_u32le(out, std::uint32_t(f.width));
  detail::put_u32le(out, std::uint32_t(f.height));
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    detail::put_f32le(out, float(f.u[i]));
    detail::put_f32le(out, float(f.v[i]));
  }
  return out;
}

inline void write_flo_file(const std::filesystem::path& p, const FlowField& f)
{
  write_file_atomic(p, flo_to_string(f));
}

// ---- raw float depth grid (u32le width, u32le height, then f32le cells) ----

inline DepthField read_depth_grid(const std::string& bytes, const std::string& name = "depth")
{
  detail::ByteReader r{bytes, 0, name};
  const long w = long(int(r.u32le()));
  const long h = long(int(r.u32le()));
  detail::check_dims(w, h, name);
  DepthField d{int(w), int(h)};
  for (long i = 0; i < w * h; ++i) d.v[i] = r.f32le();
  if (r.pos != bytes.size()) throw std::runtime_error(name + ": trailing bytes");
  return d;
}

inline DepthField read_depth_grid_file(const std::filesystem::path& p)
{
  return read_depth_grid(read_file_to_string(p), p.string());
}

inline std::string depth_grid_to_string(const DepthField& d)
{
  std::string out;
  detail::put_u32le(out, std::uint32_t(d.width));
  detail::put_u32le(out, std::uint32_t(d.height));
  for (double v : d.v) detail::put_f32le(out, float(v));
  return out;
}

// ---- signed 16-bit residual (u32le width, u32le height, then i16le samples) ----

inline std::string residual_to_string(const RealPlane& r)
{
  std::string out;
  detail::put_u32le(out, std::uint32_t(r.width));
  detail::put_u32le(out, std::uint32_t(r.height));
  for (double v : r.data) {
    const long q = std::lround(v);
    const long clamped = q < -32768 ? -32768 : (q > 32767 ? 32767 : q);
    detail::put_i16le(out, std::int16_t(clamped));
  }
  return out;
}

inline RealPlane read_residual(const std::string& bytes, const std::string& name = "residual")
{
  detail::ByteReader r{bytes, 0, name};
  const long w = long(int(r.u32le()));
  const long h = long(int(r.u32le()));
  detail::check_dims(w, h, name);
  RealPlane out{int(w), int(h)};
  for (long i = 0; i < w * h; ++i) out.data[i] = double(r.i16le());
  if (r.pos != bytes.size()) throw std::runtime_error(name + ": trailing bytes");
  return out;
}

}  // namespace qtmtt
