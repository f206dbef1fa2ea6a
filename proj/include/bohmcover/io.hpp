#pragma once

// CSV and binary artifacts. Doubles are written with 17 significant digits.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bohmcover/bohm_dynamics.hpp"
#include "bohmcover/core.hpp"
#include "bohmcover/wave.hpp"

namespace bohmcover {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// r,theta,re,im[,re2,im2] per node, preceded by '#' metadata lines.
inline void write_wave_csv(const std::string& path, const CoveringWave& psi, const std::string& factor_note) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  const auto& g = *psi.grid;
  out << "# time=" << fmt17(psi.time) << "\n";
  out << "# norm=" << fmt17(psi.domain_norm_squared()) << "\n";
  out << "# geometry=" << to_string(g.geometry.kind) << " n_r=" << g.n_r << " n_theta=" << g.n_theta
      << " sheets=" << g.sheets << "\n";
  out << "# factor=" << factor_note << "\n";
  out << "r,theta";
  for (int a = 0; a < g.fiber_dim(); ++a) {
    const std::string sfx = a == 0 ? "" : std::to_string(a + 1);
    out << ",re" << sfx << ",im" << sfx;
  }
  out << "\n";
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      out << fmt17(g.r[i]) << "," << fmt17(g.theta[j]);
      const auto v = psi.at(i, j);
      for (int a = 0; a < g.fiber_dim(); ++a) out << "," << fmt17(v(a).real()) << "," << fmt17(v(a).imag());
      out << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Binary checkpoint: 64-byte descriptor then little-endian float64 pairs
// (re, im) in node-major, fiber-fastest order.
//
//   0  char[8]  "CWAVE01\0"
//   8  uint32   n_r
//  12  uint32   n_theta
//  16  uint32   fiber_dim
//  20  uint32   geometry kind (0 ring, 1 annulus, 2 two_anyon, 3 spin_annulus)
//  24  float64  time
//  32  byte[32] reserved, zero

inline constexpr std::array<char, 8> kCheckpointMagic = {'C', 'W', 'A', 'V', 'E', '0', '1', '\0'};

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& buf, std::size_t at, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t k = 0; k < sizeof(T); ++k) buf[at + k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xFFU);
}

template <class T>
T get_le(const std::vector<unsigned char>& buf, std::size_t at) {
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<std::uint64_t>(buf[at + k]) << (8 * k);
  if constexpr (std::is_floating_point_v<T>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

struct CheckpointHeader {
  std::uint32_t n_r = 0;
  std::uint32_t n_theta = 0;
  std::uint32_t fiber_dim = 0;
  std::uint32_t kind = 0;
  double time = 0.0;
};

inline void write_checkpoint(const std::string& path, const CoveringWave& psi) {
  const auto& g = *psi.grid;
  const std::size_t count = static_cast<std::size_t>(psi.values.size());
  std::vector<unsigned char> buf(64 + 16 * count, 0);
  std::memcpy(buf.data(), kCheckpointMagic.data(), 8);
  detail::put_le<std::uint32_t>(buf, 8, static_cast<std::uint32_t>(g.n_r));
  detail::put_le<std::uint32_t>(buf, 12, static_cast<std::uint32_t>(g.n_theta));
  detail::put_le<std::uint32_t>(buf, 16, static_cast<std::uint32_t>(g.fiber_dim()));
  detail::put_le<std::uint32_t>(buf, 20, static_cast<std::uint32_t>(g.geometry.kind));
  detail::put_le<double>(buf, 24, psi.time);
  for (std::size_t k = 0; k < count; ++k) {
    detail::put_le<double>(buf, 64 + 16 * k, psi.values(static_cast<Eigen::Index>(k)).real());
    detail::put_le<double>(buf, 72 + 16 * k, psi.values(static_cast<Eigen::Index>(k)).imag());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

/// Reads values into `psi`, whose grid must match the descriptor.
inline CheckpointHeader read_checkpoint(const std::string& path, CoveringWave& psi) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 64 || std::memcmp(buf.data(), kCheckpointMagic.data(), 8) != 0) {
    throw Error(path + ": not a CWAVE01 checkpoint");
  }
  CheckpointHeader h;
  h.n_r = detail::get_le<std::uint32_t>(buf, 8);
  h.n_theta = detail::get_le<std::uint32_t>(buf, 12);
  h.fiber_dim = detail::get_le<std::uint32_t>(buf, 16);
  h.kind = detail::get_le<std::uint32_t>(buf, 20);
  h.time = detail::get_le<double>(buf, 24);
  const auto& g = *psi.grid;
  if (h.n_r != static_cast<std::uint32_t>(g.n_r) || h.n_theta != static_cast<std::uint32_t>(g.n_theta) ||
      h.fiber_dim != static_cast<std::uint32_t>(g.fiber_dim())) {
    throw Error(path + ": checkpoint grid does not match");
  }
  const std::size_t count = static_cast<std::size_t>(h.n_r) * h.n_theta * h.fiber_dim;
  if (buf.size() != 64 + 16 * count) throw Error(path + ": truncated checkpoint");
  for (std::size_t k = 0; k < count; ++k) {
    psi.values(static_cast<Eigen::Index>(k)) =
        Complex(detail::get_le<double>(buf, 64 + 16 * k), detail::get_le<double>(buf, 72 + 16 * k));
  }
  psi.time = h.time;
  return h;
}

/// traj_id,t,coord1,coord2,winding,status with coord1 = r, coord2 = theta.
inline void write_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  out << "traj_id,t,coord1,coord2,winding,status\n";
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& tr = trajectories[k];
    for (const auto& s : tr.samples) {
      out << k << "," << fmt17(s.t) << "," << fmt17(s.q.base.r) << "," << fmt17(s.q.base.theta) << ","
          << s.q.winding << "," << to_string(tr.status) << "\n";
    }
  }
}

}  // namespace bohmcover
