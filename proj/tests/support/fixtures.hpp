// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded scene generators and small file helpers shared by the test binaries.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "splatprune/splat_io.hpp"

namespace splatprune::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * uniform());
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::uint64_t bits() { return engine_(); }
  Vec3 vec3(double lo, double hi) {
    const double x = uniform(lo, hi);
    const double y = uniform(lo, hi);
    const double z = uniform(lo, hi);
    return Vec3(x, y, z);
  }
  Vec3 unit() {
    Vec3 v;
    do {
      const double x = normal();
      const double y = normal();
      const double z = normal();
      v = Vec3(x, y, z);
    } while (v.norm() < 1e-6);
    return v.normalized();
  }
  Eigen::Quaterniond rotation() {
    Eigen::Vector4d q;
    do {
      for (int i = 0; i < 4; ++i) q[i] = normal();
    } while (q.norm() < 1e-6);
    q.normalize();
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  }

 private:
  std::mt19937_64 engine_;
};

inline GaussianSplat random_splat(Rng& rng, int sh_degree, double extent = 10.0) {
  GaussianSplat s;
  s.position = rng.vec3(-extent, extent);
  s.scale_log = rng.vec3(-4.0, -1.0);
  s.rotation = rng.rotation();
  s.opacity_logit = 2.0 * rng.normal();
  s.sh_dc = rng.vec3(-1.0, 1.0);
  s.sh_rest.resize(3 * sh_rest_per_channel(sh_degree));
  for (double& v : s.sh_rest) v = rng.uniform(-0.3, 0.3);
  return s;
}

inline SplatScene random_scene(std::uint64_t seed, std::size_t n, int sh_degree = 0,
                               double extent = 10.0) {
  Rng rng(seed);
  std::vector<GaussianSplat> splats;
  splats.reserve(n);
  for (std::size_t i = 0; i < n; ++i) splats.push_back(random_splat(rng, sh_degree, extent));
  return SplatScene::from_splats(splats, sh_degree);
}

inline std::vector<std::byte> to_bytes(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

inline void append_f32(std::vector<std::byte>& out, float v) {
  std::byte b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

struct PropSpec {
  std::string type;  // PLY scalar type name
  std::string name;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "double" || t == "float64") return 8;
  return 4;
}

/// The reference exporter property list for SH degree L (all float).
inline std::vector<PropSpec> standard_props(int sh_degree, bool with_normals = true) {
  std::vector<PropSpec> p = {{"float", "x"}, {"float", "y"}, {"float", "z"}};
  if (with_normals) {
    for (const char* n : {"nx", "ny", "nz"}) p.push_back({"float", n});
  }
  for (int i = 0; i < 3; ++i) p.push_back({"float", "f_dc_" + std::to_string(i)});
  for (std::size_t i = 0; i < 3 * sh_rest_per_channel(sh_degree); ++i) {
    p.push_back({"float", "f_rest_" + std::to_string(i)});
  }
  p.push_back({"float", "opacity"});
  for (int i = 0; i < 3; ++i) p.push_back({"float", "scale_" + std::to_string(i)});
  for (int i = 0; i < 4; ++i) p.push_back({"float", "rot_" + std::to_string(i)});
  return p;
}

inline std::string ply_header(const std::vector<PropSpec>& props, std::size_t count,
                              const std::string& format = "binary_little_endian 1.0",
                              const std::vector<std::string>& extra_lines = {}) {
  std::string h = "ply\nformat " + format + "\n";
  for (const auto& l : extra_lines) h += l + "\n";
  h += "element vertex " + std::to_string(count) + "\n";
  for (const auto& p : props) h += "property " + p.type + " " + p.name + "\n";
  h += "end_header\n";
  return h;
}

/// Header plus `count` records of random bytes. Float fields get finite
/// random values so decoding stays meaningful; other fields get raw bits.
inline std::vector<std::byte> random_ply(Rng& rng, const std::vector<PropSpec>& props,
                                         std::size_t count,
                                         const std::vector<std::string>& extra_lines = {}) {
  auto out = to_bytes(ply_header(props, count, "binary_little_endian 1.0", extra_lines));
  for (std::size_t r = 0; r < count; ++r) {
    for (const auto& p : props) {
      if (p.type == "float" || p.type == "float32") {
        append_f32(out, static_cast<float>(rng.uniform(-3.0, 3.0)));
      } else if (p.type == "double" || p.type == "float64") {
        const double v = rng.uniform(-3.0, 3.0);
        std::byte b[8];
        std::memcpy(b, &v, 8);
        out.insert(out.end(), b, b + 8);
      } else {
        const std::uint64_t bits = rng.bits();
        std::byte b[8];
        std::memcpy(b, &bits, 8);
        out.insert(out.end(), b, b + ply_type_size(p.type));
      }
    }
  }
  return out;
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("splatprune_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace splatprune::testing
