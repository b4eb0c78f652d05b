// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/splat_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "splatprune/error.hpp"

namespace splatprune {

static_assert(std::endian::native == std::endian::little,
              "PLY records are decoded in place; big-endian hosts are unsupported");

namespace {

struct TypeName {
  std::string_view name;
  ScalarType type;
};

constexpr TypeName kTypeNames[] = {
    {"char", ScalarType::kInt8},     {"int8", ScalarType::kInt8},
    {"uchar", ScalarType::kUInt8},   {"uint8", ScalarType::kUInt8},
    {"short", ScalarType::kInt16},   {"int16", ScalarType::kInt16},
    {"ushort", ScalarType::kUInt16}, {"uint16", ScalarType::kUInt16},
    {"int", ScalarType::kInt32},     {"int32", ScalarType::kInt32},
    {"uint", ScalarType::kUInt32},   {"uint32", ScalarType::kUInt32},
    {"float", ScalarType::kFloat32}, {"float32", ScalarType::kFloat32},
    {"double", ScalarType::kFloat64}, {"float64", ScalarType::kFloat64},
};

std::string_view canonical_name(ScalarType type) {
  switch (type) {
    case ScalarType::kInt8: return "char";
    case ScalarType::kUInt8: return "uchar";
    case ScalarType::kInt16: return "short";
    case ScalarType::kUInt16: return "ushort";
    case ScalarType::kInt32: return "int";
    case ScalarType::kUInt32: return "uint";
    case ScalarType::kFloat32: return "float";
    case ScalarType::kFloat64: return "double";
  }
  return "float";
}

template <typename T>
double read_as(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double read_scalar(const std::byte* record, const PlyProperty& prop) {
  const std::byte* p = record + prop.offset;
  switch (prop.type) {
    case ScalarType::kInt8: return read_as<std::int8_t>(p);
    case ScalarType::kUInt8: return read_as<std::uint8_t>(p);
    case ScalarType::kInt16: return read_as<std::int16_t>(p);
    case ScalarType::kUInt16: return read_as<std::uint16_t>(p);
    case ScalarType::kInt32: return read_as<std::int32_t>(p);
    case ScalarType::kUInt32: return read_as<std::uint32_t>(p);
    case ScalarType::kFloat32: return read_as<float>(p);
    case ScalarType::kFloat64: return read_as<double>(p);
  }
  return 0.0;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Indices into the layout for every property the decoder needs.
struct FieldMap {
  const PlyProperty* pos[3];
  const PlyProperty* dc[3];
  const PlyProperty* opacity;
  const PlyProperty* scale[3];
  const PlyProperty* rot[4];
  std::vector<const PlyProperty*> rest;
  int sh_degree;
};

const PlyProperty* require(const PlyLayout& layout, const std::string& name) {
  const PlyProperty* p = layout.find(name);
  if (p == nullptr) throw Error(ErrorCode::kMissingProperty, name);
  return p;
}

FieldMap map_fields(const PlyLayout& layout) {
  FieldMap m{};
  const char* xyz[] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) m.pos[i] = require(layout, xyz[i]);
  for (int i = 0; i < 3; ++i) m.dc[i] = require(layout, "f_dc_" + std::to_string(i));

  std::size_t rest_count = 0;
  for (const auto& p : layout.properties) {
    if (p.name.rfind("f_rest_", 0) == 0) ++rest_count;
  }
  switch (rest_count) {
    case 0: m.sh_degree = 0; break;
    case 9: m.sh_degree = 1; break;
    case 24: m.sh_degree = 2; break;
    case 45: m.sh_degree = 3; break;
    default:
      throw Error(ErrorCode::kUnsupportedFormat,
                  "f_rest_* count " + std::to_string(rest_count) +
                      " does not match any SH degree in 0..3");
  }
  m.rest.reserve(rest_count);
  for (std::size_t i = 0; i < rest_count; ++i) {
    m.rest.push_back(require(layout, "f_rest_" + std::to_string(i)));
  }
  m.opacity = require(layout, "opacity");
  for (int i = 0; i < 3; ++i) m.scale[i] = require(layout, "scale_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) m.rot[i] = require(layout, "rot_" + std::to_string(i));
  return m;
}

GaussianSplat decode(const std::byte* record, const FieldMap& m) {
  GaussianSplat s;
  for (int i = 0; i < 3; ++i) {
    s.position[i] = read_scalar(record, *m.pos[i]);
    s.sh_dc[i] = read_scalar(record, *m.dc[i]);
    s.scale_log[i] = read_scalar(record, *m.scale[i]);
  }
  s.opacity_logit = read_scalar(record, *m.opacity);
  const double w = read_scalar(record, *m.rot[0]);
  const double x = read_scalar(record, *m.rot[1]);
  const double y = read_scalar(record, *m.rot[2]);
  const double z = read_scalar(record, *m.rot[3]);
  const double norm = std::sqrt(w * w + x * x + y * y + z * z);
  if (std::isfinite(norm) && norm > 0.0) {
    s.rotation = Eigen::Quaterniond(w / norm, x / norm, y / norm, z / norm);
  } else {
    s.rotation = Eigen::Quaterniond::Identity();
  }
  s.sh_rest.resize(m.rest.size());
  for (std::size_t i = 0; i < m.rest.size(); ++i) s.sh_rest[i] = read_scalar(record, *m.rest[i]);
  return s;
}

void write_f32(std::byte* record, const PlyProperty* prop, double value) {
  const float f = static_cast<float>(value);
  std::memcpy(record + prop->offset, &f, sizeof(float));
}

}  // namespace

std::size_t scalar_size(ScalarType type) {
  switch (type) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 4;
}

const PlyProperty* PlyLayout::find(std::string_view name) const {
  for (const auto& p : properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

PlyLayout default_layout(int sh_degree) {
  std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  const std::size_t rest = 3 * sh_rest_per_channel(sh_degree);
  for (std::size_t i = 0; i < rest; ++i) names.push_back("f_rest_" + std::to_string(i));
  for (const char* n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    names.emplace_back(n);
  }
  PlyLayout layout;
  for (auto& n : names) {
    layout.properties.push_back({std::move(n), ScalarType::kFloat32, layout.stride});
    layout.stride += 4;
  }
  return layout;
}

SplatScene SplatScene::from_records(PlyLayout layout, std::vector<std::byte> payload,
                                    std::size_t count) {
  if (count == 0) throw Error(ErrorCode::kEmptyScene, "scene has no splats");
  if (payload.size() != count * layout.stride) {
    throw Error(ErrorCode::kTruncatedPayload,
                "expected " + std::to_string(count * layout.stride) + " payload bytes, got " +
                    std::to_string(payload.size()));
  }
  const FieldMap fields = map_fields(layout);
  SplatScene scene;
  scene.sh_degree_ = fields.sh_degree;
  scene.splats_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    scene.splats_.push_back(decode(payload.data() + i * layout.stride, fields));
  }
  scene.layout_ = std::move(layout);
  scene.payload_ = std::move(payload);
  return scene;
}

SplatScene SplatScene::from_splats(const std::vector<GaussianSplat>& splats, int sh_degree) {
  if (splats.empty()) throw Error(ErrorCode::kEmptyScene, "scene has no splats");
  if (sh_degree < 0 || sh_degree > 3) {
    throw Error(ErrorCode::kUnsupportedFormat, "SH degree must be in 0..3");
  }
  PlyLayout layout = default_layout(sh_degree);
  const FieldMap fields = map_fields(layout);
  const std::size_t rest = 3 * sh_rest_per_channel(sh_degree);
  std::vector<std::byte> payload(splats.size() * layout.stride);
  for (std::size_t i = 0; i < splats.size(); ++i) {
    const GaussianSplat& s = splats[i];
    if (s.sh_rest.size() != rest) {
      throw Error(ErrorCode::kLengthMismatch, "splat " + std::to_string(i) + " has " +
                                                  std::to_string(s.sh_rest.size()) +
                                                  " f_rest values, expected " +
                                                  std::to_string(rest));
    }
    std::byte* rec = payload.data() + i * layout.stride;
    for (int k = 0; k < 3; ++k) {
      write_f32(rec, fields.pos[k], s.position[k]);
      write_f32(rec, fields.dc[k], s.sh_dc[k]);
      write_f32(rec, fields.scale[k], s.scale_log[k]);
    }
    write_f32(rec, fields.opacity, s.opacity_logit);
    write_f32(rec, fields.rot[0], s.rotation.w());
    write_f32(rec, fields.rot[1], s.rotation.x());
    write_f32(rec, fields.rot[2], s.rotation.y());
    write_f32(rec, fields.rot[3], s.rotation.z());
    for (std::size_t k = 0; k < rest; ++k) write_f32(rec, fields.rest[k], s.sh_rest[k]);
    // nx, ny, nz stay zero.
  }
  return from_records(std::move(layout), std::move(payload), splats.size());
}

std::span<const std::byte> SplatScene::record(std::size_t i) const {
  return std::span<const std::byte>(payload_).subspan(i * layout_.stride, layout_.stride);
}

std::vector<Vec3> SplatScene::positions() const {
  std::vector<Vec3> out;
  out.reserve(splats_.size());
  for (const auto& s : splats_) out.push_back(s.position);
  return out;
}

SplatScene SplatScene::subset(std::span<const std::size_t> ids) const {
  SplatScene out;
  out.layout_ = layout_;
  out.sh_degree_ = sh_degree_;
  out.payload_.resize(ids.size() * layout_.stride);
  out.splats_.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::size_t i = ids[k];
    std::memcpy(out.payload_.data() + k * layout_.stride, payload_.data() + i * layout_.stride,
                layout_.stride);
    out.splats_.push_back(splats_[i]);
  }
  return out;
}

SplatScene load_ply(std::span<const std::byte> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) return std::nullopt;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto magic = next_line();
  if (!magic || *magic != "ply") throw Error(ErrorCode::kUnsupportedFormat, "missing 'ply' magic");

  PlyLayout layout;
  std::size_t vertex_count = 0;
  bool have_format = false;
  bool have_vertex = false;
  bool in_vertex = false;
  bool ended = false;
  while (auto line = next_line()) {
    const auto tok = split_ws(*line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "comment" || tok[0] == "obj_info") {
      layout.comments.emplace_back(*line);
    } else if (tok[0] == "format") {
      if (tok.size() < 3 || tok[1] != "binary_little_endian" || tok[2] != "1.0") {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "only binary_little_endian 1.0 is supported, got '" + std::string(*line) + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw Error(ErrorCode::kUnsupportedFormat, "malformed element line");
      const std::string count_str(tok[2]);
      std::size_t count = 0;
      try {
        count = std::stoull(count_str);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kUnsupportedFormat, "bad element count '" + count_str + "'");
      }
      if (tok[1] == "vertex") {
        if (have_vertex) throw Error(ErrorCode::kUnsupportedFormat, "duplicate vertex element");
        have_vertex = true;
        in_vertex = true;
        vertex_count = count;
      } else {
        if (count != 0) {
          throw Error(ErrorCode::kUnsupportedFormat,
                      "unsupported element '" + std::string(tok[1]) + "'");
        }
        in_vertex = false;
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      if (tok.size() != 3) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "unsupported property line '" + std::string(*line) + "'");
      }
      const auto it = std::find_if(std::begin(kTypeNames), std::end(kTypeNames),
                                   [&](const TypeName& t) { return t.name == tok[1]; });
      if (it == std::end(kTypeNames)) {
        throw Error(ErrorCode::kUnsupportedFormat, "unknown type '" + std::string(tok[1]) + "'");
      }
      layout.properties.push_back({std::string(tok[2]), it->type, layout.stride});
      layout.stride += scalar_size(it->type);
    } else {
      throw Error(ErrorCode::kUnsupportedFormat, "unexpected header line '" + std::string(*line) + "'");
    }
  }
  if (!ended) throw Error(ErrorCode::kTruncatedPayload, "header has no end_header");
  if (!have_format) throw Error(ErrorCode::kUnsupportedFormat, "missing format line");
  if (!have_vertex) throw Error(ErrorCode::kUnsupportedFormat, "missing vertex element");

  // Validate the schema before the payload so a bad header reports the
  // missing field rather than a size mismatch.
  (void)map_fields(layout);
  if (vertex_count == 0) throw Error(ErrorCode::kEmptyScene, "vertex count is 0");

  const std::size_t expected = vertex_count * layout.stride;
  const std::size_t available = bytes.size() - pos;
  if (available != expected) {
    throw Error(ErrorCode::kTruncatedPayload, "expected " + std::to_string(expected) +
                                                  " payload bytes, found " +
                                                  std::to_string(available));
  }
  std::vector<std::byte> payload(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return SplatScene::from_records(std::move(layout), std::move(payload), vertex_count);
}

SplatScene load_ply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw std::ios_base::failure("failed reading '" + path.string() + "'");
  return load_ply(bytes);
}

std::vector<std::byte> save_ply(const SplatScene& scene) {
  if (scene.empty()) throw Error(ErrorCode::kEmptyScene, "refusing to write an empty scene");
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  for (const auto& c : scene.layout().comments) header << c << '\n';
  header << "element vertex " << scene.size() << '\n';
  for (const auto& p : scene.layout().properties) {
    header << "property " << canonical_name(p.type) << ' ' << p.name << '\n';
  }
  header << "end_header\n";
  const std::string h = header.str();
  std::vector<std::byte> out(h.size() + scene.payload().size());
  std::memcpy(out.data(), h.data(), h.size());
  std::memcpy(out.data() + h.size(), scene.payload().data(), scene.payload().size());
  return out;
}

void save_ply_file(const SplatScene& scene, const std::filesystem::path& path) {
  const auto bytes = save_ply(scene);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("failed writing '" + path.string() + "'");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double opacity_linear(const GaussianSplat& splat) { return sigmoid(splat.opacity_logit); }

Mat3 rotation_matrix(const GaussianSplat& splat) {
  return splat.rotation.normalized().toRotationMatrix();
}

Mat3 covariance(const GaussianSplat& splat) {
  const Mat3 r = rotation_matrix(splat);
  const Vec3 var = (2.0 * splat.scale_log.array()).exp().matrix();
  Mat3 cov = r * var.asDiagonal() * r.transpose();
  // Exact symmetry; the product above can differ in the last ulp.
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

}  // namespace splatprune
