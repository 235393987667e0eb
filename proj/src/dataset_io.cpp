#include "cei/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cei/log.hpp"
#include "cei/random.hpp"

namespace cei {
namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(DatasetErrorKind kind) {
  switch (kind) {
    case DatasetErrorKind::io: return "io";
    case DatasetErrorKind::format: return "format";
    case DatasetErrorKind::size_mismatch: return "size mismatch";
    case DatasetErrorKind::checksum: return "checksum";
    case DatasetErrorKind::dof_split: return "dof split";
    case DatasetErrorKind::missing_frames: return "missing frames";
  }
  return "unknown";
}

namespace {

constexpr int kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 6 * 4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

void put_vector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(out, v[i]);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  Eigen::VectorXd vector(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f32();
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes_[pos_++]); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(DatasetErrorKind::io, "write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_bytes(path));
  } catch (const json::exception& err) {
    throw DatasetError(DatasetErrorKind::format, path.string() + ": " + err.what());
  }
}

}  // namespace

std::size_t frame_block_size(std::size_t points, std::size_t arm_dof, std::size_t ee_dof) {
  return kHeaderBytes + 12 * points + 8 * (arm_dof + ee_dof) + points;
}

std::string encode_frames(const Demonstration& demo) {
  std::string out;
  for (std::size_t t = 0; t < demo.size(); ++t) {
    const auto& f = demo.frames[t];
    const auto& cloud = f.observation.cloud;
    const auto arm = static_cast<std::size_t>(f.observation.arm.size());
    const auto ee = static_cast<std::size_t>(f.observation.ee.size());
    if (static_cast<std::size_t>(f.action.arm.size()) != arm || static_cast<std::size_t>(f.action.ee.size()) != ee) {
      throw DatasetError(DatasetErrorKind::dof_split, "frame " + std::to_string(t) + ": action and observation dof differ");
    }
    if (cloud.tags.size() != cloud.points.size()) {
      throw DatasetError(DatasetErrorKind::size_mismatch, "frame " + std::to_string(t) + ": tag count differs from point count");
    }
    out.reserve(out.size() + frame_block_size(cloud.size(), arm, ee));
    put_u32(out, kFrameMagic);
    put_u32(out, kByteOrderMarker);
    put_u32(out, static_cast<std::uint32_t>(t));
    put_u32(out, static_cast<std::uint32_t>(cloud.size()));
    put_u32(out, static_cast<std::uint32_t>(arm));
    put_u32(out, static_cast<std::uint32_t>(ee));
    for (const auto& p : cloud.points) {
      put_f32(out, p.x());
      put_f32(out, p.y());
      put_f32(out, p.z());
    }
    put_vector(out, f.observation.arm);
    put_vector(out, f.observation.ee);
    put_vector(out, f.action.arm);
    put_vector(out, f.action.ee);
    for (auto tag : cloud.tags) out.push_back(static_cast<char>(tag));
  }
  return out;
}

std::string format_checksum(std::uint64_t checksum) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(checksum));
  return buf;
}

std::string write_demonstration(const Demonstration& demo, const fs::path& dir) {
  if (demo.frames.empty()) throw DatasetError(DatasetErrorKind::format, "demonstration '" + demo.id + "' has no frames");
  const std::string frames = encode_frames(demo);
  const std::string checksum = format_checksum(fnv1a64(frames.data(), frames.size()));
  const auto& first = demo.frames.front();
  json manifest = {{"format", "cei-demo"},
                   {"version", kFormatVersion},
                   {"id", demo.id},
                   {"embodiment", demo.embodiment},
                   {"length", demo.size()},
                   {"arm_dof", first.observation.arm.size()},
                   {"ee_dof", first.observation.ee.size()},
                   {"initial_state", demo.initial_state},
                   {"seed", demo.seed},
                   {"frames_file", kFramesFile},
                   {"frames_bytes", frames.size()},
                   {"checksum", checksum}};
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DatasetError(DatasetErrorKind::io, "cannot create '" + dir.string() + "': " + ec.message());
  write_bytes(dir / kFramesFile, frames);
  write_bytes(dir / kDemoManifestFile, manifest.dump(2) + "\n");
  return checksum;
}

Demonstration read_demonstration(const fs::path& dir, bool verify_checksum) {
  const json manifest = read_json(dir / kDemoManifestFile);
  Demonstration demo;
  std::size_t length = 0, arm = 0, ee = 0, expected_bytes = 0;
  std::string checksum;
  try {
    if (manifest.at("format").get<std::string>() != "cei-demo") {
      throw DatasetError(DatasetErrorKind::format, "not a demonstration manifest");
    }
    if (manifest.at("version").get<int>() != kFormatVersion) {
      throw DatasetError(DatasetErrorKind::format, "unsupported format version");
    }
    demo.id = manifest.at("id").get<std::string>();
    demo.embodiment = manifest.at("embodiment").get<std::string>();
    demo.initial_state = manifest.value("initial_state", json::object());
    demo.seed = manifest.at("seed").get<std::uint64_t>();
    length = manifest.at("length").get<std::size_t>();
    arm = manifest.at("arm_dof").get<std::size_t>();
    ee = manifest.at("ee_dof").get<std::size_t>();
    expected_bytes = manifest.at("frames_bytes").get<std::size_t>();
    checksum = manifest.at("checksum").get<std::string>();
  } catch (const json::exception& err) {
    throw DatasetError(DatasetErrorKind::format, (dir / kDemoManifestFile).string() + ": " + err.what());
  }
  if (length == 0) throw DatasetError(DatasetErrorKind::format, "demonstration '" + demo.id + "' has length 0");

  const std::string bytes = read_bytes(dir / kFramesFile);
  Reader in(bytes);
  demo.frames.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    const std::string where = "demo '" + demo.id + "' frame " + std::to_string(t);
    if (in.remaining() < kHeaderBytes) {
      throw DatasetError(DatasetErrorKind::size_mismatch, where + ": block header truncated");
    }
    const std::uint32_t magic = in.u32();
    const std::uint32_t order = in.u32();
    if (magic != kFrameMagic) {
      if (magic == 0x43454942u || order == 0x04030201u) {
        throw DatasetError(DatasetErrorKind::format, where + ": big-endian block, expected little-endian");
      }
      throw DatasetError(DatasetErrorKind::format, where + ": bad block magic");
    }
    if (order != kByteOrderMarker) {
      throw DatasetError(DatasetErrorKind::format, where + ": byte-order marker does not read as little-endian");
    }
    const std::uint32_t index = in.u32();
    const std::size_t points = in.u32();
    const std::size_t block_arm = in.u32();
    const std::size_t block_ee = in.u32();
    if (index != t) throw DatasetError(DatasetErrorKind::format, where + ": block carries index " + std::to_string(index));
    if (block_arm != arm || block_ee != ee) {
      throw DatasetError(DatasetErrorKind::dof_split, where + ": block dof " + std::to_string(block_arm) + "/" +
                                                          std::to_string(block_ee) + " vs manifest " +
                                                          std::to_string(arm) + "/" + std::to_string(ee));
    }
    const std::size_t payload = frame_block_size(points, arm, ee) - kHeaderBytes;
    if (in.remaining() < payload) {
      throw DatasetError(DatasetErrorKind::size_mismatch, where + ": expected " + std::to_string(payload) +
                                                              " payload bytes, found " + std::to_string(in.remaining()));
    }
    auto& f = demo.frames[t];
    f.observation.cloud.points.resize(points);
    for (auto& p : f.observation.cloud.points) {
      const double x = in.f32(), y = in.f32(), z = in.f32();
      p = Vec3(x, y, z);
    }
    f.observation.arm = in.vector(arm);
    f.observation.ee = in.vector(ee);
    f.action.arm = in.vector(arm);
    f.action.ee = in.vector(ee);
    f.observation.cloud.tags.resize(points);
    for (auto& tag : f.observation.cloud.tags) {
      const std::uint8_t raw = in.u8();
      if (raw > 1) throw DatasetError(DatasetErrorKind::format, where + ": unknown point tag " + std::to_string(raw));
      tag = static_cast<PointTag>(raw);
    }
  }
  if (in.remaining() != 0 || bytes.size() != expected_bytes) {
    throw DatasetError(DatasetErrorKind::size_mismatch, "demo '" + demo.id + "': frames file has " +
                                                            std::to_string(bytes.size()) + " bytes, manifest says " +
                                                            std::to_string(expected_bytes));
  }
  if (verify_checksum) {
    const std::string actual = format_checksum(fnv1a64(bytes.data(), bytes.size()));
    if (actual != checksum) {
      throw DatasetError(DatasetErrorKind::checksum, "demo '" + demo.id + "': checksum " + actual + " != recorded " + checksum);
    }
  }
  return demo;
}

void write_index(const DatasetIndex& index, const fs::path& root) {
  json demos = json::array();
  for (const auto& d : index.demos) {
    demos.push_back({{"id", d.id}, {"path", d.path}, {"embodiment", d.embodiment}, {"length", d.length},
                     {"checksum", d.checksum}});
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw DatasetError(DatasetErrorKind::io, "cannot create '" + root.string() + "': " + ec.message());
  const json doc = {{"format", "cei-dataset"}, {"version", kFormatVersion}, {"demos", demos}};
  write_bytes(root / kIndexFile, doc.dump(2) + "\n");
}

DatasetIndex read_index(const fs::path& root) {
  const json doc = read_json(root / kIndexFile);
  DatasetIndex index;
  std::set<std::string> ids;
  try {
    if (doc.at("format").get<std::string>() != "cei-dataset") {
      throw DatasetError(DatasetErrorKind::format, "not a dataset index");
    }
    for (const auto& item : doc.at("demos")) {
      IndexEntry e;
      e.id = item.at("id").get<std::string>();
      e.path = item.at("path").get<std::string>();
      e.embodiment = item.value("embodiment", "");
      e.length = item.value("length", std::size_t{0});
      e.checksum = item.value("checksum", "");
      if (!ids.insert(e.id).second) throw DatasetError(DatasetErrorKind::format, "duplicate demo id '" + e.id + "'");
      index.demos.push_back(std::move(e));
    }
  } catch (const json::exception& err) {
    throw DatasetError(DatasetErrorKind::format, (root / kIndexFile).string() + ": " + err.what());
  }
  return index;
}

std::optional<std::size_t> find_demo(const DatasetIndex& index, const std::string& id) {
  for (std::size_t k = 0; k < index.demos.size(); ++k) {
    if (index.demos[k].id == id) return k;
  }
  return std::nullopt;
}

Demonstration ingest_recorded_log(const fs::path& log, const Embodiment& e, const Aabb& workspace) {
  const json doc = read_json(log);
  std::map<std::size_t, const json*> by_index;
  try {
    for (const auto& frame : doc.at("frames")) {
      const auto t = frame.at("index").get<std::size_t>();
      if (!by_index.emplace(t, &frame).second) {
        throw DatasetError(DatasetErrorKind::format, log.string() + ": frame " + std::to_string(t) + " recorded twice");
      }
    }
  } catch (const json::exception& err) {
    throw DatasetError(DatasetErrorKind::format, log.string() + ": " + err.what());
  }
  if (by_index.empty()) throw DatasetError(DatasetErrorKind::missing_frames, log.string() + ": log has no frames");

  const std::size_t length = by_index.rbegin()->first + 1;
  std::vector<std::size_t> gaps;
  for (std::size_t t = 0; t < length; ++t) {
    if (!by_index.count(t)) gaps.push_back(t);
  }
  if (!gaps.empty()) {
    std::string list;
    for (auto g : gaps) list += (list.empty() ? "" : ", ") + std::to_string(g);
    throw DatasetError(DatasetErrorKind::missing_frames, log.string() + ": missing frames " + list);
  }

  std::vector<JointConfiguration> qs;
  std::vector<PointCloud> clouds;
  try {
    for (const auto& [t, frame] : by_index) {
      const auto joints = frame->at("joints").get<std::vector<double>>();
      if (joints.size() != e.dof()) {
        throw DatasetError(DatasetErrorKind::dof_split, log.string() + ": frame " + std::to_string(t) + " has " +
                                                            std::to_string(joints.size()) + " joints, '" + e.name +
                                                            "' has " + std::to_string(e.dof()));
      }
      JointConfiguration q(Eigen::Map<const Eigen::VectorXd>(joints.data(), static_cast<Eigen::Index>(joints.size())));
      check_configuration(e, q);
      for (std::size_t d = 0; d < e.dof(); ++d) {
        const auto& spec = e.dof_spec(d);
        if (q[d] < spec.lower || q[d] > spec.upper) {
          warn(log.string() + ": frame " + std::to_string(t) + " joint '" + spec.name + "' = " + std::to_string(q[d]) +
               " outside [" + std::to_string(spec.lower) + ", " + std::to_string(spec.upper) + "]");
        }
      }
      std::vector<Vec3> points;
      for (const auto& p : frame->at("cloud")) points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      clouds.push_back(crop_workspace(PointCloud::scene(std::move(points)), workspace));
      qs.push_back(std::move(q));
    }
  } catch (const json::exception& err) {
    throw DatasetError(DatasetErrorKind::format, log.string() + ": " + err.what());
  }

  Demonstration demo;
  demo.id = log.stem().string();
  demo.embodiment = e.name;
  demo.initial_state = {{"source", "recorded log"},
                        {"q0", std::vector<double>(qs.front().values.data(), qs.front().values.data() + qs.front().size())}};
  demo.frames.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    auto& f = demo.frames[t];
    f.observation.cloud = std::move(clouds[t]);
    std::tie(f.observation.arm, f.observation.ee) = split_configuration(e, qs[t]);
    std::tie(f.action.arm, f.action.ee) = split_configuration(e, qs[std::min(t + 1, length - 1)]);
  }
  return demo;
}

}  // namespace cei
