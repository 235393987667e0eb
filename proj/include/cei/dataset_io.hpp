#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cei/errors.hpp"
#include "cei/obs_synth.hpp"

namespace cei {

// On-disk layout of one demonstration directory:
//
//   manifest.json  format, version, id, embodiment, length, arm_dof, ee_dof,
//                  initial_state, seed, frames_bytes, checksum
//   frames.bin     L frame blocks, all little-endian:
//                    u32 magic 0x42494543 ("CEIB")
//                    u32 byte-order marker 0x01020304
//                    u32 frame index, u32 point count M, u32 arm dof, u32 ee dof
//                    f32 points[M][3]
//                    f32 observed arm[arm], observed ee[ee]
//                    f32 action arm[arm], action ee[ee]
//                    u8  point tags[M]   (0 scene, 1 robot)
//
// The checksum is 64-bit FNV-1a over frames.bin, written as 16 hex digits.
// A dataset is a directory with index.json listing its demonstrations.

enum class DatasetErrorKind { io, format, size_mismatch, checksum, dof_split, missing_frames };

std::string to_string(DatasetErrorKind kind);

class DatasetError : public Error {
 public:
  DatasetError(DatasetErrorKind kind, const std::string& message)
      : Error(to_string(kind) + ": " + message), kind_(kind) {}
  DatasetErrorKind kind() const { return kind_; }

 private:
  DatasetErrorKind kind_;
};

inline constexpr std::uint32_t kFrameMagic = 0x42494543;
inline constexpr std::uint32_t kByteOrderMarker = 0x01020304;
inline constexpr const char* kDemoManifestFile = "manifest.json";
inline constexpr const char* kFramesFile = "frames.bin";
inline constexpr const char* kIndexFile = "index.json";

/// Bytes of one frame block.
std::size_t frame_block_size(std::size_t points, std::size_t arm_dof, std::size_t ee_dof);

/// Serialized frames.bin contents.
std::string encode_frames(const Demonstration& demo);
std::string format_checksum(std::uint64_t checksum);

/// Writes `dir`/manifest.json and `dir`/frames.bin; returns the checksum.
std::string write_demonstration(const Demonstration& demo, const std::filesystem::path& dir);

/// Reads and validates one demonstration directory. Throws DatasetError.
Demonstration read_demonstration(const std::filesystem::path& dir, bool verify_checksum = true);

struct IndexEntry {
  std::string id;
  std::string path;  // relative to the dataset root
  std::string embodiment;
  std::size_t length = 0;
  std::string checksum;

  bool operator==(const IndexEntry&) const = default;
};

struct DatasetIndex {
  std::vector<IndexEntry> demos;
};

void write_index(const DatasetIndex& index, const std::filesystem::path& root);
/// Throws DatasetError on a malformed index or duplicate ids.
DatasetIndex read_index(const std::filesystem::path& root);
std::optional<std::size_t> find_demo(const DatasetIndex& index, const std::string& id);

/// Recorded log (JSON): {"frames": [{"index": t, "joints": [...], "cloud": [[x, y, z], ...]}, ...]}.
/// Clouds are cropped to `workspace`; out-of-limit joints only warn. Actions
/// are the next frame's joints (hold-last). Throws DatasetError listing gaps.
Demonstration ingest_recorded_log(const std::filesystem::path& log, const Embodiment& e, const Aabb& workspace);

}  // namespace cei
