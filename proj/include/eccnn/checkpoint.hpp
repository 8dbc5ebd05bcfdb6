#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eccnn {

// Flat container shared by weight checkpoints and edge-map files.
//
//   "ECCN" | version u32 | entry count u32
//   per entry: name length u32 | UTF-8 name | ndim u32 | dims u32 x ndim |
//              float32 x prod(dims)
//
// All integers and floats are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const;
  bool operator==(const CheckpointEntry&) const = default;
};

class Checkpoint {
 public:
  void add(CheckpointEntry entry);
  const std::vector<CheckpointEntry>& entries() const { return entries_; }
  const CheckpointEntry* find(const std::string& name) const;
  bool empty() const { return entries_.empty(); }

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

 private:
  std::vector<CheckpointEntry> entries_;
};

}  // namespace eccnn
