#include "eccnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "eccnn/errors.hpp"

namespace eccnn {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'C', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint: truncated data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t CheckpointEntry::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void Checkpoint::add(CheckpointEntry entry) {
  if (entry.values.size() != entry.numel()) {
    throw ValidationError("checkpoint entry '" + entry.name + "' has " +
                          std::to_string(entry.values.size()) + " values for " +
                          std::to_string(entry.numel()) + " elements");
  }
  if (find(entry.name) != nullptr) {
    throw ValidationError("checkpoint entry '" + entry.name + "' added twice");
  }
  entries_.push_back(std::move(entry));
}

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_u32(out, d);
    for (float v : e.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: missing ECCN magic");
  }
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.str(r.u32());
    const std::uint32_t ndim = r.u32();
    for (std::uint32_t d = 0; d < ndim; ++d) e.dims.push_back(r.u32());
    const std::size_t n = e.numel();
    e.values.reserve(n);
    for (std::size_t k = 0; k < n; ++k) e.values.push_back(r.f32());
    ckpt.add(std::move(e));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after last entry");
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw FileNotFoundError("checkpoint not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace eccnn
