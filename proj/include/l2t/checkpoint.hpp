#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2t/param_utils.hpp"
#include "l2t/tensor.hpp"

namespace l2t::checkpoint {

// Layout (all integers little-endian):
//   "L2TH" | u32 version | u32 array count |
//   per array: u32 name length | name bytes (UTF-8) | u32 rank | u64 dims[rank] | f32 values
inline constexpr char kMagic[4] = {'L', '2', 'T', 'H'};
inline constexpr std::uint32_t kVersion = 1;

struct ArchiveEntry {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
  friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

/// Ordered named-array archive.
class Archive {
 public:
  template <class T>
  void add(const std::string& name, const Tensor<T>& t) {
    ArchiveEntry e;
    e.name = name;
    e.dims.assign(t.shape().begin(), t.shape().end());
    e.values.assign(t.values().begin(), t.values().end());
    add_entry(std::move(e));
  }

  template <class P>
  void add_params(const std::string& prefix, const P& params) {
    params.visit([&](const std::string& name, const auto& t) { add(prefix + name, t); });
  }

  void add_entry(ArchiveEntry e);
  bool contains(const std::string& name) const;
  /// Throws CheckpointError if absent.
  const ArchiveEntry& get(const std::string& name) const;
  const std::vector<ArchiveEntry>& entries() const { return entries_; }

  /// Copies an entry into t. Throws CheckpointError on a missing name or shape mismatch.
  template <class T>
  void read_into(const std::string& name, Tensor<T>& t) const {
    const ArchiveEntry& e = get(name);
    std::vector<std::size_t> shape(e.dims.begin(), e.dims.end());
    if (shape != t.shape()) {
      throw_shape_mismatch(name, t.shape(), shape);
    }
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(e.values[i]);
  }

  template <class P>
  void read_params(const std::string& prefix, P& params) const {
    params.visit([&](const std::string& name, auto& t) { read_into(prefix + name, t); });
  }

  std::vector<std::uint8_t> serialize() const;
  static Archive deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

  friend bool operator==(const Archive&, const Archive&) = default;

 private:
  [[noreturn]] static void throw_shape_mismatch(const std::string& name,
                                                const std::vector<std::size_t>& want,
                                                const std::vector<std::size_t>& got);
  std::vector<ArchiveEntry> entries_;
};

}  // namespace l2t::checkpoint
