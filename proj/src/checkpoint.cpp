#include "l2t/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "l2t/error.hpp"

namespace l2t::checkpoint {
namespace {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class U>
  U get_le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string get_string(std::size_t n) {
    need(n, "array name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Archive::add_entry(ArchiveEntry e) {
  if (contains(e.name)) throw CheckpointError("duplicate array name: " + e.name);
  std::uint64_t n = 1;
  for (auto d : e.dims) n *= d;
  if (n != e.values.size()) throw CheckpointError("array " + e.name + ": dims do not match data");
  entries_.push_back(std::move(e));
}

bool Archive::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

const ArchiveEntry& Archive::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw CheckpointError("checkpoint has no array named " + name);
}

void Archive::throw_shape_mismatch(const std::string& name, const std::vector<std::size_t>& want,
                                   const std::vector<std::size_t>& got) {
  throw CheckpointError("array " + name + ": checkpoint shape " + shape_string(got) +
                        " does not match model shape " + shape_string(want));
}

std::vector<std::uint8_t> Archive::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_le<std::uint64_t>(out, d);
    for (float v : e.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Archive Archive::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("not an L2TH checkpoint");
  r.get_string(4);
  const auto version = r.get_le<std::uint32_t>("version");
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get_le<std::uint32_t>("array count");
  Archive a;
  for (std::uint32_t i = 0; i < count; ++i) {
    ArchiveEntry e;
    const auto name_len = r.get_le<std::uint32_t>("name length");
    e.name = r.get_string(name_len);
    const auto rank = r.get_le<std::uint32_t>("rank");
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      e.dims.push_back(r.get_le<std::uint64_t>("dims"));
      n *= e.dims.back();
    }
    if (n > bytes.size()) throw CheckpointError("checkpoint truncated in array " + e.name);
    r.need(n * 4, "array values");
    e.values.resize(n);
    for (auto& v : e.values) v = std::bit_cast<float>(r.get_le<std::uint32_t>("values"));
    a.add_entry(std::move(e));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after last checkpoint array");
  return a;
}

void Archive::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace l2t::checkpoint
