#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace l2t::corpus {

using TokenId = std::int32_t;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kEosToken = "<eos>";

/// Token ↔ id mapping. Ids are assigned by descending frequency with
/// lexicographic tie-breaking; `<unk>` and `<eos>` are always present.
class Vocab {
 public:
  std::size_t size() const { return id_to_token_.size(); }
  TokenId unk_id() const { return unk_id_; }
  TokenId eos_id() const { return eos_id_; }

  /// Returns unk_id() for out-of-vocabulary tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// One token per line in id order.
  void save(const std::filesystem::path& path) const;

  static Vocab from_tokens(std::vector<std::string> tokens_in_id_order);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  TokenId unk_id_ = -1;
  TokenId eos_id_ = -1;
};

/// Row-major (rows × cols) matrix of token ids.
struct TokenMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TokenId> ids;

  TokenId operator()(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  TokenId& operator()(std::size_t r, std::size_t c) { return ids[r * cols + c]; }
  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;
};

struct TokenBatch {
  TokenMatrix inputs;
  TokenMatrix targets;
  friend bool operator==(const TokenBatch&, const TokenBatch&) = default;
};

std::vector<std::string> split_whitespace(std::string_view line);

/// Reads a text file into lines. Throws DataError naming the path if unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Builds the vocabulary from whitespace-tokenized lines. The result holds at
/// most `max_size` entries including `<unk>` and `<eos>`.
Vocab build_vocab(const std::vector<std::string>& lines, std::size_t max_size);

/// One id per token plus eos per line.
std::vector<TokenId> encode(const std::vector<std::string>& lines, const Vocab& vocab);
std::vector<TokenId> encode_line(std::string_view line, const Vocab& vocab);

/// Inverse of encode_line for one line (the trailing eos is dropped).
std::string decode(const std::vector<TokenId>& ids, const Vocab& vocab);

/// Splits the stream into `batch_size` contiguous lanes and walks them in
/// windows of `seq_len`; targets are the inputs shifted by one token.
std::vector<TokenBatch> make_batches(const std::vector<TokenId>& ids, std::size_t batch_size,
                                     std::size_t seq_len);

/// floor((floor(n / batch_size) − 1) / seq_len), or 0 when the stream is too short.
std::size_t batch_count(std::size_t n_tokens, std::size_t batch_size, std::size_t seq_len);

/// Fraction of whitespace tokens in `lines` that are not in the vocabulary.
double oov_rate(const std::vector<std::string>& lines, const Vocab& vocab);

/// Deterministic synthetic corpus from a sparse first-order Markov chain over
/// `n_words` word types. Token count including one <eos> per line is exactly
/// `n_tokens`. Used for smoke runs and tests.
std::vector<std::string> synthetic_corpus(std::size_t n_tokens, std::size_t n_words,
                                          std::uint64_t seed);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace l2t::corpus
