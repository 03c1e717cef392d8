#include "l2t/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <random>

#include "l2t/error.hpp"

namespace l2t::corpus {

TokenId Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? unk_id_ : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(id_to_token_.size()));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::filesystem::path& path) const { write_lines(path, id_to_token_); }

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.id_to_token_ = std::move(tokens);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    auto [it, inserted] = v.token_to_id_.emplace(v.id_to_token_[i], static_cast<TokenId>(i));
    if (!inserted) throw VocabError("duplicate token in vocabulary: " + v.id_to_token_[i]);
  }
  auto unk = v.token_to_id_.find(std::string(kUnkToken));
  auto eos = v.token_to_id_.find(std::string(kEosToken));
  if (unk == v.token_to_id_.end() || eos == v.token_to_id_.end()) {
    throw VocabError("vocabulary must contain <unk> and <eos>");
  }
  v.unk_id_ = unk->second;
  v.eos_id_ = eos->second;
  return v;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

Vocab build_vocab(const std::vector<std::string>& lines, std::size_t max_size) {
  if (max_size < 2) throw VocabError("vocabulary maximum must be at least 2 (<unk>, <eos>)");
  std::map<std::string, std::size_t> counts;
  std::size_t n_tokens = 0;
  for (const auto& line : lines) {
    for (auto& tok : split_whitespace(line)) {
      ++counts[std::move(tok)];
      ++n_tokens;
    }
  }
  if (n_tokens == 0) throw EmptyCorpus("corpus contains no tokens");

  // <eos> occurs once per line; count it like any other token so it sorts by frequency.
  const std::string unk(kUnkToken), eos(kEosToken);
  counts[eos] += lines.size();

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens;
  tokens.reserve(std::min(max_size, ranked.size() + 1));
  const bool unk_in_file = counts.count(unk) != 0;
  // The two specials always survive truncation.
  const std::size_t regular_limit = max_size - 2;
  std::size_t regular = 0;
  for (const auto& [tok, n] : ranked) {
    if (tok == unk || tok == eos) {
      tokens.push_back(tok);
    } else if (regular < regular_limit) {
      tokens.push_back(tok);
      ++regular;
    }
  }
  if (!unk_in_file) tokens.push_back(unk);
  return Vocab::from_tokens(std::move(tokens));
}

std::vector<TokenId> encode_line(std::string_view line, const Vocab& vocab) {
  std::vector<TokenId> ids;
  for (const auto& tok : split_whitespace(line)) ids.push_back(vocab.id(tok));
  ids.push_back(vocab.eos_id());
  return ids;
}

std::vector<TokenId> encode(const std::vector<std::string>& lines, const Vocab& vocab) {
  std::vector<TokenId> ids;
  for (const auto& line : lines) {
    for (const auto& tok : split_whitespace(line)) ids.push_back(vocab.id(tok));
    ids.push_back(vocab.eos_id());
  }
  return ids;
}

std::string decode(const std::vector<TokenId>& ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id == vocab.eos_id()) break;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

std::size_t batch_count(std::size_t n_tokens, std::size_t batch_size, std::size_t seq_len) {
  if (batch_size == 0 || seq_len == 0) return 0;
  const std::size_t lane = n_tokens / batch_size;
  if (lane < 1) return 0;
  return (lane - 1) / seq_len;
}

std::vector<TokenBatch> make_batches(const std::vector<TokenId>& ids, std::size_t batch_size,
                                     std::size_t seq_len) {
  if (batch_size == 0 || seq_len == 0) {
    throw CorpusTooSmall("batch size and sequence length must be positive");
  }
  if (ids.size() < batch_size * seq_len + 1) {
    throw CorpusTooSmall("need at least " + std::to_string(batch_size * seq_len + 1) +
                         " tokens for batch " + std::to_string(batch_size) + " × seq " +
                         std::to_string(seq_len) + ", got " + std::to_string(ids.size()));
  }
  const std::size_t lane = ids.size() / batch_size;
  const std::size_t n_batches = (lane - 1) / seq_len;
  if (n_batches == 0) throw CorpusTooSmall("stream too short for one batch per lane");
  std::vector<TokenBatch> batches(n_batches);
  for (std::size_t i = 0; i < n_batches; ++i) {
    auto& batch = batches[i];
    batch.inputs = {batch_size, seq_len, std::vector<TokenId>(batch_size * seq_len)};
    batch.targets = batch.inputs;
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t start = b * lane + i * seq_len;
      for (std::size_t t = 0; t < seq_len; ++t) {
        batch.inputs(b, t) = ids[start + t];
        batch.targets(b, t) = ids[start + t + 1];
      }
    }
  }
  return batches;
}

double oov_rate(const std::vector<std::string>& lines, const Vocab& vocab) {
  std::size_t total = 0, oov = 0;
  for (const auto& line : lines) {
    for (const auto& tok : split_whitespace(line)) {
      ++total;
      if (!vocab.contains(tok)) ++oov;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(oov) / static_cast<double>(total);
}

std::vector<std::string> synthetic_corpus(std::size_t n_tokens, std::size_t n_words,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr std::size_t kBranches = 3;
  const double branch_p[kBranches] = {0.6, 0.3, 0.1};
  std::vector<std::array<std::size_t, kBranches>> next(n_words);
  std::uniform_int_distribution<std::size_t> word(0, n_words - 1);
  for (auto& succ : next) {
    for (auto& s : succ) s = word(rng);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> line_len(5, 20);

  std::vector<std::string> lines;
  std::size_t emitted = 0;
  std::size_t current = word(rng);
  while (emitted < n_tokens) {
    // leave room for the <eos> and never strand a lone remaining token
    const std::size_t remaining = n_tokens - emitted;
    std::size_t len = std::min(line_len(rng), remaining - 1);
    if (remaining - 1 - len == 1) --len;
    std::string line;
    for (std::size_t i = 0; i < len; ++i) {
      if (!line.empty()) line += ' ';
      line += "w" + std::to_string(current);
      ++emitted;
      const double r = unit(rng);
      std::size_t pick = r < branch_p[0] ? 0 : (r < branch_p[0] + branch_p[1] ? 1 : 2);
      current = next[current][pick];
    }
    ++emitted;  // the line's <eos>
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace l2t::corpus
