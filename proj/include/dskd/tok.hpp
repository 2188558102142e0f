#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dskd::tok {

// Special token ids are fixed by construction for every vocabulary.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumSpecials = 4;

enum class VocabKind { Char, Merge };

/// A byte-level vocabulary. The char kind is the 256 single bytes; the merge
/// kind additionally holds pieces learned by pair merging. Ids are dense:
/// specials first, then the 256 bytes, then merged pieces in creation order.
struct Vocabulary {
  VocabKind kind = VocabKind::Char;
  std::vector<std::string> id_to_piece;
  std::unordered_map<std::string, int> piece_to_id;
  std::vector<std::pair<std::string, std::string>> merges;

  int size() const { return static_cast<int>(id_to_piece.size()); }
};

/// Token ids plus, for each token, the exclusive end offset (in bytes) of the
/// text it covers. Offsets are built incrementally during tokenization.
struct Tokenization {
  std::vector<int> ids;
  std::vector<int> end_offsets;
  std::string text;
};

/// Deterministic vocabulary construction. Merge selection picks the most
/// frequent adjacent pair, breaking ties by lexicographic pair order; it
/// stops early when no pair repeats. The seed is part of the contract but
/// both kinds are fully deterministic without it.
Vocabulary build_vocab(const std::vector<std::string>& corpus, VocabKind kind,
                       int num_merges, uint64_t seed);

/// Greedy longest-match-first segmentation over the vocabulary pieces
/// (specials never match). Unknown bytes become one-byte unk tokens.
Tokenization tokenize(const Vocabulary& v, std::string_view text);

/// Concatenates pieces; specials decode to the empty string.
std::string decode(const Vocabulary& v, const std::vector<int>& ids);

// Text serialization (grammar in docs/formats.md).
void save_vocab(const Vocabulary& v, const std::string& path);
Vocabulary load_vocab(const std::string& path);

std::string escape_piece(std::string_view s);
std::string unescape_piece(std::string_view s);

}  // namespace dskd::tok
