#include "dskd/tok.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace dskd::tok {

namespace {

const char* kSpecialPieces[kNumSpecials] = {"<pad>", "<bos>", "<eos>", "<unk>"};

Vocabulary base_vocab(VocabKind kind) {
  Vocabulary v;
  v.kind = kind;
  v.id_to_piece.reserve(kNumSpecials + 256);
  for (const char* s : kSpecialPieces) v.id_to_piece.emplace_back(s);
  for (int b = 0; b < 256; ++b)
    v.id_to_piece.emplace_back(1, static_cast<char>(static_cast<unsigned char>(b)));
  for (int i = 0; i < static_cast<int>(v.id_to_piece.size()); ++i)
    v.piece_to_id[v.id_to_piece[static_cast<size_t>(i)]] = i;
  return v;
}

}  // namespace

Vocabulary build_vocab(const std::vector<std::string>& corpus, VocabKind kind,
                       int num_merges, uint64_t /*seed: both kinds deterministic*/) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  Vocabulary v = base_vocab(kind);
  if (kind == VocabKind::Char) return v;

  // working segmentation of each line, as piece strings
  std::vector<std::vector<std::string>> segs;
  segs.reserve(corpus.size());
  for (const auto& line : corpus) {
    std::vector<std::string> seg;
    seg.reserve(line.size());
    for (char c : line) seg.emplace_back(1, c);
    segs.push_back(std::move(seg));
  }

  for (int round = 0; round < num_merges; ++round) {
    // highest pair frequency, ties by lexicographic pair order
    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& seg : segs)
      for (size_t i = 0; i + 1 < seg.size(); ++i) counts[{seg[i], seg[i + 1]}] += 1;
    std::pair<std::string, std::string> best;
    int best_count = 0;
    for (const auto& [pair, count] : counts)
      if (count > best_count) {  // map iteration order settles ties
        best = pair;
        best_count = count;
      }
    if (best_count < 2) break;  // nothing left worth merging

    const std::string piece = best.first + best.second;
    if (!v.piece_to_id.count(piece)) {
      v.piece_to_id[piece] = v.size();
      v.id_to_piece.push_back(piece);
    }
    v.merges.push_back(best);

    for (auto& seg : segs) {
      std::vector<std::string> out;
      out.reserve(seg.size());
      for (size_t i = 0; i < seg.size();) {
        if (i + 1 < seg.size() && seg[i] == best.first && seg[i + 1] == best.second) {
          out.push_back(piece);
          i += 2;
        } else {
          out.push_back(seg[i]);
          i += 1;
        }
      }
      seg = std::move(out);
    }
  }
  return v;
}

Tokenization tokenize(const Vocabulary& v, std::string_view text) {
  size_t max_len = 1;
  for (size_t i = kNumSpecials; i < v.id_to_piece.size(); ++i)
    max_len = std::max(max_len, v.id_to_piece[i].size());

  Tokenization t;
  t.text = std::string(text);
  std::string key;
  size_t pos = 0;
  while (pos < text.size()) {
    int id = -1;
    size_t len = std::min(max_len, text.size() - pos);
    for (; len >= 1; --len) {
      key.assign(text.substr(pos, len));
      auto it = v.piece_to_id.find(key);
      if (it != v.piece_to_id.end() && it->second >= kNumSpecials) {
        id = it->second;
        break;
      }
    }
    if (id < 0) {  // byte outside the alphabet
      id = kUnkId;
      len = 1;
    }
    pos += len;
    t.ids.push_back(id);
    t.end_offsets.push_back(static_cast<int>(pos));
  }
  return t;
}

std::string decode(const Vocabulary& v, const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= v.size())
      throw std::invalid_argument("decode: id " + std::to_string(id) +
                                  " out of range for vocabulary of size " +
                                  std::to_string(v.size()));
    if (id < kNumSpecials) continue;
    out += v.id_to_piece[static_cast<size_t>(id)];
  }
  return out;
}

std::string escape_piece(std::string_view s) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (char c : s) {
    unsigned char b = static_cast<unsigned char>(c);
    if (c == '\\')
      out += "\\\\";
    else if (c == '\t')
      out += "\\t";
    else if (c == '\n')
      out += "\\n";
    else if (c == '\r')
      out += "\\r";
    else if (b < 0x20 || b >= 0x7f) {
      out += "\\x";
      out += hex[b >> 4];
      out += hex[b & 0xf];
    } else
      out += c;
  }
  return out;
}

std::string unescape_piece(std::string_view s) {
  auto hexval = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 >= s.size()) throw std::invalid_argument("bad escape in vocab piece");
    char c = s[++i];
    if (c == '\\')
      out += '\\';
    else if (c == 't')
      out += '\t';
    else if (c == 'n')
      out += '\n';
    else if (c == 'r')
      out += '\r';
    else if (c == 'x') {
      if (i + 2 >= s.size()) throw std::invalid_argument("bad \\x escape in vocab piece");
      int hi = hexval(s[i + 1]), lo = hexval(s[i + 2]);
      if (hi < 0 || lo < 0) throw std::invalid_argument("bad \\x escape in vocab piece");
      out += static_cast<char>((hi << 4) | lo);
      i += 2;
    } else
      throw std::invalid_argument("bad escape in vocab piece");
  }
  return out;
}

void save_vocab(const Vocabulary& v, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_vocab: cannot open " + path);
  f << "dskd-vocab v1\n";
  f << "kind " << (v.kind == VocabKind::Char ? "char" : "merge") << "\n";
  f << "pieces " << v.size() << "\n";
  for (const auto& p : v.id_to_piece) f << escape_piece(p) << "\n";
  f << "merges " << v.merges.size() << "\n";
  for (const auto& [l, r] : v.merges)
    f << escape_piece(l) << "\t" << escape_piece(r) << "\n";
  f << "specials pad=" << kPadId << " bos=" << kBosId << " eos=" << kEosId
    << " unk=" << kUnkId << "\n";
  if (!f) throw std::runtime_error("save_vocab: write failed for " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_vocab: cannot open " + path);
  std::string line;
  auto expect_line = [&](const char* what) {
    if (!std::getline(f, line))
      throw std::runtime_error("load_vocab: truncated file, expected " + std::string(what));
  };
  expect_line("header");
  if (line != "dskd-vocab v1") throw std::runtime_error("load_vocab: bad header in " + path);
  expect_line("kind");
  Vocabulary v;
  if (line == "kind char")
    v.kind = VocabKind::Char;
  else if (line == "kind merge")
    v.kind = VocabKind::Merge;
  else
    throw std::runtime_error("load_vocab: bad kind line: " + line);
  expect_line("piece count");
  if (line.rfind("pieces ", 0) != 0) throw std::runtime_error("load_vocab: bad pieces line");
  const int n = std::stoi(line.substr(7));
  v.id_to_piece.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    expect_line("piece");
    v.id_to_piece.push_back(unescape_piece(line));
  }
  expect_line("merge count");
  if (line.rfind("merges ", 0) != 0) throw std::runtime_error("load_vocab: bad merges line");
  const int m = std::stoi(line.substr(7));
  for (int i = 0; i < m; ++i) {
    expect_line("merge");
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("load_vocab: bad merge line");
    v.merges.emplace_back(unescape_piece(line.substr(0, tab)),
                          unescape_piece(line.substr(tab + 1)));
  }
  expect_line("specials");
  if (line.rfind("specials ", 0) != 0)
    throw std::runtime_error("load_vocab: bad specials line");
  for (int i = 0; i < static_cast<int>(v.id_to_piece.size()); ++i) {
    auto [it, fresh] = v.piece_to_id.emplace(v.id_to_piece[static_cast<size_t>(i)], i);
    if (!fresh) throw std::runtime_error("load_vocab: duplicate piece at id " +
                                         std::to_string(i));
  }
  return v;
}

}  // namespace dskd::tok
