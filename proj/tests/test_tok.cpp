#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dskd/rng.hpp"
#include "dskd/tok.hpp"

using namespace dskd;
using namespace dskd::tok;

namespace {

std::string random_word(Rng& rng, int min_len, int max_len, const std::string& alphabet) {
  const int n = static_cast<int>(rng.randint(min_len, max_len));
  std::string w;
  for (int i = 0; i < n; ++i)
    w += alphabet[static_cast<size_t>(rng.randint(0, static_cast<int>(alphabet.size()) - 1))];
  return w;
}

std::vector<std::string> sample_corpus(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> lines;
  for (int i = 0; i < n; ++i) {
    std::string line = random_word(rng, 3, 6, "abdeilmnorst");
    for (int w = 0; w < rng.randint(1, 3); ++w)
      line += " " + random_word(rng, 2, 6, "abdeilmnorst");
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST_CASE("char vocabulary covers 256 bytes plus 4 specials") {
  auto v = build_vocab({"anything"}, VocabKind::Char, 0, 1);
  CHECK(v.size() == 260);
  CHECK(v.id_to_piece[kPadId] == "<pad>");
  // dense inverse map
  for (int i = 0; i < v.size(); ++i)
    CHECK(v.piece_to_id.at(v.id_to_piece[static_cast<size_t>(i)]) == i);
}

TEST_CASE("merge vocab with zero merges segments like the char vocab") {
  auto corpus = sample_corpus(20, 3);
  auto vc = build_vocab(corpus, VocabKind::Char, 0, 1);
  auto vm = build_vocab(corpus, VocabKind::Merge, 0, 1);
  CHECK(vm.size() == 260);
  for (const auto& line : corpus) {
    auto tc = tokenize(vc, line);
    auto tm = tokenize(vm, line);
    CHECK(tc.end_offsets == tm.end_offsets);
  }
}

TEST_CASE("first merge is the most frequent pair") {
  auto v = build_vocab({"aaab", "aaac"}, VocabKind::Merge, 50, 1);
  REQUIRE(!v.merges.empty());
  CHECK(v.merges[0].first == "a");
  CHECK(v.merges[0].second == "a");
}

TEST_CASE("char tokenization gives one token per byte with cumulative offsets") {
  auto v = build_vocab({"abc"}, VocabKind::Char, 0, 1);
  auto t = tokenize(v, "abc");
  CHECK(t.ids.size() == 3);
  CHECK(t.end_offsets == std::vector<int>{1, 2, 3});
  CHECK(decode(v, t.ids) == "abc");
}

TEST_CASE("learned merge is applied longest-match-first") {
  // "abab" makes ("a","b") the top pair
  auto v = build_vocab({"abab"}, VocabKind::Merge, 1, 1);
  REQUIRE(v.merges.size() == 1);
  CHECK(v.merges[0] == std::pair<std::string, std::string>("a", "b"));
  auto t = tokenize(v, "abc");
  CHECK(t.ids.size() == 2);
  CHECK(v.id_to_piece[static_cast<size_t>(t.ids[0])] == "ab");
  CHECK(t.end_offsets == std::vector<int>{2, 3});
}

TEST_CASE("round trip and offset consistency on random text") {
  auto corpus = sample_corpus(60, 9);
  auto vm = build_vocab(corpus, VocabKind::Merge, 80, 1);
  auto vc = build_vocab(corpus, VocabKind::Char, 0, 1);
  Rng rng(42);
  for (int i = 0; i < 300; ++i) {
    std::string line = sample_corpus(1, 1000 + static_cast<uint64_t>(i))[0];
    for (const auto* v : {&vm, &vc}) {
      auto t = tokenize(*v, line);
      CHECK(decode(*v, t.ids) == line);
      int prev = 0;
      for (size_t k = 0; k < t.ids.size(); ++k) {
        const int end = t.end_offsets[k];
        CHECK(decode(*v, {t.ids[k]}) == line.substr(static_cast<size_t>(prev),
                                                    static_cast<size_t>(end - prev)));
        CHECK(end > prev);
        prev = end;
      }
      if (!t.end_offsets.empty())
        CHECK(t.end_offsets.back() == static_cast<int>(line.size()));
    }
  }
  // char round trip must also survive arbitrary bytes
  std::string noisy;
  for (int i = 0; i < 64; ++i) noisy += static_cast<char>(rng.randint(0, 255));
  CHECK(decode(vc, tokenize(vc, noisy).ids) == noisy);
}

TEST_CASE("decode basics") {
  auto v = build_vocab({"abab"}, VocabKind::Merge, 1, 1);
  CHECK(decode(v, {}) == "");
  const int ab = v.piece_to_id.at("ab");
  CHECK(decode(v, {kBosId, ab, kEosId}) == "ab");
  CHECK_THROWS_AS(decode(v, {v.size()}), std::invalid_argument);
}

TEST_CASE("out-of-alphabet bytes become one-byte unk tokens") {
  Vocabulary v;
  v.kind = VocabKind::Merge;
  v.id_to_piece = {"<pad>", "<bos>", "<eos>", "<unk>", "a", "b"};
  for (int i = 0; i < v.size(); ++i)
    v.piece_to_id[v.id_to_piece[static_cast<size_t>(i)]] = i;
  auto t = tokenize(v, "abz");
  REQUIRE(t.ids.size() == 3);
  CHECK(t.ids[2] == kUnkId);
  CHECK(t.end_offsets == std::vector<int>{1, 2, 3});
  CHECK(decode(v, t.ids) == "ab");  // unk decodes to nothing
}

TEST_CASE("specials never match inside text") {
  auto v = build_vocab({"x"}, VocabKind::Char, 0, 1);
  const std::string text = "a<pad>b";
  auto t = tokenize(v, text);
  CHECK(decode(v, t.ids) == text);
  CHECK(t.ids.size() == text.size());
}

TEST_CASE("vocabulary file round trip") {
  auto corpus = sample_corpus(30, 21);
  corpus.push_back(std::string("tab\there\nand\x01raw\xff"));
  auto v = build_vocab(corpus, VocabKind::Merge, 40, 1);
  const std::string path = "vocab_roundtrip.txt";
  save_vocab(v, path);
  auto w = load_vocab(path);
  CHECK(w.kind == v.kind);
  CHECK(w.id_to_piece == v.id_to_piece);
  CHECK(w.merges == v.merges);
  CHECK(w.piece_to_id.size() == v.piece_to_id.size());
  std::remove(path.c_str());
}

TEST_CASE("build_vocab rejects an empty corpus") {
  CHECK_THROWS_AS(build_vocab({}, VocabKind::Char, 0, 1), std::invalid_argument);
}
