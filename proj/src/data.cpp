#include "dskd/data.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace dskd::data {

std::vector<DatasetRecord> load_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_jsonl: cannot open " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("load_jsonl: parse error at line " + std::to_string(lineno) +
                               " of " + path + ": " + e.what());
    }
    for (const char* field : {"instruction", "input", "output"})
      if (!j.contains(field) || !j[field].is_string())
        throw std::runtime_error("load_jsonl: line " + std::to_string(lineno) + " of " +
                                 path + " missing string field \"" + field + "\"");
    DatasetRecord r{j["instruction"].get<std::string>(), j["input"].get<std::string>(),
                    j["output"].get<std::string>()};
    if (r.instruction.empty() || r.output.empty())
      throw std::runtime_error("load_jsonl: line " + std::to_string(lineno) + " of " +
                               path + " has an empty instruction or output");
    out.push_back(std::move(r));
  }
  return out;
}

void save_jsonl(const std::vector<DatasetRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_jsonl: cannot open " + path);
  for (const auto& r : records) {
    nlohmann::json j{{"instruction", r.instruction}, {"input", r.input}, {"output", r.output}};
    f << j.dump() << "\n";
  }
  if (!f) throw std::runtime_error("save_jsonl: write failed for " + path);
}

std::string prompt_text(const DatasetRecord& rec) {
  std::string p = rec.instruction + "\n";
  if (!rec.input.empty()) p += rec.input + "\n";
  return p;
}

namespace {

struct SideSequences {
  std::vector<int> ids, gold;
  RowMask mask;
  tok::Tokenization text_tok;  // prompt + response, boundary forced
};

SideSequences build_side(const tok::Vocabulary& v, const std::string& prompt,
                         const std::string& response) {
  // response tokenized separately so the boundary is a token boundary
  auto tp = tok::tokenize(v, prompt);
  auto tr = tok::tokenize(v, response);
  SideSequences s;
  s.text_tok.text = prompt + response;
  s.text_tok.ids = tp.ids;
  s.text_tok.ids.insert(s.text_tok.ids.end(), tr.ids.begin(), tr.ids.end());
  s.text_tok.end_offsets = tp.end_offsets;
  const int shift = static_cast<int>(prompt.size());
  for (int e : tr.end_offsets) s.text_tok.end_offsets.push_back(e + shift);

  s.ids.push_back(tok::kBosId);
  s.ids.insert(s.ids.end(), s.text_tok.ids.begin(), s.text_tok.ids.end());
  s.gold = s.text_tok.ids;
  s.gold.push_back(tok::kEosId);
  const size_t n_prompt = tp.ids.size();
  s.mask.assign(s.ids.size(), 0);
  for (size_t p = n_prompt; p < s.ids.size(); ++p) s.mask[p] = 1;
  return s;
}

}  // namespace

Example prepare_example(const DatasetRecord& rec, const tok::Vocabulary& teacher_vocab,
                        const tok::Vocabulary& student_vocab) {
  if (rec.instruction.empty() || rec.output.empty())
    throw std::invalid_argument("prepare_example: empty instruction or output");
  Example ex;
  ex.prompt = prompt_text(rec);
  ex.response = rec.output;

  auto t = build_side(teacher_vocab, ex.prompt, ex.response);
  auto s = build_side(student_vocab, ex.prompt, ex.response);
  ex.ids_t = std::move(t.ids);
  ex.gold_t = std::move(t.gold);
  ex.mask_t = std::move(t.mask);
  ex.ids_s = std::move(s.ids);
  ex.gold_s = std::move(s.gold);
  ex.mask_s = std::move(s.mask);

  auto text_chunks = align::align_chunks(t.text_tok, s.text_tok);
  ex.chunks.quads.push_back({0, 1, 0, 1});  // bos aligns with bos
  for (const auto& q : text_chunks.quads)
    ex.chunks.quads.push_back({q.t_begin + 1, q.t_end + 1, q.s_begin + 1, q.s_end + 1});
  ex.matrices = align::build_matrices(ex.chunks, static_cast<int>(ex.ids_t.size()),
                                      static_cast<int>(ex.ids_s.size()));
  return ex;
}

std::vector<Example> prepare_dataset(const std::vector<DatasetRecord>& records,
                                     const tok::Vocabulary& teacher_vocab,
                                     const tok::Vocabulary& student_vocab) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back(prepare_example(r, teacher_vocab, student_vocab));
  return out;
}

}  // namespace dskd::data
