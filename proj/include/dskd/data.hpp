#pragma once

#include <string>
#include <vector>

#include "dskd/align.hpp"
#include "dskd/tensor.hpp"
#include "dskd/tok.hpp"

namespace dskd::data {

/// One instruction-following record. instruction and output are non-empty;
/// input may be empty. The model prompt is instruction + "\n", with input and
/// another "\n" appended when input is present.
struct DatasetRecord {
  std::string instruction;
  std::string input;
  std::string output;
};

/// Line-delimited JSON ingestion; malformed lines and schema violations
/// report 1-based line numbers.
std::vector<DatasetRecord> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<DatasetRecord>& records, const std::string& path);

std::string prompt_text(const DatasetRecord& rec);

/// A record tokenized under both vocabularies and aligned once at load time.
/// Model sequences are [bos] + prompt tokens + response tokens with gold
/// labels shifted one ahead (the final gold is eos). The response mask marks
/// positions whose gold falls in the response (eos included). The chunk set
/// and matrices live in model positions: a 1x1 bos chunk plus the text
/// chunks shifted by one.
struct Example {
  std::string prompt;
  std::string response;
  std::vector<int> ids_t, gold_t;
  std::vector<int> ids_s, gold_s;
  RowMask mask_t, mask_s;
  align::ChunkSet chunks;
  align::AlignmentMatrix matrices;
};

Example prepare_example(const DatasetRecord& rec, const tok::Vocabulary& teacher_vocab,
                        const tok::Vocabulary& student_vocab);

std::vector<Example> prepare_dataset(const std::vector<DatasetRecord>& records,
                                     const tok::Vocabulary& teacher_vocab,
                                     const tok::Vocabulary& student_vocab);

}  // namespace dskd::data
