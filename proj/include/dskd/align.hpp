#pragma once

#include "dskd/tensor.hpp"
#include "dskd/tok.hpp"

namespace dskd::align {

/// Half-open token index ranges of one aligned chunk: teacher tokens
/// [t_begin, t_end) and student tokens [s_begin, s_end) decode to the same
/// span of the shared text.
struct Chunk {
  int t_begin = 0, t_end = 0, s_begin = 0, s_end = 0;
  bool operator==(const Chunk&) const = default;
};

/// Minimal chunk decomposition of two tokenizations of the same text:
/// chunks are contiguous, cover both sequences, and none contains an
/// internal position where both prefixes decode to the same string.
struct ChunkSet {
  std::vector<Chunk> quads;
  bool operator==(const ChunkSet&) const = default;
};

/// Two-pointer sweep over end offsets: advance whichever side has the
/// smaller current offset; equal offsets close a chunk. O(n_t + n_s).
ChunkSet align_chunks(const tok::Tokenization& t, const tok::Tokenization& s);

/// Binary chunk membership matrices. m_t2s is n_s x n_t (student-indexed
/// rows); m_s2t is its exact transpose. Entries are 1.0 inside the
/// rectangles spanned by aligned chunks and 0.0 elsewhere.
struct AlignmentMatrix {
  Mat m_t2s;
  Mat m_s2t;
};

AlignmentMatrix build_matrices(const ChunkSet& c, int n_t, int n_s);

}  // namespace dskd::align
