#include "dskd/align.hpp"

#include <stdexcept>

namespace dskd::align {

ChunkSet align_chunks(const tok::Tokenization& t, const tok::Tokenization& s) {
  if (t.text != s.text)
    throw std::invalid_argument("align_chunks: tokenizations cover different texts");
  ChunkSet out;
  const int nt = static_cast<int>(t.ids.size());
  const int ns = static_cast<int>(s.ids.size());
  int ti = 0, si = 0;
  int chunk_t = 0, chunk_s = 0;
  while (ti < nt && si < ns) {
    const int ot = t.end_offsets[static_cast<size_t>(ti)];
    const int os = s.end_offsets[static_cast<size_t>(si)];
    if (ot < os) {
      ++ti;
    } else if (os < ot) {
      ++si;
    } else {
      out.quads.push_back({chunk_t, ti + 1, chunk_s, si + 1});
      ++ti;
      ++si;
      chunk_t = ti;
      chunk_s = si;
    }
  }
  // both sequences end at len(text), so the sweep always closes the last chunk
  if (chunk_t != nt || chunk_s != ns)
    throw std::logic_error("align_chunks: sweep failed to cover both sequences");
  return out;
}

AlignmentMatrix build_matrices(const ChunkSet& c, int n_t, int n_s) {
  AlignmentMatrix m;
  m.m_t2s = Mat::Zero(n_s, n_t);
  for (const auto& q : c.quads) {
    if (q.t_begin < 0 || q.t_end > n_t || q.s_begin < 0 || q.s_end > n_s ||
        q.t_begin >= q.t_end || q.s_begin >= q.s_end)
      throw std::invalid_argument(
          "build_matrices: quad (" + std::to_string(q.t_begin) + "," +
          std::to_string(q.t_end) + "," + std::to_string(q.s_begin) + "," +
          std::to_string(q.s_end) + ") out of range for " + std::to_string(n_t) + "x" +
          std::to_string(n_s));
    m.m_t2s.block(q.s_begin, q.t_begin, q.s_end - q.s_begin, q.t_end - q.t_begin)
        .setOnes();
  }
  m.m_s2t = m.m_t2s.transpose();
  return m;
}

}  // namespace dskd::align
