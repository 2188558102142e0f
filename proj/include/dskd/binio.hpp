#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "dskd/tensor.hpp"

// Little-endian binary checkpoint primitives (formats in docs/formats.md).
namespace dskd::binio {

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are little-endian; big-endian hosts need byte swaps");

struct Writer {
  std::ofstream f;
  explicit Writer(const std::string& path) : f(path, std::ios::binary) {
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
  }
  void bytes(const void* p, size_t n) { f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void magic(const char (&m)[9]) { bytes(m, 8); }
  void mat(const Mat& m) { bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size())); }
  void close(const std::string& path) {
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + path);
  }
};

struct Reader {
  std::ifstream f;
  std::string path;
  explicit Reader(const std::string& p) : f(p, std::ios::binary), path(p) {
    if (!f) throw std::runtime_error("cannot open: " + p);
  }
  void bytes(void* p, size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  }
  uint8_t u8() { uint8_t v; bytes(&v, 1); return v; }
  uint32_t u32() { uint32_t v; bytes(&v, 4); return v; }
  uint64_t u64() { uint64_t v; bytes(&v, 8); return v; }
  void expect_magic(const char (&m)[9]) {
    char got[8];
    bytes(got, 8);
    if (std::string_view(got, 8) != std::string_view(m, 8))
      throw std::runtime_error("bad magic in " + path);
  }
  void mat(Mat& m) { bytes(m.data(), sizeof(double) * static_cast<size_t>(m.size())); }
};

}  // namespace dskd::binio
