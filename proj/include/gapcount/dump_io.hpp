#pragma once

// Score-dump ingestion and result persistence. Two dump encodings share one
// record schema (schema_version 1):
//
//   text    one JSON object per line:
//           {"schema_version":1,"cell_id":...,"layer":...,"head":...,
//            "seq_id":...,"n":...,"query_pos":...,"dtype":"f32"|"f64",
//            "scores":[...]}
//
//   binary  16-byte magic "GAPCOUNTDUMPv001", then per record:
//             u64-LE header length,
//             header bytes (the text-record JSON without "scores"),
//             u64-LE payload byte length (must equal n * dtype width),
//             raw little-endian IEEE-754 scores.
//
// Readers stream records without loading the file; dtype must be consistent
// within a file. Triples persist as CSV with the frozen header
//   cell_id,layer,head,seq_id,n,query_pos,lambda,delta,alpha,C,is_tie,n_max
// at 17 significant digits (round-trip exact); infinite lambda serializes as
// "inf" (exact-tie rows) and degenerate n = 1 rows as "nan".

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "gapcount/estimators.hpp"
#include "gapcount/row.hpp"

namespace gapcount {

inline constexpr const char kDumpMagic[] = "GAPCOUNTDUMPv001";  // 16 bytes on disk
inline constexpr int kDumpSchemaVersion = 1;

enum class DumpFormat { text, binary };
enum class ScoreDtype { f32, f64 };

class DumpWriter {
 public:
  DumpWriter(const std::string& path, DumpFormat format, ScoreDtype dtype = ScoreDtype::f64);
  void write(const ScoreRow& row);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  DumpFormat format_;
  ScoreDtype dtype_;
};

/// Streaming reader; auto-detects text vs binary from the magic. In lenient
/// mode, records with intact framing but bad content (unknown dtype, n
/// mismatch, non-finite scores, bad header fields) are reported to stderr and
/// skipped; structural damage (bad magic, truncated framing/payload) is always
/// fatal and names the byte offset (binary) or line (text).
class DumpReader {
 public:
  explicit DumpReader(const std::string& path, bool lenient = false);
  std::optional<ScoreRow> next();
  DumpFormat format() const { return format_; }
  std::int64_t skipped() const { return skipped_; }

 private:
  std::optional<ScoreRow> next_text();
  std::optional<ScoreRow> next_binary();

  std::ifstream in_;
  std::string path_;
  DumpFormat format_ = DumpFormat::text;
  bool lenient_ = false;
  std::int64_t skipped_ = 0;
  std::int64_t line_ = 0;       // text position
  std::uint64_t offset_ = 0;    // binary position
  std::string dtype_seen_;      // first record pins the file dtype
};

class TripleWriter {
 public:
  explicit TripleWriter(const std::string& path);
  void write(const TripleRecord& rec);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

void write_triples(const std::string& path, const std::vector<TripleRecord>& records);
std::vector<TripleRecord> read_triples(const std::string& path);

/// FNV-1a 64 over the file bytes, as "fnv1a64:<hex>"; the report provenance digest.
std::string fnv1a64_file(const std::string& path);

}  // namespace gapcount
