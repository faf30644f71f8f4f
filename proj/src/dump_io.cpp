#include "gapcount/dump_io.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <limits>

#include <json.hpp>

namespace gapcount {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// sanity caps on the binary framing; anything above is treated as corruption
constexpr std::uint64_t kMaxHeaderBytes = 1ull << 24;
constexpr std::uint64_t kMaxPayloadBytes = 1ull << 40;

void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

const char* dtype_name(ScoreDtype d) { return d == ScoreDtype::f32 ? "f32" : "f64"; }

ordered_json meta_json(const ScoreRow& row, ScoreDtype dtype) {
  ordered_json j;
  j["schema_version"] = kDumpSchemaVersion;
  j["cell_id"] = row.meta.cell_id;
  j["layer"] = row.meta.layer;
  j["head"] = row.meta.head;
  j["seq_id"] = row.meta.seq_id;
  j["n"] = row.meta.n;
  j["query_pos"] = row.meta.query_pos;
  j["dtype"] = dtype_name(dtype);
  return j;
}

struct RecordHeader {
  RowMeta meta;
  std::string dtype;
};

RecordHeader parse_header(const json& j) {
  if (!j.is_object()) throw input_error("record is not a JSON object");
  const auto need = [&](const char* key) -> const json& {
    const auto it = j.find(key);
    if (it == j.end()) throw input_error(std::string("missing field '") + key + "'");
    return *it;
  };
  RecordHeader h;
  if (!need("schema_version").is_number_integer() ||
      need("schema_version").get<int>() != kDumpSchemaVersion)
    throw input_error("unsupported schema_version");
  h.meta.cell_id = need("cell_id").get<std::string>();
  h.meta.layer = need("layer").get<int>();
  h.meta.head = need("head").get<int>();
  h.meta.seq_id = need("seq_id").get<std::string>();
  h.meta.n = need("n").get<std::int64_t>();
  h.meta.query_pos = need("query_pos").get<std::int64_t>();
  h.dtype = need("dtype").get<std::string>();
  if (h.dtype != "f32" && h.dtype != "f64") throw input_error("unknown dtype '" + h.dtype + "'");
  if (h.meta.n < 1) throw input_error("record n must be >= 1");
  return h;
}

// minimal RFC-4180 quoting; ids are usually plain but commas do occur
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw input_error("bad numeric field in " + where);
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') throw input_error("bad integer field in " + where);
  return v;
}

constexpr const char* kTripleHeader =
    "cell_id,layer,head,seq_id,n,query_pos,lambda,delta,alpha,C,is_tie,n_max";

}  // namespace

// ---------------------------------------------------------------------------
// DumpWriter
// ---------------------------------------------------------------------------

DumpWriter::DumpWriter(const std::string& path, DumpFormat format, ScoreDtype dtype)
    : out_(path, std::ios::binary), path_(path), format_(format), dtype_(dtype) {
  if (!out_) throw input_error("cannot open dump for writing: " + path);
  if (format_ == DumpFormat::binary) out_.write(kDumpMagic, 16);
}

void DumpWriter::write(const ScoreRow& row) {
  validate_row(row);
  if (format_ == DumpFormat::text) {
    ordered_json j = meta_json(row, dtype_);
    if (dtype_ == ScoreDtype::f32) {
      std::vector<float> narrowed(row.scores.begin(), row.scores.end());
      j["scores"] = narrowed;
    } else {
      j["scores"] = row.scores;
    }
    out_ << j.dump() << '\n';
  } else {
    const std::string header = meta_json(row, dtype_).dump();
    std::string buf;
    put_u64le(buf, header.size());
    buf += header;
    if (dtype_ == ScoreDtype::f32) {
      put_u64le(buf, row.scores.size() * 4);
      for (double z : row.scores) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(z));
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
      }
    } else {
      put_u64le(buf, row.scores.size() * 8);
      for (double z : row.scores) {
        const auto bits = std::bit_cast<std::uint64_t>(z);
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
      }
    }
    out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out_) throw input_error("write failed: " + path_);
}

void DumpWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    if (!out_) throw input_error("flush failed: " + path_);
    out_.close();
  }
}

// ---------------------------------------------------------------------------
// DumpReader
// ---------------------------------------------------------------------------

DumpReader::DumpReader(const std::string& path, bool lenient)
    : in_(path, std::ios::binary), path_(path), lenient_(lenient) {
  if (!in_) throw input_error("cannot open dump: " + path);
  char magic[16];
  in_.read(magic, 16);
  if (in_.gcount() == 16 && std::memcmp(magic, kDumpMagic, 16) == 0) {
    format_ = DumpFormat::binary;
    offset_ = 16;
  } else {
    format_ = DumpFormat::text;
    in_.clear();
    in_.seekg(0);
  }
}

std::optional<ScoreRow> DumpReader::next() {
  return format_ == DumpFormat::text ? next_text() : next_binary();
}

std::optional<ScoreRow> DumpReader::next_text() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RecordHeader h = parse_header(j);
      if (dtype_seen_.empty())
        dtype_seen_ = h.dtype;
      else if (dtype_seen_ != h.dtype)
        throw input_error("dtype changes within the file");
      const auto it = j.find("scores");
      if (it == j.end() || !it->is_array()) throw input_error("missing scores array");
      if (static_cast<std::int64_t>(it->size()) != h.meta.n)
        throw input_error("scores length does not match n");
      ScoreRow row;
      row.meta = std::move(h.meta);
      row.scores.reserve(it->size());
      for (const auto& v : *it) {
        if (!v.is_number()) throw input_error("non-numeric score");
        row.scores.push_back(v.get<double>());
      }
      validate_row(row);
      return row;
    } catch (const std::exception& e) {
      const std::string msg = path_ + " line " + std::to_string(line_) + ": " + e.what();
      if (!lenient_) throw input_error(msg);
      std::cerr << "gapcount: skipping malformed record: " << msg << '\n';
      ++skipped_;
    }
  }
  return std::nullopt;
}

std::optional<ScoreRow> DumpReader::next_binary() {
  for (;;) {
    unsigned char lenbuf[8];
    in_.read(reinterpret_cast<char*>(lenbuf), 8);
    if (in_.gcount() == 0 && in_.eof()) return std::nullopt;  // clean end at a record boundary
    const std::uint64_t record_at = offset_;
    if (in_.gcount() != 8)
      throw input_error(path_ + " (byte offset " + std::to_string(record_at) +
                        "): truncated record header length");
    offset_ += 8;
    const std::uint64_t header_len = get_u64le(lenbuf);
    if (header_len == 0 || header_len > kMaxHeaderBytes)
      throw input_error(path_ + " (byte offset " + std::to_string(record_at) +
                        "): implausible header length " + std::to_string(header_len));

    std::string header(header_len, '\0');
    in_.read(header.data(), static_cast<std::streamsize>(header_len));
    if (static_cast<std::uint64_t>(in_.gcount()) != header_len)
      throw input_error(path_ + " (byte offset " + std::to_string(offset_) +
                        "): truncated record header");
    offset_ += header_len;

    in_.read(reinterpret_cast<char*>(lenbuf), 8);
    if (in_.gcount() != 8)
      throw input_error(path_ + " (byte offset " + std::to_string(offset_) +
                        "): truncated payload length");
    offset_ += 8;
    const std::uint64_t payload_len = get_u64le(lenbuf);
    if (payload_len > kMaxPayloadBytes)
      throw input_error(path_ + " (byte offset " + std::to_string(offset_ - 8) +
                        "): implausible payload length " + std::to_string(payload_len));

    std::string payload(payload_len, '\0');
    in_.read(payload.data(), static_cast<std::streamsize>(payload_len));
    if (static_cast<std::uint64_t>(in_.gcount()) != payload_len)
      throw input_error(path_ + " (byte offset " + std::to_string(offset_) +
                        "): truncated payload (expected " + std::to_string(payload_len) +
                        " bytes)");
    offset_ += payload_len;

    // framing is intact from here on; content problems are skippable in lenient mode
    try {
      const json j = json::parse(header);
      RecordHeader h = parse_header(j);
      if (dtype_seen_.empty())
        dtype_seen_ = h.dtype;
      else if (dtype_seen_ != h.dtype)
        throw input_error("dtype changes within the file");
      const std::uint64_t width = h.dtype == "f32" ? 4 : 8;
      if (payload_len != width * static_cast<std::uint64_t>(h.meta.n))
        throw input_error("payload length " + std::to_string(payload_len) +
                          " does not match n=" + std::to_string(h.meta.n) + " at dtype " + h.dtype);
      ScoreRow row;
      row.meta = std::move(h.meta);
      row.scores.resize(static_cast<std::size_t>(row.meta.n));
      const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
      if (width == 4) {
        for (std::size_t i = 0; i < row.scores.size(); ++i) {
          std::uint32_t bits = 0;
          for (int b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
          row.scores[i] = static_cast<double>(std::bit_cast<float>(bits));
        }
      } else {
        for (std::size_t i = 0; i < row.scores.size(); ++i) {
          std::uint64_t bits = 0;
          for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
          row.scores[i] = std::bit_cast<double>(bits);
        }
      }
      validate_row(row);
      return row;
    } catch (const std::exception& e) {
      const std::string msg =
          path_ + " (record at byte offset " + std::to_string(record_at) + "): " + e.what();
      if (!lenient_) throw input_error(msg);
      std::cerr << "gapcount: skipping malformed record: " << msg << '\n';
      ++skipped_;
    }
  }
}

// ---------------------------------------------------------------------------
// Triples CSV
// ---------------------------------------------------------------------------

TripleWriter::TripleWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw input_error("cannot open triples file for writing: " + path);
  out_ << kTripleHeader << '\n';
}

void TripleWriter::write(const TripleRecord& rec) {
  const ContactTriple& t = rec.triple;
  std::string lambda;
  if (t.is_tie)
    lambda = "inf";
  else if (t.degenerate)
    lambda = "nan";
  else
    lambda = format_g17(t.lambda);
  out_ << csv_escape(rec.meta.cell_id) << ',' << rec.meta.layer << ',' << rec.meta.head << ','
       << csv_escape(rec.meta.seq_id) << ',' << rec.meta.n << ',' << rec.meta.query_pos << ','
       << lambda << ',' << format_g17(t.delta) << ',' << format_g17(t.alpha) << ','
       << format_g17(t.C) << ',' << (t.is_tie ? "true" : "false") << ',' << t.n_max << '\n';
  if (!out_) throw input_error("write failed: " + path_);
}

void TripleWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    if (!out_) throw input_error("flush failed: " + path_);
    out_.close();
  }
}

void write_triples(const std::string& path, const std::vector<TripleRecord>& records) {
  TripleWriter w(path);
  for (const auto& rec : records) w.write(rec);
  w.close();
}

std::vector<TripleRecord> read_triples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open triples file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ": empty triples file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTripleHeader)
    throw input_error(path + ": unexpected CSV header (schema_version 1 expects '" +
                      std::string(kTripleHeader) + "')");

  std::vector<TripleRecord> out;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path + " line " + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 12) throw input_error(where + ": expected 12 fields, got " +
                                          std::to_string(f.size()));
    TripleRecord rec;
    rec.meta.cell_id = f[0];
    rec.meta.layer = static_cast<int>(parse_int(f[1], where));
    rec.meta.head = static_cast<int>(parse_int(f[2], where));
    rec.meta.seq_id = f[3];
    rec.meta.n = parse_int(f[4], where);
    rec.meta.query_pos = parse_int(f[5], where);
    rec.triple.lambda = parse_double(f[6], where);
    rec.triple.delta = parse_double(f[7], where);
    rec.triple.alpha = parse_double(f[8], where);
    rec.triple.C = parse_double(f[9], where);
    if (f[10] == "true")
      rec.triple.is_tie = true;
    else if (f[10] == "false")
      rec.triple.is_tie = false;
    else
      throw input_error(where + ": is_tie must be true or false");
    rec.triple.n_max = parse_int(f[11], where);
    rec.triple.n = rec.meta.n;
    rec.triple.degenerate = std::isnan(rec.triple.lambda) && !rec.triple.is_tie;
    if (rec.triple.is_tie && !std::isinf(rec.triple.lambda))
      throw input_error(where + ": tie rows must carry lambda=inf");
    out.push_back(std::move(rec));
  }
  return out;
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file for digest: " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

}  // namespace gapcount
