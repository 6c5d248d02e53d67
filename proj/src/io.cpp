#include "condfilter/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "condfilter/digest.hpp"
#include "condfilter/errors.hpp"

namespace condfilter {

namespace {

constexpr std::size_t kCsvMaxDim = 4096;
constexpr std::size_t kCsvMaxRows = 1000000;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return std::move(buf).str();
}

void write_all(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

EmbeddingSet load_binary(const std::string& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() < 12) throw FormatError("embedding file too short: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, "EMB1", 4) != 0)
    throw FormatError("bad magic, expected EMB1: " + path);
  const std::uint32_t count = read_u32le(p + 4);
  const std::uint32_t dim = read_u32le(p + 8);
  if (dim == 0) throw FormatError("embedding header: dim must be positive");
  const std::size_t want =
      12 + static_cast<std::size_t>(count) * dim * sizeof(float);
  if (bytes.size() < want)
    throw LengthError("truncated embedding payload: " + path);
  if (bytes.size() > want)
    throw LengthError("trailing bytes after embedding payload: " + path);

  EmbeddingSet set;
  set.count = count;
  set.dim = dim;
  set.data.resize(static_cast<std::size_t>(count) * dim);
  static_assert(std::endian::native == std::endian::little,
                "float payload assumes a little-endian host");
  std::memcpy(set.data.data(), p + 12, set.data.size() * sizeof(float));
  set.validate();
  return set;
}

EmbeddingSet load_csv(const std::string& path) {
  const std::string text = read_all(path);
  EmbeddingSet set;
  std::size_t dim = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    std::size_t cell = pos;
    std::size_t fields = 0;
    while (cell <= eol && cell < text.size() + 1) {
      std::size_t comma = text.find(',', cell);
      if (comma == std::string::npos || comma > eol) comma = eol;
      const char* b = text.data() + cell;
      const char* e = text.data() + comma;
      while (b < e && (*b == ' ' || *b == '\t')) ++b;
      while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t' || *(e - 1) == '\r'))
        --e;
      if (b == e) throw FormatError("csv: empty field at line " +
                                    std::to_string(line_no));
      float v = 0.0f;
      const auto res = std::from_chars(b, e, v);
      if (res.ec != std::errc{} || res.ptr != e)
        throw FormatError("csv: unparseable field at line " +
                          std::to_string(line_no));
      if (!std::isfinite(v))
        throw DataError("csv: non-finite value at line " +
                        std::to_string(line_no));
      set.data.push_back(v);
      ++fields;
      if (comma == eol) break;
      cell = comma + 1;
    }
    if (fields > kCsvMaxDim) throw FormatError("csv: too many columns");
    if (dim == 0) {
      dim = fields;
    } else if (fields != dim) {
      throw FormatError("csv: ragged row at line " + std::to_string(line_no));
    }
    ++set.count;
    if (set.count > kCsvMaxRows) throw FormatError("csv: too many rows");
    pos = eol + 1;
    // Tolerate one trailing newline.
    if (pos >= text.size()) break;
  }
  if (set.count == 0 || dim == 0) throw FormatError("csv: no rows: " + path);
  set.dim = dim;
  set.validate();
  return set;
}

}  // namespace

EmbeddingSet load_embeddings(const std::string& path, EmbeddingFormat format) {
  return format == EmbeddingFormat::binary ? load_binary(path)
                                           : load_csv(path);
}

void save_embeddings(const EmbeddingSet& set, const std::string& path) {
  set.validate();
  std::string bytes;
  bytes.reserve(12 + set.data.size() * sizeof(float));
  bytes.append("EMB1", 4);
  append_u32le(bytes, static_cast<std::uint32_t>(set.count));
  append_u32le(bytes, static_cast<std::uint32_t>(set.dim));
  static_assert(std::endian::native == std::endian::little,
                "float payload assumes a little-endian host");
  bytes.append(reinterpret_cast<const char*>(set.data.data()),
               set.data.size() * sizeof(float));
  write_all(path, bytes);
}

std::vector<std::int32_t> load_labels(const std::string& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() < 8) throw FormatError("label file too short: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, "LBL1", 4) != 0)
    throw FormatError("bad magic, expected LBL1: " + path);
  const std::uint32_t count = read_u32le(p + 4);
  const std::size_t want = 8 + static_cast<std::size_t>(count) * 4;
  if (bytes.size() != want) throw LengthError("label payload size mismatch: " + path);
  std::vector<std::int32_t> labels(count);
  std::memcpy(labels.data(), p + 8, static_cast<std::size_t>(count) * 4);
  return labels;
}

void save_labels(const std::vector<std::int32_t>& labels,
                 const std::string& path) {
  std::string bytes;
  bytes.reserve(8 + labels.size() * 4);
  bytes.append("LBL1", 4);
  append_u32le(bytes, static_cast<std::uint32_t>(labels.size()));
  bytes.append(reinterpret_cast<const char*>(labels.data()), labels.size() * 4);
  write_all(path, bytes);
}

void write_selection(const ScoredSelection& sel, const std::string& path) {
  sel.validate();
  std::string out;
  out.reserve(sel.selected.size() * 8);
  char buf[16];
  for (std::uint32_t idx : sel.selected) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), idx);
    out.append(buf, res.ptr);
    out.push_back('\n');
  }
  write_all(path, out);
}

std::vector<std::uint32_t> read_selection(const std::string& path) {
  const std::string text = read_all(path);
  std::vector<std::uint32_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    if (eol > pos) {
      std::uint32_t v = 0;
      const auto res = std::from_chars(text.data() + pos, text.data() + eol, v);
      if (res.ec != std::errc{} || res.ptr != text.data() + eol)
        throw FormatError("selection file: bad line in " + path);
      out.push_back(v);
    }
    pos = eol + 1;
  }
  return out;
}

void RunReport::validate() const {
  if (selected_count > 0 &&
      !(score_min <= score_mean && score_mean <= score_max)) {
    throw DataError("report: score statistics out of order");
  }
}

RunReport make_report(const ScoredSelection& sel) {
  RunReport r;
  r.method = to_string(sel.method);
  r.budget = static_cast<long long>(sel.budget);
  r.selected_count = static_cast<long long>(sel.selected.size());
  r.seed = sel.seed;
  if (!sel.selected.empty()) {
    double lo = sel.scores[sel.selected[0]];
    double hi = lo;
    double sum = 0.0;
    for (std::uint32_t idx : sel.selected) {
      const double s = sel.scores[idx];
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      sum += s;
    }
    r.score_min = lo;
    r.score_max = hi;
    r.score_mean = sum / static_cast<double>(sel.selected.size());
    // Guard the mean against accumulated rounding drifting past the extremes.
    r.score_mean = std::clamp(r.score_mean, r.score_min, r.score_max);
  }
  return r;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("bad floating-point literal: '" + s + "'");
  return v;
}

std::string format_report(const RunReport& report) {
  report.validate();
  std::ostringstream out;
  out << "method = " << report.method << '\n';
  out << "budget = " << report.budget << '\n';
  out << "selected_count = " << report.selected_count << '\n';
  out << "score_min = " << format_double(report.score_min) << '\n';
  out << "score_max = " << format_double(report.score_max) << '\n';
  out << "score_mean = " << format_double(report.score_mean) << '\n';
  out << "seed = " << report.seed << '\n';
  out << "wall_ms = " << report.wall_ms << '\n';
  out << "input_digests = ";
  for (std::size_t i = 0; i < report.input_digests.size(); ++i) {
    if (i) out << ',';
    out << report.input_digests[i];
  }
  out << '\n';
  for (const auto& [key, value] : report.extras) {
    out << key << " = " << value << '\n';
  }
  return std::move(out).str();
}

void write_report(const RunReport& report, const std::string& path) {
  write_all(path, format_report(report));
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for digest: " + path);
  Digest d;
  std::array<char, 65536> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw IoError("digest read failed: " + path);
  return d.hex();
}

}  // namespace condfilter
