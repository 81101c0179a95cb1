#include "ucs/matrix_store.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "ucs/error.hpp"

namespace ucs {
namespace fs = std::filesystem;

namespace {

template <typename T>
T load_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(v);
}

template <typename T>
void store_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U v = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

Matrix parse_csv(const std::string& text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorKind::ParseError, origin + ": empty CSV (line 1)");
  std::size_t cols = 0;
  {
    std::string_view header = trim(lines[0]);
    std::size_t pos = 0;
    while (pos <= header.size()) {
      const auto comma = header.find(',', pos);
      const auto field = trim(header.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (field != "c" + std::to_string(cols))
        throw Error(ErrorKind::BadMagic, origin + ": CSV header must read c0,c1,... (line 1)");
      ++cols;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  std::vector<double> values;
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty()) continue;
    std::size_t pos = 0;
    std::size_t c = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const auto field = trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw Error(ErrorKind::ParseError, origin + ": bad number at line " + std::to_string(li + 1));
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteValue, origin + ": non-finite value at line " + std::to_string(li + 1));
      values.push_back(v);
      ++c;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (c != cols)
      throw Error(ErrorKind::DimensionOverflow, origin + ": expected " + std::to_string(cols) + " fields at line " +
                                                    std::to_string(li + 1));
    ++rows;
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

Matrix decode_matrix(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(p, kMatrixMagic, 4) != 0)
    throw Error(ErrorKind::BadMagic, "expected \"UCSM\" at byte offset 0");
  if (bytes.size() < kMatrixHeaderBytes)
    throw Error(ErrorKind::DimensionOverflow, "header truncated at byte offset " + std::to_string(bytes.size()));
  const auto version = load_le<std::uint16_t>(p + 4);
  if (version != kMatrixVersion)
    throw Error(ErrorKind::ParseError, "unsupported version " + std::to_string(version) + " at byte offset 4");
  const auto dtype = p[6];
  if (dtype > 1) throw Error(ErrorKind::ParseError, "unknown dtype " + std::to_string(dtype) + " at byte offset 6");
  const auto rows = load_le<std::uint64_t>(p + 7);
  const auto cols = load_le<std::uint64_t>(p + 15);
  if (cols < 1) throw Error(ErrorKind::DimensionOverflow, "cols must be >= 1 (byte offset 15)");
  const std::uint64_t width = dtype == 0 ? 4 : 8;
  const std::uint64_t max_elems = std::numeric_limits<std::uint64_t>::max() / width;
  if (rows > max_elems / cols || rows * cols > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
    throw Error(ErrorKind::DimensionOverflow, "rows*cols overflows (byte offset 7)");
  const std::uint64_t payload = rows * cols * width;
  const std::uint64_t have = bytes.size() - kMatrixHeaderBytes;
  if (have != payload)
    throw Error(ErrorKind::DimensionOverflow, "payload is " + std::to_string(have) + " bytes, header implies " +
                                                  std::to_string(payload) + " (byte offset " +
                                                  std::to_string(kMatrixHeaderBytes + std::min(have, payload)) + ")");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* data = p + kMatrixHeaderBytes;
  const auto n = static_cast<std::uint64_t>(m.size());
  for (std::uint64_t i = 0; i < n; ++i) {
    const double v = dtype == 0 ? static_cast<double>(load_le<float>(data + i * 4)) : load_le<double>(data + i * 8);
    if (!std::isfinite(v))
      throw Error(ErrorKind::NonFiniteValue,
                  "non-finite value at byte offset " + std::to_string(kMatrixHeaderBytes + i * width));
    m.data()[i] = v;
  }
  return m;
}

std::string encode_matrix(const Matrix& m, Dtype dtype) {
  if (m.cols() < 1) throw Error(ErrorKind::DimensionOverflow, "matrix must have at least one column");
  std::string out;
  const std::size_t width = dtype == Dtype::F32 ? 4 : 8;
  out.reserve(kMatrixHeaderBytes + static_cast<std::size_t>(m.size()) * width);
  out.append(kMatrixMagic, 4);
  store_le<std::uint16_t>(out, kMatrixVersion);
  out.push_back(static_cast<char>(dtype));
  store_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  store_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "entry " + std::to_string(i) + " is not finite");
    if (dtype == Dtype::F32) {
      if (std::abs(v) > static_cast<double>(std::numeric_limits<float>::max()))
        throw Error(ErrorKind::NonFiniteValue, "entry " + std::to_string(i) + " overflows f32");
      store_le<float>(out, static_cast<float>(v));
    } else {
      store_le<double>(out, v);
    }
  }
  return out;
}

Matrix read_matrix(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMatrixMagic, 4) == 0) {
    try {
      return decode_matrix(bytes);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
  }
  if (bytes.size() >= 2 && bytes[0] == 'c' && bytes[1] == '0') return parse_csv(bytes, path.string());
  throw Error(ErrorKind::BadMagic, path.string() + ": neither UCSM nor CSV (byte offset 0)");
}

void write_matrix(const Matrix& m, const fs::path& path, Dtype dtype) { write_file(path, encode_matrix(m, dtype)); }

Matrix read_matrix_csv(const fs::path& path) { return parse_csv(read_file(path), path.string()); }

void write_matrix_csv(const Matrix& m, const fs::path& path) {
  std::string out;
  for (Index c = 0; c < m.cols(); ++c) out += (c ? ",c" : "c") + std::to_string(c);
  out += '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c)))
        throw Error(ErrorKind::NonFiniteValue, "entry (" + std::to_string(r) + "," + std::to_string(c) + ")");
      if (c) out += ',';
      out += format_real(m(r, c));
    }
    out += '\n';
  }
  write_file(path, out);
}

LabelVector parse_labels(const std::string& text) {
  LabelVector labels;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() && i + 1 == lines.size()) break;
    Label v = 0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (line.empty() || res.ec != std::errc() || res.ptr != line.data() + line.size() || v < kNoise)
      throw Error(ErrorKind::ParseError, "bad label at line " + std::to_string(i + 1));
    labels.push_back(v);
  }
  return labels;
}

LabelVector read_labels(const fs::path& path) {
  try {
    return parse_labels(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw Error(e.kind(), path.string() + ": " + e.what());
    throw;
  }
}

void write_labels(const LabelVector& labels, const fs::path& path) {
  std::string out;
  for (Label l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<int> read_mask(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<int> mask;
  std::istringstream in(text);
  std::string tok;
  std::size_t pos = 0;
  while (in >> tok) {
    ++pos;
    if (tok != "0" && tok != "1")
      throw Error(ErrorKind::ParseError, path.string() + ": mask entry " + std::to_string(pos) + " is not 0/1");
    mask.push_back(tok == "1");
  }
  return mask;
}

std::vector<TokenBundle> read_token_bundles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::MissingInput, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ucsm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<TokenBundle> bundles;
  bundles.reserve(files.size());
  for (const auto& f : files) {
    TokenBundle b;
    b.hidden = read_matrix(f);
    auto mask_path = f;
    mask_path.replace_extension(".mask");
    b.mask = read_mask(mask_path);
    if (static_cast<Index>(b.mask.size()) != b.hidden.rows())
      throw Error(ErrorKind::DimensionOverflow, mask_path.string() + ": mask length " +
                                                    std::to_string(b.mask.size()) + " != token rows " +
                                                    std::to_string(b.hidden.rows()));
    bundles.push_back(std::move(b));
  }
  return bundles;
}

std::string content_hash_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static constexpr char hex[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

std::string content_hash(const fs::path& path) { return content_hash_bytes(read_file(path)); }

void RunManifest::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
    throw Error(ErrorKind::InvalidArgument, "manifest entries cannot contain '=' in keys or newlines");
  entries_[key] = value;
}

const std::string* RunManifest::get(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string RunManifest::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void RunManifest::write(const fs::path& path) const { write_file(path, to_string()); }

RunManifest RunManifest::read(const fs::path& path) {
  RunManifest m;
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw Error(ErrorKind::ParseError, path.string() + ": expected key=value at line " + std::to_string(i + 1));
    m.entries_[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  return m;
}

}  // namespace ucs
