#ifndef UCS_MATRIX_STORE_HPP
#define UCS_MATRIX_STORE_HPP

// On-disk formats.
//
// UCSM matrix file, little-endian throughout:
//   offset 0   4 bytes  magic "UCSM"
//   offset 4   u16      version (1)
//   offset 6   u8       dtype (0 = f32, 1 = f64)
//   offset 7   u64      rows
//   offset 15  u64      cols (>= 1)
//   offset 23  payload  rows*cols values, row-major
//
// CSV matrices carry a header row "c0,c1,..." followed by one row per line.
// Label files hold one integer per line. Manifests are key=value lines in
// lexicographic key order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ucs/types.hpp"

namespace ucs {

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr char kMatrixMagic[4] = {'U', 'C', 'S', 'M'};
inline constexpr std::uint16_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 23;

/// Reads a UCSM or CSV matrix, chosen by the leading bytes.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const Matrix& m, const std::filesystem::path& path, Dtype dtype = Dtype::F64);

/// Slow path, kept for interoperability.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

Matrix decode_matrix(const std::string& bytes);
std::string encode_matrix(const Matrix& m, Dtype dtype = Dtype::F64);

LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);
LabelVector parse_labels(const std::string& text);

/// Hidden states of one example (T x d) and its token mask (length T).
struct TokenBundle {
  Matrix hidden;
  std::vector<int> mask;
};

/// Reads every `<name>.ucsm` in a directory together with its `<name>.mask`
/// sibling (one 0/1 per line). Bundles come back in filename order.
std::vector<TokenBundle> read_token_bundles(const std::filesystem::path& dir);
std::vector<int> read_mask(const std::filesystem::path& path);

/// 64-bit FNV-1a of the file contents, as 16 lowercase hex digits.
std::string content_hash(const std::filesystem::path& path);
std::string content_hash_bytes(const std::string& bytes);

/// Flat key=value record of how an artifact was produced.
class RunManifest {
 public:
  void set(const std::string& key, const std::string& value);
  const std::string* get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ucs

#endif  // UCS_MATRIX_STORE_HPP
