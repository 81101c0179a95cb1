#include <cstring>
#include <fstream>

#include "test_util.hpp"
#include "ucs/matrix_store.hpp"

using namespace ucs;
namespace fs = std::filesystem;

TEST_CASE("identity round trip through UCSM") {
  const auto dir = test::scratch("ms_identity");
  Matrix eye = Matrix::Identity(2, 2);
  write_matrix(eye, dir / "eye.ucsm");
  const Matrix back = read_matrix(dir / "eye.ucsm");
  CHECK(back.rows() == 2);
  CHECK(back.cols() == 2);
  CHECK(back(0, 0) == 1.0);
  CHECK(back(0, 1) == 0.0);
  CHECK(back(1, 0) == 0.0);
  CHECK(back(1, 1) == 1.0);
}

TEST_CASE("header layout is little-endian and 23 bytes") {
  Matrix m(1, 1);
  m(0, 0) = 2.0;
  const std::string bytes = encode_matrix(m, Dtype::F64);
  REQUIRE(bytes.size() == 23 + 8);
  CHECK(bytes.substr(0, 4) == "UCSM");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  CHECK(static_cast<unsigned char>(bytes[6]) == 1);
  CHECK(static_cast<unsigned char>(bytes[7]) == 1);
  CHECK(static_cast<unsigned char>(bytes[15]) == 1);
  double v = 0.0;
  std::memcpy(&v, bytes.data() + 23, 8);
  CHECK(v == 2.0);
}

TEST_CASE("CSV with one column") {
  const auto dir = test::scratch("ms_csv");
  std::ofstream(dir / "m.csv") << "c0\n1.5\n2.5";
  const Matrix m = read_matrix(dir / "m.csv");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 1);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(1, 0) == 2.5);
}

TEST_CASE("CSV round trip keeps every bit") {
  const auto dir = test::scratch("ms_csv_rt");
  const Matrix m = test::random_matrix(5, 3, 11);
  write_matrix_csv(m, dir / "m.csv");
  const Matrix back = read_matrix(dir / "m.csv");
  CHECK((back.array() == m.array()).all());
}

TEST_CASE("short payload is a DimensionOverflow naming the offset") {
  Matrix m = Matrix::Ones(2, 2);
  std::string bytes = encode_matrix(m);
  bytes.pop_back();
  CHECK(test::error_kind([&] { decode_matrix(bytes); }) == ErrorKind::DimensionOverflow);
  CHECK(test::error_message([&] { decode_matrix(bytes); }).find("byte") != std::string::npos);
}

TEST_CASE("bad magic") {
  std::string bytes = encode_matrix(Matrix::Ones(1, 1));
  bytes[0] = 'X';
  CHECK(test::error_kind([&] { decode_matrix(bytes); }) == ErrorKind::BadMagic);
}

TEST_CASE("non-finite payload names its byte offset") {
  std::string bytes = encode_matrix(Matrix::Zero(1, 2));
  const double nan = std::nan("");
  std::memcpy(bytes.data() + 23 + 8, &nan, 8);
  const auto msg = test::error_message([&] { decode_matrix(bytes); });
  CHECK(msg.find("NonFiniteValue") != std::string::npos);
  CHECK(msg.find("31") != std::string::npos);
}

TEST_CASE("random f64 matrix round trips bitwise") {
  const auto dir = test::scratch("ms_rt");
  const Matrix m = test::random_matrix(3, 4, 5);
  write_matrix(m, dir / "r.ucsm", Dtype::F64);
  const Matrix back = read_matrix(dir / "r.ucsm");
  CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 12) == 0);
}

TEST_CASE("f32 storage rounds to nearest float") {
  const auto dir = test::scratch("ms_f32");
  Matrix m(1, 1);
  m(0, 0) = 0.1;
  write_matrix(m, dir / "f.ucsm", Dtype::F32);
  CHECK(read_matrix(dir / "f.ucsm")(0, 0) == static_cast<double>(0.1f));
}

TEST_CASE("NaN cannot be written") {
  const auto dir = test::scratch("ms_nan");
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = std::nan("");
  CHECK(test::error_kind([&] { write_matrix(m, dir / "n.ucsm"); }) == ErrorKind::NonFiniteValue);
  m(1, 0) = 1e300;
  CHECK(test::error_kind([&] { write_matrix(m, dir / "n.ucsm", Dtype::F32); }) == ErrorKind::NonFiniteValue);
}

TEST_CASE("labels") {
  CHECK(parse_labels("0\n0\n1") == LabelVector{0, 0, 1});
  CHECK(parse_labels("-1\n2") == LabelVector{-1, 2});
  CHECK(test::error_kind([] { parse_labels("x"); }) == ErrorKind::ParseError);
  CHECK(test::error_message([] { parse_labels("x"); }).find("line 1") != std::string::npos);
  CHECK(test::error_message([] { parse_labels("1\n2\nfoo"); }).find("line 3") != std::string::npos);

  const auto dir = test::scratch("ms_labels");
  const LabelVector lv{3, -1, 7, 7};
  write_labels(lv, dir / "l.txt");
  CHECK(read_labels(dir / "l.txt") == lv);
}

TEST_CASE("missing file is MissingInput") {
  CHECK(test::error_kind([] { read_matrix("/nonexistent/x.ucsm"); }) == ErrorKind::MissingInput);
}

TEST_CASE("token bundles come back in filename order with masks") {
  const auto dir = test::scratch("ms_bundles");
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(1, 2);
  b << 5, 6;
  write_matrix(b, dir / "b.ucsm");
  write_matrix(a, dir / "a.ucsm");
  std::ofstream(dir / "a.mask") << "1\n0\n";
  std::ofstream(dir / "b.mask") << "1\n";
  const auto bundles = read_token_bundles(dir);
  REQUIRE(bundles.size() == 2);
  CHECK(bundles[0].hidden(1, 1) == 4.0);
  CHECK(bundles[0].mask == std::vector<int>{1, 0});
  CHECK(bundles[1].hidden(0, 0) == 5.0);
}

TEST_CASE("content hash is FNV-1a 64") {
  CHECK(content_hash_bytes("") == "cbf29ce484222325");
  CHECK(content_hash_bytes("a") == "af63dc4c8601ec8c");
}

TEST_CASE("manifest keys are sorted and round trip") {
  const auto dir = test::scratch("ms_manifest");
  RunManifest m;
  m.set("zeta", "1");
  m.set("alpha", "two");
  CHECK(m.to_string() == "alpha=two\nzeta=1\n");
  m.write(dir / "m.manifest");
  const RunManifest back = RunManifest::read(dir / "m.manifest");
  REQUIRE(back.get("alpha") != nullptr);
  CHECK(*back.get("alpha") == "two");
  CHECK(back.entries() == m.entries());
}

TEST_CASE("format_real is shortest round-trip") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1e-6) == "1e-06");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(format_real(x)) == x);
}
