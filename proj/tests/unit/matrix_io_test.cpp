#include <sstream>

#include <gtest/gtest.h>

#include "sortform/errors.hpp"
#include "sortform/matrix_io.hpp"

namespace sortform {
namespace {

TEST(Sfm, ByteLayout) {
  std::ostringstream out;
  write_sfm(out, (Matrix(1, 2) << 1.0, -2.0).finished());
  const std::string b = out.str();
  ASSERT_EQ(b.size(), 4u + 8u + 8u);
  EXPECT_EQ(b.substr(0, 4), "SFM1");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 2);
  // 1.0f = 0x3F800000 little endian.
  EXPECT_EQ(static_cast<unsigned char>(b[15]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(b[14]), 0x80);
}

TEST(Sfm, RoundTrip) {
  const Matrix m = (Matrix(2, 3) << 0.5, 1, 2, 3, 4.25, -1).finished();
  std::ostringstream out;
  write_sfm(out, m);
  std::istringstream in(out.str());
  EXPECT_EQ(read_sfm(in), m);
}

TEST(Sfm, Truncated) {
  std::istringstream in(std::string("SFM1\x02\0\0\0", 8));
  EXPECT_THROW(read_sfm(in), ParseError);
}

TEST(Csv, ParseAndWrite) {
  const Matrix m = parse_csv_matrix("1,2,3\n4,5,6\n");
  EXPECT_EQ(m, (Matrix(2, 3) << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_EQ(parse_csv_matrix(write_csv_matrix(m)), m);
  EXPECT_THROW(parse_csv_matrix("1,2\n3\n"), ParseError);
  EXPECT_THROW(parse_csv_matrix("1,x\n"), ParseError);
}

}  // namespace
}  // namespace sortform
