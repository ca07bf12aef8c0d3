#include "proxskip/errors.hpp"
#include "proxskip/libsvm.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace proxskip {
namespace {

TEST(Libsvm, ParsesDenseLayout) {
  const LibsvmData d = parse_libsvm("+1 1:0.5 3:2\n-1 2:1\n");
  ASSERT_EQ(d.features.rows(), 2);
  ASSERT_EQ(d.features.cols(), 3);
  DataMatrix expect(2, 3);
  expect << 0.5, 0, 2, 0, 1, 0;
  EXPECT_EQ(d.features, expect);
  EXPECT_EQ(d.labels[0], 1.0);
  EXPECT_EQ(d.labels[1], -1.0);
}

TEST(Libsvm, RemapsZeroOneLabels) {
  const LibsvmData d = parse_libsvm("0 1:1\n1 1:2\n\n");
  EXPECT_EQ(d.labels[0], -1.0);
  EXPECT_EQ(d.labels[1], 1.0);
}

TEST(Libsvm, EmptyInputHasNoSamples) {
  try {
    parse_libsvm("");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
  }
}

TEST(Libsvm, MalformedValueReportsLine) {
  try {
    parse_libsvm("1 2:abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse_libsvm("1 1:1\n-1 1:2\n2 1:1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Libsvm, RejectsCommentsAndZeroIndex) {
  EXPECT_THROW(parse_libsvm("1 1:1 # note\n"), ParseError);
  EXPECT_THROW(parse_libsvm("1 0:1\n"), ParseError);
  EXPECT_THROW(parse_libsvm("1 1\n"), ParseError);
}

TEST(Libsvm, RoundTripIsFixedPoint) {
  const std::string text = "+1 1:0.1 4:-2.5e-07\n-1 2:3\n+1 3:0.30000000000000004\n";
  const LibsvmData a = parse_libsvm(text);
  const std::string once = format_libsvm(a);
  const LibsvmData b = parse_libsvm(once);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(format_libsvm(b), once);
}

TEST(Libsvm, RoundTripKeepsTrailingZeroColumn) {
  LibsvmData d;
  d.features = DataMatrix::Zero(2, 3);
  d.features(0, 0) = 1.0;
  d.features(1, 1) = 2.0;
  d.labels = Eigen::Vector2d(1.0, -1.0);
  const LibsvmData back = parse_libsvm(format_libsvm(d));
  EXPECT_EQ(back.features, d.features);
}

TEST(Libsvm, StreamOverloadAndTruncate) {
  std::istringstream in("1 1:1 2:2 3:3\n-1 1:4\n1 2:5\n");
  const LibsvmData d = parse_libsvm(in);
  const LibsvmData t = truncate(d, 2, 2);
  EXPECT_EQ(t.features.rows(), 2);
  EXPECT_EQ(t.features.cols(), 2);
  EXPECT_EQ(t.features(0, 1), 2.0);
  EXPECT_EQ(truncate(d, 0, 0).features, d.features);
  EXPECT_THROW(read_libsvm_file("/nonexistent/file.svm"), ParseError);
}

}  // namespace
}  // namespace proxskip
