#include <fstream>

#include <gtest/gtest.h>

#include "phantom/benchmark_data.hpp"
#include "phantom/dataset_io.hpp"
#include "test_support.hpp"

namespace phantom {
namespace {

std::string header() {
  std::string h;
  for (const auto& n : benchmark_schema().names()) h += n + ",";
  return h + "label\n";
}

std::string zero_row(const std::string& label = "0") {
  std::string r;
  for (int c = 0; c < kNumFeatures; ++c) r += "0,";
  return r + label + "\n";
}

TEST(Csv, RoundTripPreservesTable) {
  testing::TempDir dir;
  const auto t = generate_benchmark(1000, default_class_specs(), 11);
  write_csv(t, dir / "t.csv");
  const auto back = read_csv(dir / "t.csv");
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.feature_names, t.feature_names);
  ASSERT_EQ(back.features.rows(), t.features.rows());
  EXPECT_LE((back.features - t.features).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Csv, FormatIsShortestExactText) {
  for (double v : {0.1, 1.0 / 3.0, 12345.678901234567, -2.5e-300, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Csv, WriteIsByteDeterministic) {
  const auto t = generate_benchmark(300, default_class_specs(), 2);
  EXPECT_EQ(to_csv(t), to_csv(generate_benchmark(300, default_class_specs(), 2)));
}

TEST(Csv, HeaderCarriesNamesThenLabel) {
  const auto text = to_csv(generate_benchmark(100, default_class_specs(), 1));
  EXPECT_EQ(text.substr(0, text.find('\n') + 1), header());
}

TEST(Csv, MissingLabelColumnIsFormatError) {
  std::string h;
  for (const auto& n : benchmark_schema().names()) h += n + ",";
  h.pop_back();
  try {
    parse_csv(h + "\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.row(), 1);
  }
}

TEST(Csv, RowArityViolationNamesRow) {
  std::string bad;
  for (int c = 0; c < kNumFeatures; ++c) bad += "0" + std::string(c + 1 < kNumFeatures ? "," : "");
  try {
    parse_csv(header() + zero_row() + bad + "\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.row(), 3);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  std::string row = zero_row();
  row.replace(2, 1, "abc");  // second field
  try {
    parse_csv(header() + zero_row() + row);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.row(), 3);
    EXPECT_EQ(e.column(), 2);
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(Csv, InvalidLabelIsFormatError) {
  EXPECT_THROW(parse_csv(header() + zero_row("7")), FormatError);
  EXPECT_THROW(parse_csv(header() + zero_row("1.5")), FormatError);
}

TEST(Csv, AcceptsCrlfLineEndings) {
  std::string text = header() + zero_row("3");
  std::string crlf;
  for (char ch : text) crlf += ch == '\n' ? std::string("\r\n") : std::string(1, ch);
  const auto t = parse_csv(crlf);
  ASSERT_EQ(t.rows(), 1);
  EXPECT_EQ(t.labels[0], 3);
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_THROW(read_csv("/nonexistent/phantom.csv"), IoError);
}

TEST(Metadata, RecordsSeedSpecsAndBlockMap) {
  const auto meta = benchmark_metadata(default_class_specs(), 1000, 9);
  EXPECT_EQ(meta.at("seed").get<std::uint64_t>(), 9u);
  EXPECT_EQ(meta.at("generator_version").get<std::string>(), kGeneratorVersion);
  EXPECT_EQ(meta.at("block_map").size(), 40u);
  EXPECT_EQ(meta.at("specs").size(), 5u);
}

TEST(AtomicWrite, LeavesNoTemporaryBehind) {
  testing::TempDir dir;
  write_file_atomic(dir / "a.txt", "hello");
  EXPECT_EQ(read_file(dir / "a.txt"), "hello");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);
}

}  // namespace
}  // namespace phantom
