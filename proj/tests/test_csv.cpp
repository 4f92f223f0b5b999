#include "dapmap/csv.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dapmap/error.hpp"
#include "support.hpp"

namespace dapmap {
namespace {

namespace fs = std::filesystem;

TEST(Csv, ParsesHeaderRowsAndComments) {
  const CsvTable t = parse_csv("# generated\nregion,year,value\nSouth Asia,2017,1.5\n\nEurope,2016,-0.25\n",
                               "mem");
  EXPECT_EQ(t.header, (std::vector<std::string>{"region", "year", "value"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "Europe");
  EXPECT_EQ(t.column("value"), 2u);
  EXPECT_FALSE(t.has_column("missing"));
  EXPECT_THROW(t.column("missing"), ValidationError);
}

TEST(Csv, QuotedFields) {
  const CsvTable t = parse_csv("name,note\n\"Western, Central\",\"say \"\"hi\"\"\"\n", "mem");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "Western, Central");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
}

TEST(Csv, RaggedRowIsAnError) {
  EXPECT_THROW(parse_csv("a,b\n1\n", "mem"), ValidationError);
}

TEST(Csv, RoundTripThroughFile) {
  const fs::path dir = fs::temp_directory_path() / "dapmap_csv_test";
  fs::create_directories(dir);
  const fs::path file = dir / "t.csv";
  write_csv(file, {"seed 3"}, {"region", "value"}, {{"Western, Central", "1.000000"}, {"A", "2"}});
  const std::string text = testing::slurp(file);
  EXPECT_EQ(text.rfind("# seed 3\n", 0), 0u);
  const CsvTable t = read_csv(file);
  EXPECT_EQ(t.rows[0][0], "Western, Central");
  EXPECT_EQ(t.rows[1][1], "2");
  fs::remove_all(dir);
}

TEST(Csv, FileDigestOfKnownBytes) {
  const fs::path file = fs::temp_directory_path() / "dapmap_digest_abc.txt";
  {
    std::ofstream out(file, std::ios::binary);
    out << "abc";
  }
  EXPECT_EQ(file_digest(file), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove(file);
  EXPECT_THROW(file_digest(file), ValidationError);
}

TEST(Csv, Numbers) {
  EXPECT_DOUBLE_EQ(parse_number("1.25", "x"), 1.25);
  EXPECT_DOUBLE_EQ(parse_number("-3", "x"), -3.0);
  EXPECT_THROW(parse_number("1,5", "x"), ValidationError);
  EXPECT_THROW(parse_number("", "x"), ValidationError);
  EXPECT_THROW(parse_number("nan", "x"), ValidationError);
  EXPECT_EQ(parse_int("2017", "year"), 2017);
  EXPECT_THROW(parse_int("2017.5", "year"), ValidationError);
}

TEST(Csv, FixedFormatting) {
  EXPECT_EQ(format_fixed(0.1), "0.100000");
  EXPECT_EQ(format_fixed(-0.0), "0.000000");
  EXPECT_EQ(format_fixed(2.0 / 3.0, 3), "0.667");
}

TEST(KeyValues, ParsesInOrder) {
  const auto kv = parse_key_values("# comment\nseed = 5\n\n  scenario=SSS  # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "seed");
  EXPECT_EQ(kv[0].value, "5");
  EXPECT_EQ(kv[1].key, "scenario");
  EXPECT_EQ(kv[1].value, "SSS");
  EXPECT_EQ(kv[1].line, 4u);
}

TEST(KeyValues, Errors) {
  EXPECT_THROW(parse_key_values("seed 5\n"), ValidationError);
  EXPECT_THROW(parse_key_values("seed = 1\nseed = 2\n"), ValidationError);
}

}  // namespace
}  // namespace dapmap
