#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "roughsheet/binary_io.hpp"
#include "roughsheet/manifest.hpp"
#include "roughsheet/svg_chart.hpp"
#include "roughsheet/table.hpp"

using namespace roughsheet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "roughsheet_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Binary, SheetRoundTrip) {
  const NoiseSheet s = sample_sheet({0.5, 4, -1.0, 1.0, 32}, 0.3, 2, 17);
  const auto path = scratch("sheet.bin").string();
  write_sheet(path, s);
  const NoiseSheet r = read_sheet(path);
  EXPECT_EQ(r.grid, s.grid);
  EXPECT_EQ(r.H, s.H);
  EXPECT_EQ(r.d, 2u);
  EXPECT_EQ(r.seed, 17u);
  EXPECT_EQ(r.increments, s.increments);
}

TEST(Binary, FieldRoundTripKeepsWindowAndTimes) {
  const GridSpec g{1.0, 16, -2.0, 2.0, 64};
  SolutionField f = SpectralConvolution(OperatorKind::Wave, 0.25, g).sample(1, {1.0}, 3, {4, 16});
  f.jLo = 5;
  f.jHi = 40;
  std::stringstream ss;
  write_field(ss, f, OperatorKind::Wave, 0.25);
  const StoredField r = read_field(ss);
  EXPECT_EQ(r.op, OperatorKind::Wave);
  EXPECT_EQ(r.H, 0.25);
  EXPECT_EQ(r.field.times, f.times);
  EXPECT_EQ(r.field.jLo, 5u);
  EXPECT_EQ(r.field.jHi, 40u);
  EXPECT_EQ(r.field.method, "spectral");
  EXPECT_EQ(r.field.values, f.values);
}

TEST(Binary, WrongMagicIsAFormatError) {
  std::stringstream ss;
  write_sheet(ss, sample_sheet({1.0, 2, 0.0, 1.0, 4}, 0.3, 1, 1));
  EXPECT_THROW(read_field(ss), FormatError);
  std::stringstream truncated(std::string("RSHT1\x01"));
  EXPECT_THROW(read_sheet(truncated), FormatError);
}

TEST(Binary, EnsembleStreamAndIndex) {
  const GridSpec g{1.0, 8, -1.0, 1.0, 32};
  const SpectralConvolution s(OperatorKind::Heat, 0.25, g);
  const auto data = scratch("ens.bin").string(), index = scratch("ens.jsonl").string();
  EnsembleWriter w(data, index, OperatorKind::Heat, 0.25);
  std::vector<SolutionField> fields;
  for (std::size_t r = 0; r < 3; ++r) {
    fields.push_back(s.sample(1, {1.0}, 50 + r));
    w.append(r, fields.back());
  }
  w.finish();
  const auto entries = read_ensemble_index(index);
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[2].seed, 52u);
  std::size_t seen = 0;
  for_each_stored_field(data, entries, [&](const EnsembleEntry& e, const StoredField& f) {
    EXPECT_EQ(f.field.values, fields[e.replica].values);
    ++seen;
  });
  EXPECT_EQ(seen, 3u);
}

TEST(Manifest, RoundTripAndHash) {
  RunManifest m;
  m.command = "simulate";
  m.op = OperatorKind::Wave;
  m.H = 0.4;
  m.d = 2;
  m.grid = {1.0, 32, -4.0, 4.0, 128};
  m.driftName = "linear";
  m.driftParams = {-0.5};
  m.sigma = {1.0, 0.0, 0.5, 1.0};
  m.nReplicas = 12;
  m.baseSeed = 99;
  m.tolerances["picardSupTol"] = 1e-10;
  m.extra["method"] = "picard";
  m.stamp();
  const auto path = scratch("manifest.json").string();
  m.save(path);
  const RunManifest r = RunManifest::load(path);
  EXPECT_EQ(r.to_json(), m.to_json());
  EXPECT_EQ(r.hash(), m.hash());
  EXPECT_EQ(m.hash().size(), 16u);

  // the timestamp does not enter the hash, any setting does
  RunManifest later = m;
  later.timestamp = "2000-01-01T00:00:00Z";
  EXPECT_EQ(later.hash(), m.hash());
  later.baseSeed = 100;
  EXPECT_NE(later.hash(), m.hash());
}

TEST(Manifest, MalformedFileIsAFormatError) {
  const auto path = scratch("bad.json").string();
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(RunManifest::load(path), FormatError);
  EXPECT_THROW(RunManifest::load(scratch("missing.json").string()), FormatError);
}

TEST(TableCsv, QuotesOnlyWhenNeeded) {
  Table t({"name", "value", "count"});
  t.add_row({std::string("plain"), 0.125, 3LL});
  t.add_row({std::string("a,b \"c\""), -2.5e-7, -1LL});
  std::ostringstream os;
  t.write(os);
  EXPECT_EQ(os.str(), "name,value,count\nplain,0.125,3\n\"a,b \"\"c\"\"\",-2.5e-07,-1\n");
  EXPECT_THROW(t.add_row({1.0}), FormatError);
}

TEST(TableCsv, ShortestRoundTripDoubles) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Chart, RendersSeriesAndGuide) {
  LogLogChart c;
  c.title = "S2 <spatial>";
  ChartSeries s;
  s.label = "data";
  s.x = {0.01, 0.02, 0.04, 0.08};
  s.y = {0.1, 0.14, 0.2, 0.28};
  c.series.push_back(s);
  c.add_power_line("slope 0.5", 0.5, 0.0, "#d62728", true);
  const std::string svg = c.render();
  EXPECT_NE(svg.find("<svg xmlns"), std::string::npos);
  EXPECT_NE(svg.find("S2 &lt;spatial&gt;"), std::string::npos);
  EXPECT_NE(svg.find("slope 0.5"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Chart, NothingToPlot) {
  LogLogChart c;
  EXPECT_THROW(c.render(), FormatError);
}
