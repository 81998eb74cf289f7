#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sensorqc/sensorqc.hpp"

using namespace sensorqc;
namespace fs = std::filesystem;

namespace {

IngestResult ingest(const std::string& text, CsvSchema schema = CsvSchema::detect) {
  std::istringstream in(text);
  return ingest_csv(in, "test.csv", Variable::temperature_c, "st", schema);
}

std::string hourly_csv(int n, int start_hour = 0) {
  std::ostringstream out;
  out << "timestamp,value\n";
  for (int i = 0; i < n; ++i) {
    const int h = start_hour + i;
    char buf[64];
    std::snprintf(buf, sizeof buf, "2021-06-%02dT%02d:00:00Z,%d.5\n", 1 + h / 24, h % 24, i);
    out << buf;
  }
  return out.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sensorqc_io_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(Timestamps, ParseAndFormat) {
  const auto t = parse_rfc3339("2021-06-01T10:00:00Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_rfc3339(*t), "2021-06-01T10:00:00Z");
  EXPECT_EQ(parse_rfc3339("2021-06-01T20:00:00+10:00"), t);
  EXPECT_EQ(parse_rfc3339("2021-06-01T05:30:00-04:30"), t);
  EXPECT_EQ(format_rfc3339(*parse_rfc3339("2021-06-01T10:00:00.6Z")), "2021-06-01T10:00:01Z");
  EXPECT_FALSE(parse_rfc3339("2021-13-01T10:00:00Z"));
  EXPECT_FALSE(parse_rfc3339("yesterday"));
  EXPECT_FALSE(parse_rfc3339("2021-06-01 10:00"));
}

TEST(Ingest, ContiguousRows) {
  const auto r = ingest(hourly_csv(48));
  EXPECT_EQ(r.series.size(), 48u);
  EXPECT_EQ(r.series.gap_count(), 0u);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(*r.series.values[47], 47.5);
}

TEST(Ingest, MissingHourBecomesGap) {
  const auto r = ingest("timestamp,value\n2021-06-01T00:00:00Z,1\n2021-06-01T02:00:00Z,3\n");
  ASSERT_EQ(r.series.size(), 3u);
  EXPECT_FALSE(r.series.values[1]);
  EXPECT_EQ(r.series.gap_count(), 1u);
}

TEST(Ingest, GapTokens) {
  const auto r = ingest("timestamp,value\n2021-06-01T00:00:00Z,\n2021-06-01T01:00:00Z,NA\n"
                        "2021-06-01T02:00:00Z,nan\n2021-06-01T03:00:00Z,2\n");
  EXPECT_EQ(r.series.gap_count(), 3u);
}

TEST(Ingest, SnapsAndRejects) {
  const auto r = ingest("timestamp,value\n2021-06-01T00:04:00Z,1\n2021-06-01T00:50:00Z,2\n"
                        "2021-06-01T01:56:00Z,3\n");
  ASSERT_EQ(r.series.size(), 3u);
  EXPECT_EQ(format_rfc3339(r.series.start), "2021-06-01T00:00:00Z");
  EXPECT_FALSE(r.series.values[1]);
  EXPECT_EQ(*r.series.values[2], 3.0);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 3);
}

TEST(Ingest, SortsRows) {
  const auto r = ingest("timestamp,value\n2021-06-01T02:00:00Z,3\n2021-06-01T00:00:00Z,1\n"
                        "2021-06-01T01:00:00Z,2\n");
  EXPECT_EQ(*r.series.values[0], 1.0);
  EXPECT_EQ(*r.series.values[2], 3.0);
}

TEST(Ingest, DuplicateHourConflict) {
  try {
    ingest("timestamp,value\n2021-06-01T05:00:00Z,1\n2021-06-01T05:00:00Z,2\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2021-06-01T05:00:00Z"), std::string::npos);
  }
  EXPECT_NO_THROW(ingest("timestamp,value\n2021-06-01T05:00:00Z,1\n2021-06-01T05:00:00Z,1\n"));
}

TEST(Ingest, MalformedRowsListed) {
  try {
    ingest("timestamp,value\n2021-06-01T00:00:00Z,1\nbad,2\n2021-06-01T02:00:00Z,x\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_NE(msg.find("line 4"), std::string::npos);
  }
  EXPECT_THROW(ingest("time,val\n"), DataError);
  EXPECT_THROW(ingest(""), DataError);
}

TEST(Ingest, LabelledSchema) {
  const auto r = ingest("timestamp,value,label\n2021-06-01T00:00:00Z,1,0\n2021-06-01T01:00:00Z,9,1\n",
                        CsvSchema::labeled);
  ASSERT_TRUE(r.series.truth_labels);
  EXPECT_FALSE((*r.series.truth_labels)[0]);
  EXPECT_TRUE((*r.series.truth_labels)[1]);
  EXPECT_THROW(ingest(hourly_csv(3), CsvSchema::labeled), DataError);
}

TEST(Ingest, SerializeRoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  LabeledSeries s;
  s.start = *parse_rfc3339("2019-02-28T22:00:00Z");
  for (int i = 0; i < 200; ++i) {
    if (i % 17 == 3) s.values.emplace_back();
    else s.values.emplace_back(g(rng));
  }
  s.truth_labels = std::vector<bool>(200, false);
  (*s.truth_labels)[7] = true;
  std::ostringstream out;
  write_series_csv(out, s);
  const auto back = ingest(out.str()).series;
  EXPECT_EQ(back.start, s.start);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.truth_labels, s.truth_labels);
}

TEST(Align, Cases) {
  const auto p = ingest(hourly_csv(48)).series;
  const auto same = align_streams(p, p);
  for (const auto& o : same.observations) EXPECT_EQ(o.primary, o.secondary);

  const auto partial = align_streams(p, ingest(hourly_csv(24)).series);
  EXPECT_TRUE(partial.observations[10].secondary);
  EXPECT_FALSE(partial.observations[30].secondary);
  EXPECT_TRUE(partial.observations[30].primary);

  const auto later = ingest(hourly_csv(24, 100)).series;
  EXPECT_THROW(align_streams(p, later), DataError);
}

TEST(Report, RoundTrip) {
  Report r;
  r.station_id = "x";
  r.variable = "temperature_c";
  Verdict v;
  v.sample_time = *parse_rfc3339("2021-06-01T03:00:00Z");
  v.index = 3;
  v.observed = 0.1 + 0.2;
  v.predicted_mean = -1.0 / 3.0;
  v.predicted_std = 4.8;
  v.p_value = 1e-300;
  v.label = Label::Suspect;
  v.truth = true;
  r.verdicts = {v, v};
  r.verdicts[1].truth.reset();
  r.verdicts[1].label = Label::Valid;
  r.metrics = build_metrics({{"x", {1, 0, 1, 0}}});
  const auto back = report_from_json(json::parse(to_json(r).dump()));
  EXPECT_EQ(back.verdicts, r.verdicts);
  EXPECT_EQ(back.metrics, r.metrics);
}

TEST(Report, EmptyVerdicts) {
  const auto j = to_json(Report{"s", "wind_gust_ms", {}, std::nullopt});
  EXPECT_TRUE(j.at("verdicts").empty());
  EXPECT_TRUE(j.at("metrics").is_null());
  EXPECT_EQ(j.at("schema_version"), kReportSchemaVersion);
}

TEST(PlotData, RowPerStep) {
  std::vector<ObservationVector> stream(5);
  stream[0].primary = 1.0;
  stream[2].secondary = 2.0;
  const std::vector<PredictionPoint> preds(5, {0.5, 1.5});
  Verdict v;
  v.index = 102;
  v.label = Label::Suspect;
  std::ostringstream out;
  write_plot_data(out, *parse_rfc3339("2021-01-01T00:00:00Z"), stream, preds, std::vector<Verdict>{v}, 100);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], kPlotHeader);
  EXPECT_EQ(lines[1], "2021-01-01T00:00:00Z,1,0.5,1.5,,");
  EXPECT_EQ(lines[3], "2021-01-01T02:00:00Z,,0.5,1.5,2,suspect");
}

TEST_F(TempDir, SnapshotResumeIsBitwise) {
  ModelConfig c;
  c.stream_count = 2;
  SyntheticStationParams p;
  p.length_days = 40;
  const auto st = generate_station(p);
  const std::span<const std::optional<double>> x(st.primary.values), y(st.secondary.values);
  const auto calib = calibrate(x.first(672), y.first(672), c, 0);
  const std::size_t n = x.size() - 672;
  std::vector<ObservationVector> stream(n);
  for (std::size_t i = 0; i < n; ++i) stream[i] = {x[672 + i], y[672 + i]};
  const std::vector<bool> tests(n, true);
  const auto start = st.primary.time_at(672);

  const auto whole = screen_stream(calib.state, calib.model, stream, tests, c, start, 672);

  const std::size_t half = n / 2;
  const std::span<const ObservationVector> all(stream);
  const std::vector<bool> t1(half, true), t2(n - half, true);
  const auto first = screen_stream(calib.state, calib.model, all.first(half), t1, c, start, 672);
  Snapshot snap{first.final_state, calib.model.hash(), start + kHour * static_cast<long>(half), calib.noise, 24, 2};
  save_snapshot(path("state.json"), snap);
  const auto loaded = load_snapshot(path("state.json"));
  const auto model = assemble_model(c, loaded.noise);
  EXPECT_NO_THROW(check_compatible(loaded, model));
  EXPECT_EQ(loaded.next_time, snap.next_time);
  const auto second = screen_stream(loaded.state, model, all.subspan(half), t2, c, loaded.next_time,
                                    672 + static_cast<std::size_t>(loaded.state.t));

  ASSERT_EQ(first.verdicts.size() + second.verdicts.size(), whole.verdicts.size());
  for (std::size_t i = 0; i < whole.verdicts.size(); ++i) {
    const auto& r = i < half ? first.verdicts[i] : second.verdicts[i - half];
    EXPECT_EQ(r, whole.verdicts[i]) << i;
  }
  EXPECT_EQ(second.final_state.f, whole.final_state.f);
  EXPECT_EQ(second.final_state.F, whole.final_state.F);
}

TEST_F(TempDir, SnapshotRejectsOtherModel) {
  ModelConfig c;
  NoiseEstimate n;
  n.epsilon_x = n.raw_x = 0.9;
  const auto m = assemble_model(c, n);
  Snapshot s{{Vector::Zero(24), Matrix::Identity(24, 24), 0}, m.hash(), {}, n, 24, 1};
  save_snapshot(path("s.json"), s);
  n.epsilon_x = 1.0;
  EXPECT_THROW(check_compatible(load_snapshot(path("s.json")), assemble_model(c, n)), StateError);
  std::ofstream(path("junk.json")) << "{not json";
  EXPECT_THROW(load_snapshot(path("junk.json")), StateError);
}

TEST_F(TempDir, WriteFailureNamesPath) {
  try {
    write_report(path("missing/dir/report.json"), Report{});
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("missing/dir/report.json"), std::string::npos);
  }
}
