#pragma once

// CSV ingestion onto an hourly grid, stream alignment, JSON reports, plot
// data and filter-state snapshots.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sensorqc/detection.hpp"
#include "sensorqc/errors.hpp"
#include "sensorqc/kalman.hpp"
#include "sensorqc/metrics.hpp"
#include "sensorqc/model.hpp"
#include "sensorqc/pipeline.hpp"
#include "sensorqc/series.hpp"

namespace sensorqc {

using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kSnapshotSchemaVersion = 1;
inline constexpr std::chrono::seconds kSnapTolerance{300};

inline constexpr std::string_view kPlainHeader = "timestamp,value";
inline constexpr std::string_view kLabeledHeader = "timestamp,value,label";
inline constexpr std::string_view kPlotHeader = "timestamp,observed,predicted_mean,predicted_std,secondary,flag";

enum class CsvSchema { detect, plain, labeled };

struct RowIssue {
  int line = 0;
  std::string reason;
};

struct IngestResult {
  LabeledSeries series;
  // Rows further than the snap tolerance from an hour boundary.
  std::vector<RowIssue> rejected;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_gap_token(std::string_view s) {
  return s.empty() || s == "nan" || s == "NaN" || s == "NA" || s == "null";
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline std::optional<double> json_opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

/// Reads `timestamp,value[,label]` rows onto an hourly grid. Timestamps within
/// five minutes of an hour snap to it; other rows are rejected and reported.
/// Missing hours become gaps. Malformed rows and conflicting duplicate hours
/// raise DataError.
inline IngestResult ingest_csv(std::istream& in, const std::string& origin, Variable variable,
                               const std::string& station_id, CsvSchema schema = CsvSchema::detect) {
  std::string header;
  if (!std::getline(in, header)) throw DataError(origin + ": empty file (missing header)");
  const std::string_view h = detail::strip(header);
  bool labeled = false;
  if (h == kLabeledHeader) {
    labeled = true;
  } else if (h != kPlainHeader) {
    throw DataError(origin + ":1: expected header '" + std::string(kPlainHeader) + "' or '" +
                    std::string(kLabeledHeader) + "'");
  }
  if ((schema == CsvSchema::plain && labeled) || (schema == CsvSchema::labeled && !labeled)) {
    throw DataError(origin + ":1: header does not match the requested schema");
  }

  struct Row {
    Timestamp hour;
    std::optional<double> value;
    bool label;
    int line;
  };
  std::vector<Row> rows;
  std::vector<RowIssue> malformed;
  IngestResult result;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::strip(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    const std::size_t expected = labeled ? 3 : 2;
    if (fields.size() != expected) {
      malformed.push_back({lineno, "expected " + std::to_string(expected) + " fields"});
      continue;
    }
    const auto ts = parse_rfc3339(detail::strip(fields[0]));
    if (!ts) {
      malformed.push_back({lineno, "bad timestamp '" + std::string(fields[0]) + "'"});
      continue;
    }
    Row row{{}, std::nullopt, false, lineno};
    const std::string_view vs = detail::strip(fields[1]);
    if (!detail::is_gap_token(vs)) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(vs.data(), vs.data() + vs.size(), v);
      if (ec != std::errc{} || ptr != vs.data() + vs.size() || !std::isfinite(v)) {
        malformed.push_back({lineno, "bad value '" + std::string(vs) + "'"});
        continue;
      }
      row.value = v;
    }
    if (labeled) {
      const std::string_view ls = detail::strip(fields[2]);
      if (ls == "1" || ls == "true") {
        row.label = true;
      } else if (ls != "0" && ls != "false") {
        malformed.push_back({lineno, "bad label '" + std::string(ls) + "'"});
        continue;
      }
    }
    const auto rounded = std::chrono::round<std::chrono::hours>(*ts);
    const auto offset = *ts - rounded;
    if (offset > kSnapTolerance || offset < -kSnapTolerance) {
      result.rejected.push_back({lineno, "timestamp " + std::string(detail::strip(fields[0])) +
                                             " is more than 5 minutes from an hour boundary"});
      continue;
    }
    row.hour = std::chrono::time_point_cast<std::chrono::seconds>(rounded);
    rows.push_back(row);
  }

  if (!malformed.empty()) {
    std::string msg = origin + ": " + std::to_string(malformed.size()) + " unparseable row(s):";
    for (std::size_t i = 0; i < malformed.size() && i < 20; ++i) {
      msg += "\n  line " + std::to_string(malformed[i].line) + ": " + malformed[i].reason;
    }
    if (malformed.size() > 20) msg += "\n  ...";
    throw DataError(msg);
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.hour < b.hour; });
  LabeledSeries& s = result.series;
  s.station_id = station_id;
  s.variable = variable;
  if (rows.empty()) return result;

  s.start = rows.front().hour;
  const auto span_hours = std::chrono::duration_cast<std::chrono::hours>(rows.back().hour - s.start).count();
  s.values.assign(static_cast<std::size_t>(span_hours) + 1, std::nullopt);
  if (labeled) s.truth_labels = std::vector<bool>(s.values.size(), false);
  std::vector<int> seen_line(s.values.size(), 0);
  for (const Row& r : rows) {
    const auto idx = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(r.hour - s.start).count());
    if (seen_line[idx] != 0) {
      const bool same = s.values[idx] == r.value && (!labeled || (*s.truth_labels)[idx] == r.label);
      if (!same) {
        throw DataError(origin + ":" + std::to_string(r.line) + ": duplicate hour " + format_rfc3339(r.hour) +
                        " conflicts with line " + std::to_string(seen_line[idx]));
      }
      continue;
    }
    seen_line[idx] = r.line;
    s.values[idx] = r.value;
    if (labeled) (*s.truth_labels)[idx] = r.label;
  }
  return result;
}

inline IngestResult ingest_csv(const std::string& path, Variable variable, const std::string& station_id,
                               CsvSchema schema = CsvSchema::detect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest_csv(in, path, variable, station_id, schema);
}

/// Inverse of ingest_csv; gaps are written as empty values.
inline void write_series_csv(std::ostream& out, const LabeledSeries& s) {
  const bool labeled = s.truth_labels.has_value();
  out << (labeled ? kLabeledHeader : kPlainHeader) << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_rfc3339(s.time_at(i)) << ',';
    if (s.values[i]) out << detail::format_double(*s.values[i]);
    if (labeled) out << ',' << ((*s.truth_labels)[i] ? '1' : '0');
    out << '\n';
  }
}

inline void write_series_csv(const std::string& path, const LabeledSeries& s) {
  auto out = detail::open_for_write(path);
  write_series_csv(out, s);
  detail::finish_write(out, path);
}

struct AlignedStreams {
  Timestamp start{};
  std::vector<ObservationVector> observations;
};

/// Pairs the forecast stream onto the station's hourly grid. Hours where the
/// forecast is missing or out of range carry the station value only.
inline AlignedStreams align_streams(const LabeledSeries& primary, const LabeledSeries& secondary) {
  AlignedStreams out;
  out.start = primary.start;
  out.observations.resize(primary.size());
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < primary.size(); ++i) {
    out.observations[i].primary = primary.values[i];
    const auto offset = std::chrono::duration_cast<std::chrono::hours>(primary.time_at(i) - secondary.start).count();
    if (offset >= 0 && static_cast<std::size_t>(offset) < secondary.size()) {
      ++overlap;
      out.observations[i].secondary = secondary.values[static_cast<std::size_t>(offset)];
    }
  }
  if (primary.size() == 0 || overlap == 0) {
    throw DataError("primary and secondary streams do not overlap in time");
  }
  return out;
}

// Reports ----------------------------------------------------------------------

inline json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline ConfusionCounts counts_from_json(const json& j) {
  return {j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>(),
          j.at("fn").get<std::uint64_t>()};
}

inline json to_json(const Rates& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"hit_rate", opt(r.hit_rate)}, {"false_positive_rate", opt(r.false_positive_rate)},
          {"accuracy", opt(r.accuracy)}};
}

inline Rates rates_from_json(const json& j) {
  return {detail::json_opt(j.at("hit_rate")), detail::json_opt(j.at("false_positive_rate")),
          detail::json_opt(j.at("accuracy"))};
}

inline json to_json(const MetricsReport& m) {
  json per = json::object();
  for (const auto& [id, c] : m.per_station) per[id] = to_json(c);
  return {{"aggregate", to_json(m.aggregate)}, {"micro", to_json(m.micro)}, {"macro", to_json(m.macro)},
          {"per_station", per}};
}

inline MetricsReport metrics_from_json(const json& j) {
  MetricsReport m;
  for (const auto& [id, c] : j.at("per_station").items()) m.per_station[id] = counts_from_json(c);
  m.aggregate = counts_from_json(j.at("aggregate"));
  m.micro = rates_from_json(j.at("micro"));
  m.macro = rates_from_json(j.at("macro"));
  return m;
}

inline json to_json(const Verdict& v) {
  json j = {{"index", v.index},
            {"timestamp", format_rfc3339(v.sample_time)},
            {"observed", v.observed},
            {"predicted_mean", v.predicted_mean},
            {"predicted_std", v.predicted_std},
            {"p_value", v.p_value},
            {"label", std::string(to_string(v.label))}};
  if (v.truth) j["truth"] = *v.truth;
  return j;
}

inline Verdict verdict_from_json(const json& j) {
  Verdict v;
  v.index = j.at("index").get<std::size_t>();
  const auto ts = parse_rfc3339(j.at("timestamp").get<std::string>());
  if (!ts) throw DataError("report verdict has a bad timestamp");
  v.sample_time = *ts;
  v.observed = j.at("observed").get<double>();
  v.predicted_mean = j.at("predicted_mean").get<double>();
  v.predicted_std = j.at("predicted_std").get<double>();
  v.p_value = j.at("p_value").get<double>();
  const auto label = j.at("label").get<std::string>();
  if (label != "valid" && label != "suspect") throw DataError("report verdict has unknown label '" + label + "'");
  v.label = label == "suspect" ? Label::Suspect : Label::Valid;
  if (j.contains("truth")) v.truth = j.at("truth").get<bool>();
  return v;
}

struct Report {
  std::string station_id;
  std::string variable;
  std::vector<Verdict> verdicts;
  std::optional<MetricsReport> metrics;
  json extra = json::object();  // free-form context (profile, seed, noise, ...)
};

inline json to_json(const Report& r) {
  json verdicts = json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  json j = {{"schema_version", kReportSchemaVersion},
            {"station_id", r.station_id},
            {"variable", r.variable},
            {"verdicts", verdicts},
            {"metrics", r.metrics ? to_json(*r.metrics) : json(nullptr)}};
  if (!r.extra.empty()) j["context"] = r.extra;
  return j;
}

inline Report report_from_json(const json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) {
    throw DataError("unsupported report schema_version");
  }
  Report r;
  r.station_id = j.value("station_id", std::string{});
  r.variable = j.value("variable", std::string{});
  for (const auto& v : j.at("verdicts")) r.verdicts.push_back(verdict_from_json(v));
  if (!j.at("metrics").is_null()) r.metrics = metrics_from_json(j.at("metrics"));
  if (j.contains("context")) r.extra = j.at("context");
  return r;
}

inline void write_report(const std::string& path, const Report& r) {
  auto out = detail::open_for_write(path);
  out << to_json(r).dump(2) << '\n';
  detail::finish_write(out, path);
}

inline Report read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report '" + path + "'");
  try {
    return report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

/// One row per stream step: observation, one-step-ahead prediction, secondary
/// value and the verdict label (empty when the step was not tested).
inline void write_plot_data(std::ostream& out, Timestamp start, std::span<const ObservationVector> stream,
                            std::span<const PredictionPoint> predictions, std::span<const Verdict> verdicts,
                            std::size_t index_offset = 0) {
  if (predictions.size() != stream.size()) throw ValidationError("prediction count differs from stream length");
  std::map<std::size_t, Label> flags;
  for (const auto& v : verdicts) flags[v.index - index_offset] = v.label;
  out << kPlotHeader << '\n';
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out << format_rfc3339(start + kHour * static_cast<long>(i)) << ',';
    if (stream[i].primary) out << detail::format_double(*stream[i].primary);
    out << ',' << detail::format_double(predictions[i].mean) << ',' << detail::format_double(predictions[i].std)
        << ',';
    if (stream[i].secondary) out << detail::format_double(*stream[i].secondary);
    out << ',';
    if (const auto it = flags.find(i); it != flags.end()) out << to_string(it->second);
    out << '\n';
  }
}

inline void write_plot_data(const std::string& path, Timestamp start, std::span<const ObservationVector> stream,
                            std::span<const PredictionPoint> predictions, std::span<const Verdict> verdicts,
                            std::size_t index_offset = 0) {
  auto out = detail::open_for_write(path);
  write_plot_data(out, start, stream, predictions, verdicts, index_offset);
  detail::finish_write(out, path);
}

// Snapshots ----------------------------------------------------------------------

/// Resumable filter state. `next_time` is the timestamp of the first sample
/// the state has not yet assimilated.
struct Snapshot {
  FilterState state;
  std::uint64_t model_hash = 0;
  Timestamp next_time{};
  NoiseEstimate noise;
  int period_tau = 24;
  int stream_count = 1;
};

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json to_json(const Snapshot& s) {
  const auto& f = s.state.f;
  const auto& F = s.state.F;
  json mean = json::array();
  for (Eigen::Index i = 0; i < f.size(); ++i) mean.push_back(f(i));
  json cov = json::array();
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < F.cols(); ++j) row.push_back(F(i, j));
    cov.push_back(row);
  }
  json noise = {{"epsilon_x", s.noise.epsilon_x},
                {"raw_x", s.noise.raw_x},
                {"epsilon_y", s.noise.epsilon_y ? json(*s.noise.epsilon_y) : json(nullptr)},
                {"raw_y", s.noise.raw_y ? json(*s.noise.raw_y) : json(nullptr)}};
  return {{"schema_version", kSnapshotSchemaVersion},
          {"kind", "sensorqc-filter-state"},
          {"model_hash", hash_hex(s.model_hash)},
          {"period_tau", s.period_tau},
          {"stream_count", s.stream_count},
          {"t", s.state.t},
          {"next_timestamp", format_rfc3339(s.next_time)},
          {"noise", noise},
          {"f", mean},
          {"F", cov}};
}

inline Snapshot snapshot_from_json(const json& j) {
  if (j.value("kind", std::string{}) != "sensorqc-filter-state") throw StateError("not a filter-state snapshot");
  if (j.value("schema_version", 0) != kSnapshotSchemaVersion) {
    throw StateError("unsupported snapshot schema_version");
  }
  Snapshot s;
  s.model_hash = std::stoull(j.at("model_hash").get<std::string>(), nullptr, 16);
  s.period_tau = j.at("period_tau").get<int>();
  s.stream_count = j.at("stream_count").get<int>();
  s.state.t = j.at("t").get<long>();
  const auto ts = parse_rfc3339(j.at("next_timestamp").get<std::string>());
  if (!ts) throw StateError("snapshot has a bad next_timestamp");
  s.next_time = *ts;
  const auto& n = j.at("noise");
  s.noise.epsilon_x = n.at("epsilon_x").get<double>();
  s.noise.raw_x = n.at("raw_x").get<double>();
  s.noise.epsilon_y = detail::json_opt(n.at("epsilon_y"));
  s.noise.raw_y = detail::json_opt(n.at("raw_y"));
  const auto& f = j.at("f");
  const auto& F = j.at("F");
  const auto h = static_cast<Eigen::Index>(f.size());
  if (static_cast<Eigen::Index>(F.size()) != h) throw StateError("snapshot covariance has the wrong shape");
  s.state.f.resize(h);
  s.state.F.resize(h, h);
  for (Eigen::Index i = 0; i < h; ++i) {
    s.state.f(i) = f.at(static_cast<std::size_t>(i)).get<double>();
    const auto& row = F.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != h) throw StateError("snapshot covariance has the wrong shape");
    for (Eigen::Index k = 0; k < h; ++k) s.state.F(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return s;
}

inline void save_snapshot(const std::string& path, const Snapshot& s) {
  auto out = detail::open_for_write(path);
  out << to_json(s).dump(2) << '\n';
  detail::finish_write(out, path);
}

inline Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open state file '" + path + "'");
  try {
    return snapshot_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw StateError("'" + path + "': " + e.what());
  }
}

/// Throws StateError unless `model` is the model the snapshot was produced with.
inline void check_compatible(const Snapshot& s, const StateSpaceModel& model) {
  if (s.model_hash != model.hash()) {
    throw StateError("model hash mismatch: state " + hash_hex(s.model_hash) + " vs config " +
                     hash_hex(model.hash()));
  }
}

}  // namespace sensorqc
