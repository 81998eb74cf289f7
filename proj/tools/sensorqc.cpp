// sensorqc: command-line front end for the sensor quality-control pipeline.
//
// Exit codes: 0 success, 2 usage/validation, 3 data error, 4 state incompatibility.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sensorqc/sensorqc.hpp"

namespace fs = std::filesystem;
using namespace sensorqc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitState = 4;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<double> p_threshold;
  std::optional<double> tpws_noise_floor;
  std::optional<double> nwp_noise_multiplier;
  std::optional<double> process_noise_scale;
  std::optional<double> prior_cov_scale;
  std::optional<int> period_tau;
  std::optional<std::string> test_samples;
  bool reject_suspects = false;
};

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) {
    throw ValidationError(std::string(what) + " '" + path + "' does not exist or is not a file");
  }
}

// Defaults < config file < flags.
Settings resolve_settings(const GlobalOptions& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("SENSORQC_CONFIG"); env && *env) path = env;
  }
  Settings s;
  if (!path.empty()) {
    require_file(path, "config file");
    s = load_settings(path);
  }
  auto set = [&s](const std::string& key, const std::string& value) { apply_setting(s, key, value); };
  auto num = [](double v) { return detail::format_double(v); };
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (g.p_threshold) set("p_threshold", num(*g.p_threshold));
  if (g.tpws_noise_floor) set("tpws_noise_floor", num(*g.tpws_noise_floor));
  if (g.nwp_noise_multiplier) set("nwp_noise_multiplier", num(*g.nwp_noise_multiplier));
  if (g.process_noise_scale) set("process_noise_scale", num(*g.process_noise_scale));
  if (g.prior_cov_scale) set("prior_cov_scale", num(*g.prior_cov_scale));
  if (g.period_tau) set("period_tau", std::to_string(*g.period_tau));
  if (g.test_samples) set("test_samples", *g.test_samples);
  if (g.reject_suspects) set("reject_suspects_from_update", "true");
  s.model.validate();
  return s;
}

// stream_count follows the presence of a secondary stream unless the config pins it.
void fix_stream_count(Settings& s, bool has_secondary) {
  const int wanted = has_secondary ? 2 : 1;
  if (s.is_explicit("stream_count") && s.model.stream_count != wanted) {
    throw ValidationError("config sets stream_count=" + std::to_string(s.model.stream_count) + " but " +
                          (has_secondary ? "a --secondary stream was given" : "no --secondary stream was given"));
  }
  s.model.stream_count = wanted;
}

IngestResult load_series(const std::string& path, Variable variable, const std::string& station) {
  IngestResult r = ingest_csv(path, variable, station);
  for (const auto& issue : r.rejected) {
    std::cerr << "warning: " << path << ":" << issue.line << ": " << issue.reason << "\n";
  }
  return r;
}

// Re-grids `s` to start at `start` with `length` hourly steps.
std::vector<std::optional<double>> regrid(const LabeledSeries& s, Timestamp start, std::size_t length) {
  std::vector<std::optional<double>> out(length);
  for (std::size_t i = 0; i < length; ++i) {
    const auto off = std::chrono::duration_cast<std::chrono::hours>(start + kHour * static_cast<long>(i) - s.start).count();
    if (off >= 0 && static_cast<std::size_t>(off) < s.size()) out[i] = s.values[static_cast<std::size_t>(off)];
  }
  return out;
}

json noise_json(const NoiseEstimate& n) {
  json j = {{"epsilon_x", n.epsilon_x}, {"raw_x", n.raw_x}, {"x_floor_active", n.x_floor_active()}};
  if (n.epsilon_y) {
    j["epsilon_y"] = *n.epsilon_y;
    j["raw_y"] = *n.raw_y;
    j["y_floor_active"] = n.y_floor_active();
  }
  return j;
}

void print_rates(const std::string& title, const Rates& r) {
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
    return std::string(buf);
  };
  std::cout << title << "  hit rate " << pct(r.hit_rate) << "  false positive rate "
            << pct(r.false_positive_rate) << "  accuracy " << pct(r.accuracy) << "\n";
}

// calibrate ------------------------------------------------------------------

struct CalibrateOptions {
  std::string input, secondary, out_state, summary, station = "station", variable = "temperature_c";
};

int cmd_calibrate(const GlobalOptions& g, const CalibrateOptions& o) {
  require_file(o.input, "input");
  if (!o.secondary.empty()) require_file(o.secondary, "secondary input");
  Settings s = resolve_settings(g);
  fix_stream_count(s, !o.secondary.empty());
  const Variable var = parse_variable(o.variable);

  const LabeledSeries primary = load_series(o.input, var, o.station).series;
  if (primary.size() == 0) throw DataError("'" + o.input + "' contains no rows");
  std::optional<std::vector<std::optional<double>>> secondary;
  if (!o.secondary.empty()) {
    secondary = regrid(load_series(o.secondary, var, o.station).series, primary.start, primary.size());
  }

  using OptSpan = std::span<const std::optional<double>>;
  std::optional<OptSpan> sec_span;
  if (secondary) sec_span = OptSpan(*secondary);
  const int start_hour = primary.hour_of_day(0, s.model.utc_offset_hours);
  const Calibration c = calibrate(primary.values, sec_span, s.model, start_hour);

  Snapshot snap;
  snap.state = c.state;
  snap.model_hash = c.model.hash();
  snap.next_time = primary.time_at(primary.size());
  snap.noise = c.noise;
  snap.period_tau = s.model.period_tau;
  snap.stream_count = s.model.stream_count;
  save_snapshot(o.out_state, snap);

  json summary = {{"calibration_samples", primary.size()},
                  {"start", format_rfc3339(primary.start)},
                  {"next_timestamp", format_rfc3339(snap.next_time)},
                  {"stream_count", s.model.stream_count},
                  {"noise", noise_json(c.noise)},
                  {"model_hash", hash_hex(snap.model_hash)}};
  if (!o.summary.empty()) {
    auto out = detail::open_for_write(o.summary);
    out << summary.dump(2) << "\n";
    detail::finish_write(out, o.summary);
  }
  std::cout << "calibrated on " << primary.size() << " samples (" << primary.gap_count() << " gaps)\n";
  std::cout << "epsilon_x = " << c.noise.epsilon_x << " (raw " << c.noise.raw_x << ", floor "
            << (c.noise.x_floor_active() ? "active" : "inactive") << ")\n";
  if (c.noise.epsilon_y) {
    std::cout << "epsilon_y = " << *c.noise.epsilon_y << " (raw " << *c.noise.raw_y << ", floor "
              << (c.noise.y_floor_active() ? "active" : "inactive") << ")\n";
  }
  std::cout << "model hash " << hash_hex(snap.model_hash) << ", state written to " << o.out_state << "\n";
  return kExitOk;
}

// run -------------------------------------------------------------------------

struct RunOptions {
  std::string input, secondary, state, out_state, report, plot_data, station = "station",
      variable = "temperature_c";
};

int cmd_run(const GlobalOptions& g, const RunOptions& o) {
  require_file(o.input, "input");
  require_file(o.state, "state file");
  if (!o.secondary.empty()) require_file(o.secondary, "secondary input");
  Settings s = resolve_settings(g);
  fix_stream_count(s, !o.secondary.empty());
  const Variable var = parse_variable(o.variable);

  Snapshot snap = load_snapshot(o.state);
  if (snap.stream_count != s.model.stream_count || snap.period_tau != s.model.period_tau) {
    throw StateError("state was calibrated with period_tau=" + std::to_string(snap.period_tau) +
                     ", stream_count=" + std::to_string(snap.stream_count) + "; current settings differ");
  }
  StateSpaceModel model;
  try {
    model = assemble_model(s.model, snap.noise);
  } catch (const ValidationError& e) {
    throw StateError(std::string("state is incompatible with the configuration: ") + e.what());
  }
  check_compatible(snap, model);

  const LabeledSeries raw = load_series(o.input, var, o.station).series;
  std::size_t length = 0;
  if (raw.size() > 0 && raw.time_at(raw.size()) > snap.next_time) {
    length = static_cast<std::size_t>(
        std::chrono::duration_cast<std::chrono::hours>(raw.time_at(raw.size()) - snap.next_time).count());
  }
  LabeledSeries chunk;
  chunk.station_id = o.station;
  chunk.variable = var;
  chunk.start = snap.next_time;
  chunk.values = regrid(raw, snap.next_time, length);

  std::vector<ObservationVector> stream = to_observations(chunk);
  if (!o.secondary.empty()) {
    const auto sec = regrid(load_series(o.secondary, var, o.station).series, chunk.start, length);
    for (std::size_t i = 0; i < length; ++i) stream[i].secondary = sec[i];
  }

  std::vector<bool> is_test(length, false);
  if (length > 0) {
    for (auto i : select_test_samples(chunk, s.test_samples, s.model.utc_offset_hours)) is_test[i] = true;
  }
  const auto base_index = static_cast<std::size_t>(snap.state.t);
  const ScreeningResult r = screen_stream(snap.state, model, stream, is_test, s.model, chunk.start, base_index);

  Report report;
  report.station_id = o.station;
  report.variable = std::string(to_string(var));
  report.verdicts = r.verdicts;
  report.extra = {{"model_hash", hash_hex(snap.model_hash)},
                  {"p_threshold", s.model.p_threshold},
                  {"test_samples", to_string(s.test_samples)},
                  {"steps", length}};
  write_report(o.report, report);
  if (!o.plot_data.empty()) write_plot_data(o.plot_data, chunk.start, stream, r.predictions, r.verdicts, base_index);

  if (length > 0) {
    snap.state = r.final_state;
    snap.next_time = chunk.time_at(length);
  }
  save_snapshot(o.out_state.empty() ? o.state : o.out_state, snap);

  std::size_t suspects = 0;
  for (const auto& v : r.verdicts) suspects += v.label == Label::Suspect ? 1 : 0;
  std::cout << "filtered " << length << " steps, tested " << r.verdicts.size() << " samples, " << suspects
            << " suspect\n";
  return kExitOk;
}

// eval --------------------------------------------------------------------------

struct EvalOptions {
  std::string input, secondary, report, plot_data, station = "station", variable = "temperature_c";
};

int cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  require_file(o.input, "input");
  if (!o.secondary.empty()) require_file(o.secondary, "secondary input");
  Settings s = resolve_settings(g);
  fix_stream_count(s, !o.secondary.empty());
  const Variable var = parse_variable(o.variable);

  const LabeledSeries series = ingest_csv(o.input, var, o.station, CsvSchema::labeled).series;
  const std::size_t calib_len = static_cast<std::size_t>(s.model.calibration_days) * 24;
  if (series.size() <= calib_len) {
    throw DataError("'" + o.input + "' has " + std::to_string(series.size()) +
                    " hourly steps; calibration alone needs " + std::to_string(calib_len));
  }
  std::optional<std::vector<std::optional<double>>> secondary;
  if (!o.secondary.empty()) {
    secondary = regrid(load_series(o.secondary, var, o.station).series, series.start, series.size());
  }

  using OptSpan = std::span<const std::optional<double>>;
  std::optional<OptSpan> sec_calib;
  if (secondary) sec_calib = OptSpan(*secondary).first(calib_len);
  const Calibration c = calibrate(OptSpan(series.values).first(calib_len), sec_calib, s.model,
                                  series.hour_of_day(0, s.model.utc_offset_hours));

  const std::size_t n = series.size() - calib_len;
  std::vector<ObservationVector> stream(n);
  std::vector<bool> is_test(n, false), truth(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    stream[i].primary = series.values[calib_len + i];
    if (secondary) stream[i].secondary = (*secondary)[calib_len + i];
    truth[i] = (*series.truth_labels)[calib_len + i];
  }
  for (auto i : select_test_samples(series, s.test_samples, s.model.utc_offset_hours)) {
    if (i >= calib_len) is_test[i - calib_len] = true;
  }
  const ScreeningResult r =
      screen_stream(c.state, c.model, stream, is_test, s.model, series.time_at(calib_len), calib_len, &truth);

  ConfusionCounts counts;
  for (const auto& v : r.verdicts) counts.add(v.truth.value_or(false), v.label == Label::Suspect);
  Report report;
  report.station_id = o.station;
  report.variable = std::string(to_string(var));
  report.verdicts = r.verdicts;
  report.metrics = build_metrics({{o.station, counts}});
  report.extra = {{"noise", noise_json(c.noise)}, {"calibration_samples", calib_len},
                  {"test_samples", to_string(s.test_samples)}};
  write_report(o.report, report);
  if (!o.plot_data.empty()) {
    write_plot_data(o.plot_data, series.time_at(calib_len), stream, r.predictions, r.verdicts, calib_len);
  }
  print_rates(o.station, report.metrics->micro);
  return kExitOk;
}

// synth ------------------------------------------------------------------------

struct SynthOptions {
  std::string profile = "temperature", out, out_secondary;
  std::uint64_t seed = 1;
  int station_index = 0;
  std::optional<int> days;
  bool clean = false;
};

int cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  Settings s = resolve_settings(g);
  ProfileSpec spec = default_profile(parse_profile(o.profile));
  if (o.days) spec.length_days = *o.days;
  std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                    static_cast<std::uint32_t>(o.station_index), 0x5eed5u};
  std::mt19937_64 rng(seq);
  SyntheticStationParams params = draw_station(spec.population, rng);
  params.station_id = station_name(o.station_index);
  params.variable = spec.variable;
  params.length_days = spec.length_days;
  PerturbationSpec perturbation = spec.perturbation;
  perturbation.seed = rng();

  const StationSeries st = generate_station(params);
  LabeledSeries primary = st.primary;
  if (o.clean) {
    primary.truth_labels = std::vector<bool>(primary.size(), false);
  } else {
    const std::size_t calib_len = static_cast<std::size_t>(s.model.calibration_days) * 24;
    auto tests = select_test_samples(primary, spec.selector, s.model.utc_offset_hours);
    std::erase_if(tests, [calib_len](std::size_t i) { return i < calib_len; });
    primary = perturb(primary, tests, perturbation);
  }
  write_series_csv(o.out, primary);
  if (!o.out_secondary.empty()) {
    LabeledSeries sec = st.secondary;
    sec.truth_labels.reset();
    write_series_csv(o.out_secondary, sec);
  }
  std::cout << "wrote " << primary.size() << " hourly samples to " << o.out << " (level " << params.level
            << ", amplitude " << params.diurnal_amplitude << ", noise " << params.noise_std << ")\n";
  return kExitOk;
}

// bench ------------------------------------------------------------------------

struct BenchCliOptions {
  std::string profile = "temperature", report;
  int stations = 100;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::optional<int> days;
  bool verdicts = false;
};

int cmd_bench(const GlobalOptions& g, const BenchCliOptions& o) {
  Settings s = resolve_settings(g);
  BenchOptions b;
  b.profile = parse_profile(o.profile);
  b.stations = o.stations;
  b.seed = o.seed;
  b.jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  b.config = s.model;
  b.length_days = o.days;
  const BenchResult r = run_benchmark(b);

  print_rates(std::string(to_string(b.profile)) + " (pooled)    ", r.metrics.micro);
  print_rates(std::string(to_string(b.profile)) + " (per-station)", r.metrics.macro);

  if (!o.report.empty()) {
    Report report;
    report.station_id = "bench";
    report.variable = std::string(to_string(default_profile(b.profile).variable));
    if (b.profile == Profile::humidity) report.variable = std::string(to_string(Variable::rh_percent));
    report.metrics = r.metrics;
    if (o.verdicts) {
      for (const auto& st : r.stations) report.verdicts.insert(report.verdicts.end(), st.verdicts.begin(), st.verdicts.end());
    }
    json noise = json::object();
    for (const auto& st : r.stations) noise[st.station_id] = noise_json(st.noise);
    report.extra = {{"profile", std::string(to_string(b.profile))},
                    {"stations", b.stations},
                    {"seed", b.seed},
                    {"length_days", o.days.value_or(default_profile(b.profile).length_days)},
                    {"settings", format_settings(s)},
                    {"noise", noise}};
    write_report(o.report, report);
  }
  return kExitOk;
}

// dump-filter --------------------------------------------------------------------

int cmd_dump_filter(const GlobalOptions& g, bool as_json) {
  Settings s = resolve_settings(g);
  const auto spec = design_highpass(s.model.highpass_order, s.model.highpass_cutoff());
  json poles = json::array();
  for (const auto& p : spec.poles) poles.push_back({p.real(), p.imag()});
  json j = {{"order", spec.order},
            {"cutoff_cycles_per_hour", spec.cutoff_cycles_per_hour},
            {"sample_interval_hours", spec.sample_interval_hours},
            {"numerator", spec.numerator},
            {"denominator", spec.denominator},
            {"poles", poles},
            {"gain_db_at_cutoff", gain_db(spec, spec.cutoff_cycles_per_hour)},
            {"stable", is_stable(spec)}};
  if (as_json) {
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "Butterworth high-pass, order " << spec.order << ", cut-off " << spec.cutoff_cycles_per_hour
            << " cycles/hour\n";
  std::cout.precision(17);
  std::cout << "b =";
  for (double v : spec.numerator) std::cout << ' ' << v;
  std::cout << "\na =";
  for (double v : spec.denominator) std::cout << ' ' << v;
  std::cout.precision(6);
  std::cout << "\ngain at cut-off: " << gain_db(spec, spec.cutoff_cycles_per_hour) << " dB, stable: "
            << (is_stable(spec) ? "yes" : "no") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensorqc - Kalman-filter quality control for hourly sensor streams"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Config file (key = value); falls back to $SENSORQC_CONFIG");
  app.add_option("--set", g.sets, "Override a config key: --set key=value (repeatable)");
  app.add_option("--p-threshold", g.p_threshold, "Two-sided p-value threshold");
  app.add_option("--tpws-noise-floor", g.tpws_noise_floor, "Lower bound on station noise");
  app.add_option("--nwp-noise-multiplier", g.nwp_noise_multiplier, "Forecast noise floor as a multiple of station noise");
  app.add_option("--process-noise-scale", g.process_noise_scale, "Process noise scale");
  app.add_option("--prior-cov-scale", g.prior_cov_scale, "Initial covariance scale");
  app.add_option("--period-tau", g.period_tau, "Seasonal period in hours");
  app.add_option("--test-samples", g.test_samples, "all | daily_min | daily_max | hours:9,15");
  app.add_flag("--reject-suspects", g.reject_suspects, "Leave suspect samples out of the filter update");

  CalibrateOptions co;
  auto* cal = app.add_subcommand("calibrate", "Estimate noise and the initial state from a calibration window");
  cal->add_option("--input", co.input, "Station CSV (timestamp,value)")->required();
  cal->add_option("--secondary", co.secondary, "Forecast CSV (timestamp,value)");
  cal->add_option("--out-state", co.out_state, "Where to write the filter state")->required();
  cal->add_option("--summary", co.summary, "Optional JSON calibration summary");
  cal->add_option("--station", co.station, "Station id");
  cal->add_option("--variable", co.variable, "temperature_c | dew_point_c | wind_gust_ms | rh_percent");

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Resume from a saved state, filter new data and classify test samples");
  run->add_option("--input", ro.input, "Station CSV")->required();
  run->add_option("--secondary", ro.secondary, "Forecast CSV");
  run->add_option("--state", ro.state, "Filter state from calibrate or a previous run")->required();
  run->add_option("--out-state", ro.out_state, "Where to write the updated state (default: overwrite --state)");
  run->add_option("--report", ro.report, "JSON verdict report")->required();
  run->add_option("--plot-data", ro.plot_data, "Plot CSV");
  run->add_option("--station", ro.station, "Station id");
  run->add_option("--variable", ro.variable, "Variable name");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Calibrate, filter and score a labelled CSV (timestamp,value,label)");
  eval->add_option("--input", eo.input, "Labelled station CSV")->required();
  eval->add_option("--secondary", eo.secondary, "Forecast CSV");
  eval->add_option("--report", eo.report, "JSON report")->required();
  eval->add_option("--plot-data", eo.plot_data, "Plot CSV");
  eval->add_option("--station", eo.station, "Station id");
  eval->add_option("--variable", eo.variable, "Variable name");

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Write a synthetic station (with labelled perturbations) as CSV");
  synth->add_option("--profile", so.profile, "temperature | humidity | wind");
  synth->add_option("--seed", so.seed, "Random seed");
  synth->add_option("--station-index", so.station_index, "Station index within the seed's population");
  synth->add_option("--days", so.days, "Length in days");
  synth->add_option("--out", so.out, "Labelled station CSV")->required();
  synth->add_option("--out-secondary", so.out_secondary, "Forecast CSV");
  synth->add_flag("--clean", so.clean, "Do not inject perturbations");

  BenchCliOptions bo;
  auto* bench = app.add_subcommand("bench", "Run the synthetic perturbation benchmark");
  bench->add_option("--profile", bo.profile, "temperature | humidity | wind");
  bench->add_option("--stations", bo.stations, "Number of stations")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bo.seed, "Random seed");
  bench->add_option("--jobs", bo.jobs, "Worker threads (default: hardware concurrency)");
  bench->add_option("--days", bo.days, "Simulated days per station (default 730)");
  bench->add_option("--report", bo.report, "JSON report");
  bench->add_flag("--verdicts", bo.verdicts, "Include every verdict in the report");

  bool dump_json = false;
  auto* dump = app.add_subcommand("dump-filter", "Print the noise-estimation filter coefficients");
  dump->add_flag("--json", dump_json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*cal) return cmd_calibrate(g, co);
    if (*run) return cmd_run(g, ro);
    if (*eval) return cmd_eval(g, eo);
    if (*synth) return cmd_synth(g, so);
    if (*bench) return cmd_bench(g, bo);
    if (*dump) return cmd_dump_filter(g, dump_json);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitState;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
