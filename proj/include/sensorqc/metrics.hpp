#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace sensorqc {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }

  /// Records one classified sample. `perturbed` is the ground truth.
  void add(bool perturbed, bool flagged) {
    if (perturbed) {
      (flagged ? tp : fn) += 1;
    } else {
      (flagged ? fp : tn) += 1;
    }
  }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Rates are absent when their denominator is zero.
struct Rates {
  std::optional<double> hit_rate;
  std::optional<double> false_positive_rate;
  std::optional<double> accuracy;

  bool operator==(const Rates&) const = default;
};

inline Rates compute_rates(const ConfusionCounts& c) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp, c.tp + c.fn), ratio(c.fp, c.fp + c.tn), ratio(c.tp + c.tn, c.total())};
}

struct MetricsReport {
  std::map<std::string, ConfusionCounts> per_station;
  ConfusionCounts aggregate;
  Rates micro;  // from pooled counts
  Rates macro;  // mean of per-station rates, over stations where each is defined

  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport build_metrics(std::map<std::string, ConfusionCounts> per_station) {
  MetricsReport r;
  r.per_station = std::move(per_station);
  double sums[3] = {0.0, 0.0, 0.0};
  int counts[3] = {0, 0, 0};
  for (const auto& [id, c] : r.per_station) {
    r.aggregate += c;
    const Rates s = compute_rates(c);
    const std::optional<double> parts[3] = {s.hit_rate, s.false_positive_rate, s.accuracy};
    for (int k = 0; k < 3; ++k) {
      if (parts[k]) {
        sums[k] += *parts[k];
        ++counts[k];
      }
    }
  }
  r.micro = compute_rates(r.aggregate);
  auto mean = [&](int k) -> std::optional<double> {
    if (counts[k] == 0) return std::nullopt;
    return sums[k] / counts[k];
  };
  r.macro = {mean(0), mean(1), mean(2)};
  return r;
}

}  // namespace sensorqc
