#pragma once

// Recovering photon observables from a conductance trace: upward step
// detection, inter-event interval statistics, step height versus
// transconductance, and saturation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpcpd/simulate.hpp"
#include "qpcpd/transport.hpp"

namespace qpcpd {

struct StepEvent {
  double time = 0.0;
  double height = 0.0;        // 2e^2/h
  double confidence = 0.0;    // detection statistic in noise units
  double level_before = 0.0;  // mean conductance of the window before
  std::size_t sample_index = 0;

  bool operator==(const StepEvent&) const = default;
};

struct DetectorParams {
  std::size_t window = 24;
  double threshold = 5.0;
  // Lower bound on the estimated noise so exactly noiseless traces still
  // give a finite statistic.
  double min_noise = 1e-9;
  // Re-examine the neighbourhood of every detection and split it when it
  // holds several upward steps closer together than one window.
  bool resolve_close_steps = true;
};

/// Robust white-noise estimate: MAD of first differences / (0.6745 sqrt 2).
inline double estimate_noise(std::span<const double> values) {
  if (values.size() < 2) {
    return 0.0;
  }
  std::vector<double> diffs(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    diffs[i] = values[i + 1] - values[i];
  }
  auto median = [](std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
      m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
  };
  const double center = median(diffs);
  for (double& d : diffs) d = std::abs(d - center);
  return median(diffs) / (0.6744897501960817 * std::sqrt(2.0));
}

/// Moving-window mean difference. At boundary i (between samples i-1 and i)
///   D_i = mean(x[i, i+w)) - mean(x[i-w, i))
/// is scaled by its noise sigma * sqrt(2/w). Steps are the largest upward
/// statistics above threshold, at least one window apart; on equal
/// statistics the earlier boundary wins. With resolve_close_steps each
/// detection's neighbourhood is then segmented so that photon steps closer
/// than one window are reported separately.
inline std::vector<StepEvent> detect_steps(std::span<const double> times, std::span<const double> values,
                                           const DetectorParams& params) {
  const std::size_t w = params.window;
  const std::size_t n = values.size();
  if (w < 2) {
    throw std::domain_error("detector window must be >= 2");
  }
  if (times.size() != n) {
    throw std::domain_error("times and values differ in length");
  }
  if (n < 2 * w) {
    throw std::domain_error("trace shorter than two detector windows");
  }
  const double sigma = std::max(estimate_noise(values), params.min_noise);
  const double stat_sigma = sigma * std::sqrt(2.0 / static_cast<double>(w));
  const double inv_w = 1.0 / static_cast<double>(w);

  // statistic[i - w] for boundaries i in [w, n - w]
  const std::size_t m = n - 2 * w + 1;
  std::vector<double> diff(m);
  std::vector<double> before_mean(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = j + w;
    double before = 0.0;
    double after = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      before += values[i - w + k];
      after += values[i + k];
    }
    before_mean[j] = before * inv_w;
    diff[j] = after * inv_w - before_mean[j];
  }

  // Statistics equal up to summation rounding compare as ties.
  double scale = 0.0;
  for (const double v : values) scale = std::max(scale, std::abs(v));
  const double quantum = 1e-12 * std::max(scale, stat_sigma);
  std::vector<long long> rank(m);
  for (std::size_t j = 0; j < m; ++j) rank[j] = std::llround(diff[j] / quantum);

  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < m; ++j) {
    const double z = diff[j] / stat_sigma;
    if (!(diff[j] > 0.0) || z < params.threshold) continue;
    const bool left_ok = j == 0 || rank[j] >= rank[j - 1];
    const bool right_ok = j + 1 == m || rank[j] >= rank[j + 1];
    if (left_ok && right_ok) candidates.push_back(j);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; });

  std::vector<std::size_t> accepted;
  for (const std::size_t j : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return (a > j ? a - j : j - a) < w;
    });
    if (clear) accepted.push_back(j);
  }
  std::sort(accepted.begin(), accepted.end());

  std::vector<std::size_t> boundaries;
  for (const std::size_t j : accepted) boundaries.push_back(j + w);
  if (!params.resolve_close_steps) {
    std::vector<StepEvent> steps;
    steps.reserve(accepted.size());
    for (const std::size_t j : accepted) {
      steps.push_back({times[j + w], diff[j], diff[j] / stat_sigma, before_mean[j], j + w});
    }
    return steps;
  }

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + values[k];
  auto mean = [&](std::size_t a, std::size_t b) {
    return (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  };
  auto z_of = [&](std::size_t a, std::size_t k, std::size_t b) {
    const double se = sigma * std::sqrt(1.0 / static_cast<double>(k - a) + 1.0 / static_cast<double>(b - k));
    return (mean(k, b) - mean(a, k)) / se;
  };

  // Binary segmentation of [a, b): split at the strongest upward change and
  // recurse while the split is significant.
  std::vector<std::size_t> refined;
  auto segment = [&](auto&& self, std::size_t a, std::size_t b) -> void {
    if (b - a < 2) return;
    double best_z = 0.0;
    std::size_t best_k = 0;
    for (std::size_t k = a + 1; k < b; ++k) {
      const double z = z_of(a, k, b);
      if (z > best_z) {
        best_z = z;
        best_k = k;
      }
    }
    if (best_k == 0 || best_z < params.threshold) return;
    refined.push_back(best_k);
    self(self, a, best_k);
    self(self, best_k, b);
  };
  for (std::size_t d = 0; d < boundaries.size(); ++d) {
    const std::size_t i = boundaries[d];
    std::size_t a = i - w;
    std::size_t b = i + w;
    if (d > 0) a = std::max(a, (boundaries[d - 1] + i) / 2);
    if (d + 1 < boundaries.size()) b = std::min(b, (i + boundaries[d + 1]) / 2);
    segment(segment, a, b);
  }
  std::sort(refined.begin(), refined.end());

  // Heights from the samples between neighbouring boundaries, at most one
  // window on either side.
  std::vector<StepEvent> steps;
  steps.reserve(refined.size());
  for (std::size_t r = 0; r < refined.size(); ++r) {
    const std::size_t i = refined[r];
    const std::size_t a = std::max(r > 0 ? refined[r - 1] : 0, i >= w ? i - w : 0);
    const std::size_t b = std::min(r + 1 < refined.size() ? refined[r + 1] : n, i + w);
    const double height = mean(i, b) - mean(a, i);
    if (!(height > 0.0)) continue;
    steps.push_back({times[i], height, z_of(a, i, b), mean(a, i), i});
  }
  return steps;
}

inline std::vector<StepEvent> detect_steps(const Trace& trace, const DetectorParams& params) {
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw std::domain_error("step detection needs a time-axis trace");
  }
  return detect_steps(trace.axis, trace.conductance, params);
}

inline std::vector<double> successive_intervals(std::span<const double> event_times) {
  std::vector<double> out;
  for (std::size_t i = 1; i < event_times.size(); ++i) {
    out.push_back(event_times[i] - event_times[i - 1]);
  }
  return out;
}

inline std::vector<double> step_times(const std::vector<StepEvent>& steps) {
  std::vector<double> t;
  t.reserve(steps.size());
  for (const auto& s : steps) t.push_back(s.time);
  return t;
}

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> bin_start;
  std::vector<std::size_t> count;

  std::size_t total() const { return std::accumulate(count.begin(), count.end(), std::size_t{0}); }
};

/// Dense histogram of intervals: bins [k w, (k+1) w) from 0 up to the
/// largest interval.
inline Histogram histogram_of_intervals(std::span<const double> intervals, double bin_width) {
  if (!(bin_width > 0.0)) {
    throw std::domain_error("bin_width must be > 0");
  }
  Histogram h;
  h.bin_width = bin_width;
  if (intervals.empty()) {
    return h;
  }
  const double largest = *std::max_element(intervals.begin(), intervals.end());
  const auto bins = static_cast<std::size_t>(std::floor(largest / bin_width)) + 1;
  h.count.assign(bins, 0);
  h.bin_start.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) h.bin_start[k] = bin_width * static_cast<double>(k);
  for (const double x : intervals) {
    auto k = static_cast<std::size_t>(std::floor(x / bin_width));
    ++h.count[std::min(k, bins - 1)];
  }
  return h;
}

inline Histogram interval_histogram(const std::vector<StepEvent>& events, double bin_width) {
  if (events.size() < 2) {
    throw std::domain_error("interval histogram needs at least 2 events");
  }
  const auto times = step_times(events);
  return histogram_of_intervals(successive_intervals(times), bin_width);
}

struct IntervalFit {
  std::size_t event_count = 0;  // intervals + 1
  double mean_interval = 0.0;   // s
  double rate = 0.0;            // 1/s
  double ks_statistic = 0.0;

  std::size_t interval_count() const { return event_count - 1; }
};

/// One-sample Kolmogorov-Smirnov distance to Exponential(rate).
inline double ks_exponential(std::span<const double> samples, double rate) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = -std::expm1(-rate * sorted[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - cdf, cdf - di / n});
  }
  return d;
}

/// Maximum-likelihood exponential fit, rate = n / sum(intervals).
inline IntervalFit fit_exponential(std::span<const double> intervals) {
  if (intervals.size() < 2) {
    throw std::domain_error("exponential fit needs at least 2 intervals");
  }
  double sum = 0.0;
  for (const double x : intervals) {
    if (!(x > 0.0)) {
      throw std::domain_error("intervals must be positive");
    }
    sum += x;
  }
  IntervalFit fit;
  fit.event_count = intervals.size() + 1;
  fit.mean_interval = sum / static_cast<double>(intervals.size());
  fit.rate = 1.0 / fit.mean_interval;
  fit.ks_statistic = ks_exponential(intervals, fit.rate);
  return fit;
}

/// Critical KS distance at the 5% level for n samples (asymptotic).
inline double ks_critical_5pct(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    return std::nullopt;
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    return std::nullopt;
  }
  return sxy / std::sqrt(sxx * syy);
}

struct HeightCorrelation {
  static constexpr std::size_t min_steps = 3;

  bool sufficient_events = false;
  std::optional<double> pearson_r;
  std::vector<double> operating_voltage;  // V, per step
  std::vector<double> transconductance;   // (2e^2/h)/V, per step
  std::vector<std::optional<double>> implied_couplings;  // V, per step

  std::size_t defined_count() const {
    return static_cast<std::size_t>(
        std::count_if(implied_couplings.begin(), implied_couplings.end(), [](const auto& c) { return c.has_value(); }));
  }

  std::optional<double> mean_implied_coupling() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : implied_couplings) {
      if (c) {
        sum += *c;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

namespace detail {

/// Gate voltage at which the model conductance reaches target, bracketed
/// around gate_bias and widened as needed.
inline double gate_for_level(double target, const DeviceParams& device, double gate_bias) {
  double lo = gate_bias - 0.25;
  double hi = gate_bias + 0.25;
  for (int i = 0; i < 40 && conductance(lo, device) > target; ++i) lo -= (hi - lo);
  for (int i = 0; i < 40 && conductance(hi, device) < target; ++i) hi += (hi - lo);
  return gate_voltage_for_conductance(target, lo, hi, device);
}

}  // namespace detail

/// Operating point of a step: the gate voltage at which the model
/// conductance equals the step's mid level (level_before + height / 2).
inline double step_operating_voltage(const StepEvent& step, const DeviceParams& device, double gate_bias) {
  return detail::gate_for_level(step.level_before + 0.5 * step.height, device, gate_bias);
}

/// Model dG/dVg averaged (Simpson) over the gate interval the step spans,
/// from the level before it to the level after it.
inline double step_transconductance(const StepEvent& step, const DeviceParams& device, double gate_bias) {
  const double lo = detail::gate_for_level(step.level_before, device, gate_bias);
  const double hi = detail::gate_for_level(step.level_before + step.height, device, gate_bias);
  return (transconductance(lo, device) + 4.0 * transconductance(0.5 * (lo + hi), device) +
          transconductance(hi, device)) / 6.0;
}

/// Pairs each step height with the model transconductance across the step.
/// Steps whose transconductance is below min_transconductance get no implied
/// coupling and drop out of the correlation.
inline HeightCorrelation correlate_heights(const std::vector<StepEvent>& steps, const DeviceParams& device,
                                          double gate_bias, double min_transconductance = 1.0) {
  HeightCorrelation out;
  out.sufficient_events = steps.size() >= HeightCorrelation::min_steps;
  std::vector<double> heights;
  std::vector<double> slopes;
  for (const auto& step : steps) {
    const double v = step_operating_voltage(step, device, gate_bias);
    const double g = step_transconductance(step, device, gate_bias);
    out.operating_voltage.push_back(v);
    out.transconductance.push_back(g);
    if (g > min_transconductance) {
      out.implied_couplings.emplace_back(step.height / g);
      heights.push_back(step.height);
      slopes.push_back(g);
    } else {
      out.implied_couplings.emplace_back(std::nullopt);
    }
  }
  if (out.sufficient_events && heights.size() >= HeightCorrelation::min_steps) {
    out.pearson_r = pearson(heights, slopes);
  }
  return out;
}

inline HeightCorrelation correlate_heights(const std::vector<StepEvent>& steps, const Trace& exposure_trace,
                                          double min_transconductance = 1.0) {
  return correlate_heights(steps, exposure_trace.device, exposure_trace.exposure.gate_bias, min_transconductance);
}

struct SaturationSummary {
  bool saturation_detected = false;
  std::size_t step_count = 0;
  double total_rise = 0.0;  // 2e^2/h
};

/// Saturation means the trailing 10% of the exposure is flat (no accepted
/// step, slope not significant at 3 sigma) although enough photons were
/// expected over it to show (>= 3), or the whole trace never rose.
inline SaturationSummary saturation_summary(const std::vector<StepEvent>& steps, const Trace& trace,
                                            const DetectorParams& params = {}) {
  SaturationSummary out;
  out.step_count = steps.size();
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw std::domain_error("saturation summary needs an exposure trace");
  }
  const std::size_t n = trace.size();
  if (n < 4) {
    return out;
  }
  const auto& t = trace.axis;
  const auto& g = trace.conductance;
  const std::size_t first_exposed =
      static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), 0.0) - t.begin());
  const std::size_t exposed = n - first_exposed;
  const std::size_t tail = std::max<std::size_t>(2, exposed / 10);
  const std::size_t tail_begin = n - tail;
  const std::size_t head = std::max<std::size_t>(2, first_exposed > 0 ? first_exposed : tail);

  const double sigma = std::max(estimate_noise(g), params.min_noise);
  auto mean = [&](std::size_t a, std::size_t b) {
    return std::accumulate(g.begin() + static_cast<std::ptrdiff_t>(a), g.begin() + static_cast<std::ptrdiff_t>(b),
                           0.0) /
           static_cast<double>(b - a);
  };
  const double start_level = mean(0, std::min(head, n));
  const double end_level = mean(tail_begin, n);
  out.total_rise = end_level - start_level;

  // least-squares slope over the tail and its standard error
  const double tm = std::accumulate(t.begin() + static_cast<std::ptrdiff_t>(tail_begin), t.end(), 0.0) /
                    static_cast<double>(tail);
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t k = tail_begin; k < n; ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (g[k] - end_level);
  }
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  const double slope_se = stt > 0.0 ? sigma / std::sqrt(stt) : 0.0;
  const bool slope_flat = std::abs(slope) <= 3.0 * slope_se;
  const double tail_start_time = t[tail_begin];
  const bool step_in_tail =
      std::any_of(steps.begin(), steps.end(), [&](const StepEvent& s) { return s.time >= tail_start_time; });
  const bool tail_flat = slope_flat && !step_in_tail;

  const double rise_se = sigma * std::sqrt(1.0 / static_cast<double>(std::min(head, n)) + 1.0 / static_cast<double>(tail));
  const bool rose = out.total_rise > 5.0 * rise_se || !steps.empty();
  const double expected_tail_photons = trace.source.detection_rate() * (t.back() - tail_start_time);
  out.saturation_detected = tail_flat && (!rose || expected_tail_photons >= 3.0);
  return out;
}

struct AnalysisReport {
  double noise_sigma = 0.0;
  std::vector<StepEvent> steps;
  std::optional<IntervalFit> interval_fit;
  Histogram intervals;
  HeightCorrelation correlation;
  SaturationSummary saturation;
};

struct AnalysisParams {
  DetectorParams detector;
  double bin_width = 0.0;  // 0 selects mean_interval / 3
  double min_transconductance = 1.0;  // (2e^2/h)/V; flatter operating points count as plateau
};

inline AnalysisReport analyze(const Trace& trace, const AnalysisParams& params = {}) {
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw std::domain_error("analysis needs an exposure (time-axis) trace, got a gate sweep");
  }
  AnalysisReport report;
  report.noise_sigma = estimate_noise(trace.conductance);
  report.steps = detect_steps(trace, params.detector);
  if (report.steps.size() >= 3) {
    const auto intervals = successive_intervals(step_times(report.steps));
    report.interval_fit = fit_exponential(intervals);
    const double width = params.bin_width > 0.0 ? params.bin_width : report.interval_fit->mean_interval / 3.0;
    report.intervals = histogram_of_intervals(intervals, width);
  }
  report.correlation = correlate_heights(report.steps, trace, params.min_transconductance);
  report.saturation = saturation_summary(report.steps, trace, params.detector);
  return report;
}

}  // namespace qpcpd
