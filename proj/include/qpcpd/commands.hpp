#pragma once

// The four experiment commands behind the qpcpd CLI. Each writes its files
// under config.output_dir and returns their paths. Bad configuration raises
// ConfigError, file problems IoError.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "qpcpd/analyze.hpp"
#include "qpcpd/charge.hpp"
#include "qpcpd/config.hpp"
#include "qpcpd/simulate.hpp"
#include "qpcpd/trace_io.hpp"
#include "qpcpd/transport.hpp"

namespace qpcpd {

namespace detail {

inline std::filesystem::path output_path(const RunConfig& c, const char* name) {
  return std::filesystem::path(c.output_dir) / name;
}

/// Configuration keys outside the typed trace snapshot.
inline KeyValues trace_extras(const RunConfig& c) {
  KeyValues kv;
  kv.emplace_back("seed", format_value(c.seed));
  emit_section(kv, "traps.", c.traps);
  return kv;
}

template <typename F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

inline Trace run_exposure(const RunConfig& config) {
  validate(config);
  return detail::as_config_error([&] {
    TrapEnsemble ensemble = build_ensemble(config.traps, ensemble_seed(config));
    Trace trace = simulate_exposure(config.device, ensemble, config.source, resolved_exposure(config),
                                    config.traps.buffer_at_short_wavelength);
    trace.extra = detail::trace_extras(config);
    return trace;
  });
}

inline Trace run_sweep(const RunConfig& config) {
  validate(config);
  return detail::as_config_error([&] {
    Trace trace = simulate_gate_sweep(config.device, config.sweep.v_start, config.sweep.v_end,
                                      static_cast<std::size_t>(config.sweep.n_points), config.sweep.noise_sigma,
                                      sweep_seed(config));
    trace.extra = detail::trace_extras(config);
    return trace;
  });
}

/// sweep.csv (trace format, gate axis) and sweep_dgdv.csv. The derivative
/// file needs at least 3 points and is skipped below that.
inline std::vector<std::filesystem::path> cmd_sweep(const RunConfig& config) {
  const Trace trace = run_sweep(config);
  std::vector<std::filesystem::path> written;
  const auto trace_path = detail::output_path(config, "sweep.csv");
  write_trace(trace_path, trace);
  written.push_back(trace_path);
  if (trace.size() >= 3) {
    const ConductanceCurve dgdv = differential_conductance(trace.as_curve());
    const auto path = detail::output_path(config, "sweep_dgdv.csv");
    write_file_atomic(path, "# differential conductance of sweep.csv\n" +
                                serialize_curve(dgdv, "gate_V", "dGdV_G0_per_V"));
    written.push_back(path);
  }
  return written;
}

/// exposure.csv: samples, truth events and absorbed photons.
inline std::vector<std::filesystem::path> cmd_expose(const RunConfig& config) {
  const Trace trace = run_exposure(config);
  const auto path = detail::output_path(config, "exposure.csv");
  write_trace(path, trace);
  return {path};
}

inline AnalysisReport analyze_trace_file(const RunConfig& config, const std::filesystem::path& trace_path) {
  validate(config);
  const Trace trace = read_trace(trace_path);
  if (trace.axis_kind != AxisKind::exposure_time) {
    throw ConfigError("wrong axis kind: " + trace_path.string() + " is a gate sweep, analysis needs an exposure");
  }
  return detail::as_config_error([&] { return analyze(trace, config.analysis.params()); });
}

/// report.txt for an exposure trace.
inline std::vector<std::filesystem::path> cmd_analyze(const RunConfig& config,
                                                      const std::filesystem::path& trace_path) {
  const AnalysisReport report = analyze_trace_file(config, trace_path);
  const auto path = detail::output_path(config, "report.txt");
  write_file_atomic(path, serialize_report(report));
  return {path};
}

/// Interval statistics of a photon-counting run with the configured source.
struct IntervalFigure {
  double configured_mean_interval = 0.0;
  std::vector<double> intervals;
  IntervalFit fit;
  Histogram histogram;
};

inline IntervalFigure run_interval_figure(const RunConfig& config) {
  validate(config);
  const double rate = config.source.detection_rate();
  if (!(rate > 0.0)) {
    throw ConfigError("interval figure needs a positive detection rate (incident_rate * quantum_efficiency)");
  }
  if (absorption_target(config.source.wavelength) == AbsorptionLayer::none) {
    throw ConfigError("interval figure needs an absorbed wavelength");
  }
  IntervalFigure fig;
  fig.configured_mean_interval = 1.0 / rate;
  Rng rng(interval_figure_seed(config));
  const auto times = poisson_arrivals_count(rate, static_cast<std::size_t>(config.figures.interval_events), rng);
  fig.intervals = successive_intervals(times);
  fig.fit = fit_exponential(fig.intervals);
  const double width = config.analysis.bin_width > 0.0 ? config.analysis.bin_width : fig.fit.mean_interval / 3.0;
  fig.histogram = histogram_of_intervals(fig.intervals, width);
  return fig;
}

/// fig2a.csv (gate sweep over exposure), fig2b.csv (dG/dVg and step
/// heights), fig3.csv (interval histogram and exponential fit).
inline std::vector<std::filesystem::path> cmd_reproduce_figures(const RunConfig& config) {
  const Trace sweep_trace = run_sweep(config);
  const Trace exposure = run_exposure(config);
  const ConductanceCurve remapped = exposure_to_gate_equivalence(exposure);
  const auto shifts = gate_shift_at_samples(exposure);

  std::string fig2a = "# gate-only sweep and photo-exposure on a common effective gate axis\n";
  fig2a += "[gate_only]\n" + serialize_curve(sweep_trace.as_curve(), "gate_V", "conductance_G0");
  fig2a += "[exposure]\ntime_s,effective_gate_V,conductance_G0\n";
  for (std::size_t k = 0; k < exposure.size(); ++k) {
    detail::append_row(fig2a, {format_value(exposure.axis[k]),
                               format_value(exposure.exposure.gate_bias + shifts[k]),
                               format_value(exposure.conductance[k])});
  }
  fig2a += "[exposure_remapped]\n" + serialize_curve(remapped, "effective_gate_V", "conductance_G0");

  const AnalysisReport report =
      detail::as_config_error([&] { return analyze(exposure, config.analysis.params()); });
  std::string fig2b = "# differential conductance and single-photon step heights\n";
  if (sweep_trace.size() >= 3) {
    fig2b += "[transconductance]\n" +
             serialize_curve(differential_conductance(sweep_trace.as_curve()), "gate_V", "dGdV_G0_per_V");
  }
  fig2b += "[steps]\ntime_s,height_G0,operating_gate_V,transconductance_G0_per_V,implied_coupling_V\n";
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& implied = report.correlation.implied_couplings[i];
    detail::append_row(fig2b, {format_value(report.steps[i].time), format_value(report.steps[i].height),
                               format_value(report.correlation.operating_voltage[i]),
                               format_value(report.correlation.transconductance[i]),
                               implied ? format_value(*implied) : std::string("undefined")});
  }

  const IntervalFigure intervals = run_interval_figure(config);
  std::string fig3 = "# intervals between photon detection events, exponential maximum-likelihood fit\n";
  fig3 += "[histogram]\nbin_start_s,count,expected_count\n";
  const double n = static_cast<double>(intervals.intervals.size());
  const double w = intervals.histogram.bin_width;
  for (std::size_t k = 0; k < intervals.histogram.count.size(); ++k) {
    const double a = intervals.histogram.bin_start[k];
    const double expected = n * (std::exp(-intervals.fit.rate * a) - std::exp(-intervals.fit.rate * (a + w)));
    detail::append_row(fig3, {format_value(a), format_value(intervals.histogram.count[k]), format_value(expected)});
  }
  fig3 += "[fit]\nevent_count,mean_interval_s,rate_per_s,ks_statistic,configured_mean_interval_s\n";
  detail::append_row(fig3, {format_value(intervals.fit.event_count), format_value(intervals.fit.mean_interval),
                            format_value(intervals.fit.rate), format_value(intervals.fit.ks_statistic),
                            format_value(intervals.configured_mean_interval)});

  const auto p2a = detail::output_path(config, "fig2a.csv");
  const auto p2b = detail::output_path(config, "fig2b.csv");
  const auto p3 = detail::output_path(config, "fig3.csv");
  write_file_atomic(p2a, fig2a);
  write_file_atomic(p2b, fig2b);
  write_file_atomic(p3, fig3);
  return {p2a, p2b, p3};
}

}  // namespace qpcpd
