// qpcpd: simulate and analyse a point-contact single-photon detector.
//
//   qpcpd sweep             gate sweep and dG/dVg
//   qpcpd expose            photo-exposure trace with truth events
//   qpcpd analyze TRACE     step detection and photon statistics report
//   qpcpd reproduce-figures plot-ready data for the three figure analogues
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "qpcpd/commands.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> noise;
  std::optional<double> wavelength;
  std::optional<double> duration;
  std::optional<double> threshold;
  std::optional<int> window;
  std::optional<double> v_start;
  std::optional<double> v_end;
  std::optional<int> points;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value configuration file");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--noise", o.noise, "conductance noise sigma (2e^2/h)");
  cmd->add_option("--wavelength", o.wavelength, "photon wavelength (nm)");
  cmd->add_option("--duration", o.duration, "exposure duration (s)");
  cmd->add_option("--threshold", o.threshold, "detector threshold (noise sigmas)");
  cmd->add_option("--window", o.window, "detector window (samples)");
}

qpcpd::RunConfig resolve(const Overrides& o) {
  qpcpd::RunConfig c = o.config_path.empty() ? qpcpd::RunConfig{} : qpcpd::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.noise) {
    c.exposure.noise_sigma = *o.noise;
    c.sweep.noise_sigma = *o.noise;
  }
  if (o.wavelength) c.source.wavelength = *o.wavelength;
  if (o.duration) c.exposure.duration = *o.duration;
  if (o.threshold) c.analysis.threshold = *o.threshold;
  if (o.window) c.analysis.window = *o.window;
  if (o.v_start) c.sweep.v_start = *o.v_start;
  if (o.v_end) c.sweep.v_end = *o.v_end;
  if (o.points) c.sweep.n_points = *o.points;
  qpcpd::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum point contact single-photon detector simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::string trace_path;
  auto* sweep = app.add_subcommand("sweep", "gate sweep and differential conductance");
  add_common_options(sweep, o);
  sweep->add_option("--v-start", o.v_start, "sweep start (V)");
  sweep->add_option("--v-end", o.v_end, "sweep end (V)");
  sweep->add_option("--points", o.points, "number of sweep points");
  auto* expose = app.add_subcommand("expose", "photo-exposure trace");
  add_common_options(expose, o);
  auto* analyze = app.add_subcommand("analyze", "analyse an exposure trace");
  add_common_options(analyze, o);
  analyze->add_option("trace", trace_path, "trace file written by expose")->required();
  auto* figures = app.add_subcommand("reproduce-figures", "plot-ready figure data");
  add_common_options(figures, o);
  figures->add_option("--v-start", o.v_start, "sweep start (V)");
  figures->add_option("--v-end", o.v_end, "sweep end (V)");
  figures->add_option("--points", o.points, "number of sweep points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const qpcpd::RunConfig config = resolve(o);
    std::vector<std::filesystem::path> written;
    if (*sweep) {
      written = qpcpd::cmd_sweep(config);
    } else if (*expose) {
      written = qpcpd::cmd_expose(config);
    } else if (*analyze) {
      written = qpcpd::cmd_analyze(config, trace_path);
    } else if (*figures) {
      written = qpcpd::cmd_reproduce_figures(config);
    }
    for (const auto& p : written) std::cout << p.string() << '\n';
    return 0;
  } catch (const qpcpd::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}
