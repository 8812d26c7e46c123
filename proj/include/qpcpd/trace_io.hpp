#pragma once

// Delimited text files.
//
// Trace:
//   # qpcpd-trace v1
//   # axis=time | gate_voltage
//   # <key>=<value>            full configuration snapshot
//   time_s,conductance_G0      (gate_V,conductance_G0 for sweeps)
//   <rows>
//   # events
//   time_s,coupling_V,gate_shift_V
//   <rows>
//   # photons
//   time_s
//   <rows>
//
// Report: "# qpcpd-report v1", then [steps], [intervals], [fit],
// [correlation], [saturation] sections, each a CSV header plus rows.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qpcpd/analyze.hpp"
#include "qpcpd/config.hpp"
#include "qpcpd/simulate.hpp"

namespace qpcpd {

inline constexpr std::string_view trace_magic = "# qpcpd-trace v1";
inline constexpr std::string_view report_magic = "# qpcpd-report v1";

/// Writes via a temporary file and rename, so readers never see a partial
/// file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out) {
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

namespace detail {

inline void append_row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_cell(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  try {
    parse_value(cell, v, "line " + std::to_string(line_no));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("malformed trace row: ") + e.what());
  }
  return v;
}

}  // namespace detail

/// Header keys of a trace: typed snapshot first, extras after.
inline KeyValues trace_metadata(const Trace& trace) {
  KeyValues kv;
  kv.emplace_back("axis", to_string(trace.axis_kind));
  kv.emplace_back("initial_gate_shift", format_value(trace.initial_gate_shift));
  detail::emit_section(kv, "device.", trace.device);
  detail::emit_section(kv, "source.", trace.source);
  detail::emit_section(kv, "exposure.", trace.exposure, true);
  for (const auto& entry : trace.extra) kv.push_back(entry);
  return kv;
}

inline std::string serialize_trace(const Trace& trace) {
  std::string out;
  out += trace_magic;
  out += '\n';
  for (const auto& [key, value] : trace_metadata(trace)) {
    out += "# " + key + "=" + value + "\n";
  }
  out += trace.axis_kind == AxisKind::exposure_time ? "time_s,conductance_G0\n" : "gate_V,conductance_G0\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    detail::append_row(out, {format_value(trace.axis[k]), format_value(trace.conductance[k])});
  }
  out += "# events\ntime_s,coupling_V,gate_shift_V\n";
  for (const auto& e : trace.truth_events) {
    detail::append_row(out, {format_value(e.time), format_value(e.coupling), format_value(e.gate_shift)});
  }
  out += "# photons\ntime_s\n";
  for (const double t : trace.photon_times) {
    out += format_value(t);
    out += '\n';
  }
  return out;
}

inline Trace parse_trace(std::string_view text) {
  enum class Part { header, samples, events, photons };
  Trace trace;
  Part part = Part::header;
  bool expect_columns = false;
  std::size_t line_no = 0;
  bool saw_magic = false;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    const std::string_view raw = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (!saw_magic) {
      if (line != trace_magic) {
        throw ConfigError("not a trace file (missing '" + std::string(trace_magic) + "')");
      }
      saw_magic = true;
      continue;
    }
    if (line == "# events") {
      part = Part::events;
      expect_columns = true;
      continue;
    }
    if (line == "# photons") {
      part = Part::photons;
      expect_columns = true;
      continue;
    }
    if (part == Part::header && line.front() == '#') {
      const std::string_view entry = detail::trim(line.substr(1));
      const std::size_t eq = entry.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = entry.substr(0, eq);
      const std::string_view value = entry.substr(eq + 1);
      if (key == "axis") {
        if (value == "time") {
          trace.axis_kind = AxisKind::exposure_time;
        } else if (value == "gate_voltage") {
          trace.axis_kind = AxisKind::gate_voltage;
        } else {
          throw ConfigError("unknown axis kind '" + std::string(value) + "'");
        }
      } else if (key == "initial_gate_shift") {
        parse_value(value, trace.initial_gate_shift, key);
      } else if (!detail::assign_in_section(key, value, "device.", trace.device) &&
                 !detail::assign_in_section(key, value, "source.", trace.source) &&
                 !detail::assign_in_section(key, value, "exposure.", trace.exposure, true)) {
        trace.extra.emplace_back(std::string(key), std::string(value));
      }
      continue;
    }
    if (part == Part::header) {
      part = Part::samples;  // this line is the column header
      continue;
    }
    if (expect_columns) {
      expect_columns = false;
      continue;
    }
    const auto cells = detail::split_csv(line);
    switch (part) {
      case Part::samples:
        if (cells.size() != 2) throw ConfigError("line " + std::to_string(line_no) + ": expected 2 columns");
        trace.axis.push_back(detail::parse_cell(cells[0], line_no));
        trace.conductance.push_back(detail::parse_cell(cells[1], line_no));
        break;
      case Part::events:
        if (cells.size() != 3) throw ConfigError("line " + std::to_string(line_no) + ": expected 3 columns");
        trace.truth_events.push_back({detail::parse_cell(cells[0], line_no), detail::parse_cell(cells[1], line_no),
                                      detail::parse_cell(cells[2], line_no)});
        break;
      case Part::photons:
        if (cells.size() != 1) throw ConfigError("line " + std::to_string(line_no) + ": expected 1 column");
        trace.photon_times.push_back(detail::parse_cell(cells[0], line_no));
        break;
      case Part::header:
        break;
    }
  }
  if (!saw_magic) {
    throw ConfigError("empty trace file");
  }
  return trace;
}

inline void write_trace(const std::filesystem::path& path, const Trace& trace) {
  write_file_atomic(path, serialize_trace(trace));
}

inline Trace read_trace(const std::filesystem::path& path) { return parse_trace(read_text_file(path.string())); }

/// Two-column curve file with a comment header.
inline std::string serialize_curve(const ConductanceCurve& curve, std::string_view axis_column,
                                   std::string_view value_column) {
  std::string out;
  out += std::string(axis_column) + "," + std::string(value_column) + "\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    detail::append_row(out, {format_value(curve.axis[i]), format_value(curve.values[i])});
  }
  return out;
}

inline std::string serialize_report(const AnalysisReport& report) {
  std::string out;
  out += report_magic;
  out += '\n';
  out += "# noise_sigma_G0=" + format_value(report.noise_sigma) + "\n";

  out += "[steps]\n";
  out += "time_s,height_G0,confidence,level_before_G0,operating_gate_V,transconductance_G0_per_V,implied_coupling_V\n";
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& s = report.steps[i];
    const auto& implied = report.correlation.implied_couplings[i];
    detail::append_row(out, {format_value(s.time), format_value(s.height), format_value(s.confidence),
                             format_value(s.level_before), format_value(report.correlation.operating_voltage[i]),
                             format_value(report.correlation.transconductance[i]),
                             implied ? format_value(*implied) : std::string("undefined")});
  }

  out += "[intervals]\n";
  out += "bin_start_s,count\n";
  for (std::size_t k = 0; k < report.intervals.count.size(); ++k) {
    detail::append_row(out, {format_value(report.intervals.bin_start[k]), format_value(report.intervals.count[k])});
  }

  out += "[fit]\n";
  out += "event_count,mean_interval_s,rate_per_s,ks_statistic\n";
  if (report.interval_fit) {
    const auto& f = *report.interval_fit;
    detail::append_row(out, {format_value(f.event_count), format_value(f.mean_interval), format_value(f.rate),
                             format_value(f.ks_statistic)});
  } else {
    out += "insufficient events\n";
  }

  out += "[correlation]\n";
  out += "pearson_r,mean_implied_coupling_V,defined_count\n";
  if (!report.correlation.sufficient_events) {
    out += "insufficient events\n";
  } else {
    const auto r = report.correlation.pearson_r;
    const auto mean = report.correlation.mean_implied_coupling();
    detail::append_row(out, {r ? format_value(*r) : std::string("undefined"),
                             mean ? format_value(*mean) : std::string("undefined"),
                             format_value(report.correlation.defined_count())});
  }

  out += "[saturation]\n";
  out += "saturation_detected,step_count,total_rise_G0\n";
  detail::append_row(out, {format_value(report.saturation.saturation_detected),
                           format_value(report.saturation.step_count), format_value(report.saturation.total_rise)});
  return out;
}

/// Splits a "[section]" file into header + rows per section. Lines before the
/// first section are returned under "".
inline std::map<std::string, std::vector<std::string>> read_sections(std::string_view text) {
  std::map<std::string, std::vector<std::string>> sections;
  std::string current;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    const std::string_view line = detail::trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      current = std::string(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    sections[current].emplace_back(line);
  }
  return sections;
}

}  // namespace qpcpd
