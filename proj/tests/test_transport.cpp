#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qpcpd/transport.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using qpcpd::DeviceParams;

namespace {

// Independent reference: saddle-point transmission written out directly.
double ref_transmission(double e, int n, double v, const DeviceParams& p) {
  const double v_off = p.threshold_voltage + (p.fermi_energy + p.pinchoff_margin - p.mode_spacing / 2) / p.lever_arm;
  const double eps = p.mode_spacing * (n + 0.5) - p.lever_arm * (v - v_off);
  return 1.0 / (1.0 + std::exp(-2.0 * M_PI * (e - eps) / p.tunnel_width));
}

double ref_zero_t(double v, const DeviceParams& p) {
  double g = 0.0;
  for (int n = 0; n < p.num_modes; ++n) g += ref_transmission(p.fermi_energy, n, v, p);
  return g;
}

// Trapezoid rule on a fine grid over E_F +- 40 kT, no renormalisation.
double ref_thermal(double v, const DeviceParams& p) {
  const double kt = 8.617333262e-2 * p.temperature;
  const int steps = 40000;
  const double a = p.fermi_energy - 40 * kt, b = p.fermi_energy + 40 * kt;
  const double h = (b - a) / steps;
  double sum = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double e = a + i * h;
    const double c = std::cosh((e - p.fermi_energy) / (2 * kt));
    const double kernel = 1.0 / (4 * kt * c * c);
    double t = 0.0;
    for (int n = 0; n < p.num_modes; ++n) t += ref_transmission(e, n, v, p);
    sum += (i == 0 || i == steps ? 0.5 : 1.0) * kernel * t;
  }
  return sum * h;
}

DeviceParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DeviceParams p;
  p.fermi_energy = 0.5 + 3.0 * u(gen);
  p.temperature = 0.1 + 10.0 * u(gen);
  p.mode_spacing = 1.0 + 6.0 * u(gen);
  p.tunnel_width = 0.2 + 2.0 * u(gen);
  p.lever_arm = 10.0 + 50.0 * u(gen);
  p.num_modes = 1 + static_cast<int>(6 * u(gen));
  p.anomaly_enabled = u(gen) < 0.5;
  p.anomaly_weight = 0.2 + 0.6 * u(gen);
  p.anomaly_split = 3.0 * u(gen);
  p.quadrature_order = 128;
  return p;
}

}  // namespace

TEST_CASE("mode transmission") {
  const DeviceParams p;
  const double v = -1.42;
  const double eps = qpcpd::subband_energy(1, v, p);
  CHECK(qpcpd::mode_transmission(eps, 1, v, p) == 0.5);
  CHECK_THAT(qpcpd::mode_transmission(eps + p.tunnel_width * std::log(3.0) / (2 * M_PI), 1, v, p),
             WithinAbs(0.75, 1e-14));
  CHECK(qpcpd::mode_transmission(1e6, 0, v, p) == 1.0);
  CHECK(qpcpd::mode_transmission(-1e6, 0, v, p) == 0.0);
  CHECK_THAT(qpcpd::mode_transmission(2.3, 2, v, p), WithinAbs(ref_transmission(2.3, 2, v, p), 1e-14));
  CHECK_THROWS_AS(qpcpd::mode_transmission(1.0, p.num_modes, v, p), std::domain_error);
  CHECK_THROWS_AS(qpcpd::mode_transmission(1.0, -1, v, p), std::domain_error);
}

TEST_CASE("mode transmission is monotone in energy") {
  const DeviceParams p;
  double prev = 0.0;
  for (double e = -5.0; e <= 10.0; e += 0.01) {
    const double t = qpcpd::mode_transmission(e, 0, -1.45, p);
    REQUIRE(t >= prev);
    REQUIRE(t <= 1.0);
    prev = t;
  }
}

TEST_CASE("fully open channel gives the mode count") {
  DeviceParams p;
  p.num_modes = 2;
  CHECK_THAT(qpcpd::conductance(5.0, p), WithinAbs(2.0, 1e-6));
}

TEST_CASE("default device is pinched off at threshold") {
  const DeviceParams p;
  CHECK(qpcpd::conductance(p.threshold_voltage, p) <= 0.02);
}

TEST_CASE("thermal conductance against an independent integration") {
  const DeviceParams p;
  for (double v = -1.52; v <= -1.24; v += 0.01) {
    INFO("v=" << v);
    CHECK_THAT(qpcpd::conductance(v, p), WithinAbs(ref_thermal(v, p), 5e-5));
  }
}

TEST_CASE("low temperature matches the zero-temperature Landauer sum") {
  DeviceParams p;
  p.temperature = 0.001;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> v(-1.6, -1.1);
  for (int i = 0; i < 100; ++i) {
    const double x = v(gen);
    INFO("v=" << x);
    CHECK_THAT(qpcpd::conductance(x, p), WithinAbs(ref_zero_t(x, p), 1e-6));
    CHECK_THAT(qpcpd::zero_temperature_conductance(x, p), WithinAbs(ref_zero_t(x, p), 1e-12));
  }
}

TEST_CASE("doubling the quadrature order changes G by less than 1e-8") {
  DeviceParams p;
  DeviceParams q = p;
  q.quadrature_order = 2 * p.quadrature_order;
  for (double v = -1.6; v <= -1.1; v += 0.0025) {
    INFO("v=" << v);
    CHECK_THAT(qpcpd::conductance(v, p), WithinAbs(qpcpd::conductance(v, q), 1e-8));
  }
}

TEST_CASE("conductance is monotone and bounded for random parameters") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 40; ++trial) {
    const DeviceParams p = random_params(gen);
    double prev = -1.0;
    for (double v = -2.0; v <= 0.0; v += 0.005) {
      const double g = qpcpd::conductance(v, p);
      INFO("trial " << trial << " v=" << v);
      REQUIRE(g >= 0.0);
      REQUIRE(g <= p.num_modes);
      REQUIRE(g >= prev - 1e-12);
      prev = g;
    }
  }
}

TEST_CASE("analytic transconductance matches central differences") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    DeviceParams p = random_params(gen);
    p.quadrature_order = 384;
    for (double v = -1.6; v <= -1.1; v += 0.05) {
      const double h = 1e-5;
      const double fd = (qpcpd::conductance(v + h, p) - qpcpd::conductance(v - h, p)) / (2 * h);
      const double g = qpcpd::transconductance(v, p);
      CHECK_THAT(g, WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(g))));
    }
  }
}

TEST_CASE("differential conductance matches its own finite difference") {
  const DeviceParams p;
  const auto curve = qpcpd::sweep(-1.6, -1.1, 501, p);
  const auto d = qpcpd::differential_conductance(curve);
  REQUIRE(d.size() == curve.size());
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double v = curve.axis[i];
    const double h = curve.axis[i + 1] - v;
    const double fd = (qpcpd::conductance(v + h, p) - qpcpd::conductance(v - h, p)) / (2 * h);
    REQUIRE_THAT(d.values[i], WithinAbs(fd, 1e-6));
  }
}

TEST_CASE("differential conductance of constant and linear curves") {
  qpcpd::ConductanceCurve c;
  c.axis = {0.0, 0.1, 0.25, 0.3, 0.7};
  c.values = {1.5, 1.5, 1.5, 1.5, 1.5};
  for (double x : qpcpd::differential_conductance(c).values) CHECK(x == 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) c.values[i] = 3.0 * c.axis[i] - 1.0;
  for (double x : qpcpd::differential_conductance(c).values) CHECK_THAT(x, WithinAbs(3.0, 1e-9));

  qpcpd::ConductanceCurve two;
  two.axis = {0.0, 1.0};
  two.values = {0.0, 1.0};
  CHECK_THROWS_AS(qpcpd::differential_conductance(two), std::domain_error);
  c.axis_kind = qpcpd::AxisKind::exposure_time;
  CHECK_THROWS_AS(qpcpd::differential_conductance(c), std::domain_error);
}

TEST_CASE("dG/dVg peaks between plateaus and dips on them") {
  const DeviceParams p;
  const auto curve = qpcpd::sweep(-1.6, -1.1, 501, p);
  const auto d = qpcpd::differential_conductance(curve);
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    const bool peak = d.values[i] > d.values[i - 1] && d.values[i] >= d.values[i + 1] && d.values[i] > 1.0;
    const bool dip = d.values[i] < d.values[i - 1] && d.values[i] <= d.values[i + 1];
    // risers: G half way between integers; plateaus: G near an integer
    const double frac = curve.values[i] - std::floor(curve.values[i]);
    if (peak) CHECK(std::abs(frac - 0.5) < 0.2);
    if (dip) CHECK(std::min(frac, 1.0 - frac) < 0.05);
  }
}

TEST_CASE("sweep examples") {
  const DeviceParams p;
  const auto span = qpcpd::sweep(-1.5, -1.3, 201, p);
  double max_g = 0.0;
  int flat_at_one = 0;
  for (double g : span.values) {
    max_g = std::max(max_g, g);
    flat_at_one += std::abs(g - 1.0) <= 0.02;
  }
  CHECK(max_g >= 1.95);
  CHECK(flat_at_one > 0);
  CHECK(span.axis.back() == -1.3);
  CHECK(span.axis_strictly_increasing());

  const auto two = qpcpd::sweep(-1.5, -1.3, 2, p);
  REQUIRE(two.size() == 2);
  for (double g : two.values) {
    CHECK(g >= 0.0);
    CHECK(g <= p.num_modes);
  }
  CHECK_THROWS_AS(qpcpd::sweep(-1.3, -1.5, 10, p), std::domain_error);
  CHECK_THROWS_AS(qpcpd::sweep(-1.5, -1.5, 10, p), std::domain_error);
  CHECK_THROWS_AS(qpcpd::sweep(-1.5, -1.3, 1, p), std::domain_error);
}

TEST_CASE("anomaly produces a shoulder near 0.7") {
  DeviceParams p;
  p.anomaly_enabled = true;
  const auto curve = qpcpd::sweep(-1.6, -1.1, 2001, p);
  const auto d = qpcpd::differential_conductance(curve);
  bool shoulder = false;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (d.values[i] < d.values[i - 1] && d.values[i] <= d.values[i + 1] && curve.values[i] >= 0.6 &&
        curve.values[i] <= 0.8) {
      shoulder = true;
    }
  }
  CHECK(shoulder);
}

TEST_CASE("inversion returns the gate voltage of a given conductance") {
  const DeviceParams p;
  for (double target : {0.1, 0.5, 1.3, 1.9}) {
    const double v = qpcpd::gate_voltage_for_conductance(target, -1.6, -1.1, p);
    CHECK_THAT(qpcpd::conductance(v, p), WithinAbs(target, 1e-9));
  }
  CHECK(qpcpd::gate_voltage_for_conductance(-1.0, -1.6, -1.1, p) == -1.6);
  CHECK(qpcpd::gate_voltage_for_conductance(99.0, -1.6, -1.1, p) == -1.1);
}

TEST_CASE("conductance quantum in siemens") {
  CHECK_THAT(qpcpd::to_siemens(1.0), WithinRel(7.748e-5, 1e-3));
  CHECK_THAT(1.0 / qpcpd::to_siemens(1.0), WithinRel(12906.0, 1e-4));
}

TEST_CASE("invalid device parameters are rejected") {
  DeviceParams p;
  p.temperature = 0.0;
  CHECK_THROWS_AS(qpcpd::validate(p), std::domain_error);
  p = {};
  p.num_modes = 0;
  CHECK_THROWS_AS(qpcpd::validate(p), std::domain_error);
  p = {};
  p.tunnel_width = -1;
  CHECK_THROWS_AS(qpcpd::sweep(-1.5, -1.3, 5, p), std::domain_error);
}
