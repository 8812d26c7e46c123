#include <catch_amalgamated.hpp>

#include <cmath>

#include "qpcpd/charge.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using qpcpd::AbsorptionLayer;
using qpcpd::TrapConfig;

TEST_CASE("default ensemble size and total coupling") {
  const TrapConfig c;
  CHECK(qpcpd::dopant_trap_count(c) == 99);
  CHECK_THAT(qpcpd::mean_dopant_coupling(c), WithinRel(0.2 / 99, 1e-12));
  const auto ens = qpcpd::build_ensemble(c, 1);
  CHECK(ens.dopant_count() == 99);
  CHECK(ens.traps.size() == 99 + 2000);
  double sum = 0.0;
  for (const auto& t : ens.traps) {
    CHECK(t.coupling > 0.0);
    CHECK_FALSE(t.occupied);
    if (t.kind != qpcpd::TrapKind::buffer_micro) sum += t.coupling;
  }
  CHECK(std::abs(sum - 0.2) <= 0.2 * 0.2);
  CHECK(sum == ens.total_dopant_coupling());
}

TEST_CASE("mean coupling over many seeds converges to the configured mean") {
  const TrapConfig c;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto ens = qpcpd::build_ensemble(c, seed);
    sum += ens.total_dopant_coupling();
    n += ens.dopant_count();
  }
  // 19800 exponential draws: relative standard error ~0.7%
  CHECK_THAT(sum / static_cast<double>(n), WithinRel(qpcpd::mean_dopant_coupling(c), 0.03));
}

TEST_CASE("constant and uniform coupling distributions") {
  TrapConfig c;
  c.coupling_distribution = qpcpd::CouplingDistribution::constant;
  for (const auto& t : qpcpd::build_ensemble(c, 3).traps) {
    if (qpcpd::is_dopant(t.kind)) CHECK(t.coupling == qpcpd::mean_dopant_coupling(c));
  }
  c.coupling_distribution = qpcpd::CouplingDistribution::uniform;
  for (const auto& t : qpcpd::build_ensemble(c, 3).traps) {
    if (qpcpd::is_dopant(t.kind)) {
      CHECK(t.coupling > 0.0);
      CHECK(t.coupling <= 2 * qpcpd::mean_dopant_coupling(c));
    }
  }
  CHECK(qpcpd::parse_coupling_distribution("uniform") == qpcpd::CouplingDistribution::uniform);
  CHECK_THROWS_AS(qpcpd::parse_coupling_distribution("gamma"), std::invalid_argument);
}

TEST_CASE("buffer couplings never exceed their scale") {
  const TrapConfig c;
  for (const auto& t : qpcpd::build_ensemble(c, 9).traps) {
    if (t.kind == qpcpd::TrapKind::buffer_micro) {
      CHECK(t.coupling <= c.buffer_coupling_scale);
      CHECK(t.coupling > 0.0);
    }
  }
}

TEST_CASE("single-charge gate shift e/C") {
  const TrapConfig c;
  CHECK_THAT(qpcpd::single_charge_gate_shift(c), WithinAbs(1.6e-3, 0.01e-3));
  // same order of magnitude as the mean coupling
  const double ratio = qpcpd::mean_dopant_coupling(c) / qpcpd::single_charge_gate_shift(c);
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("ensembles are deterministic in the seed") {
  const TrapConfig c;
  CHECK(qpcpd::build_ensemble(c, 5) == qpcpd::build_ensemble(c, 5));
  CHECK_FALSE(qpcpd::build_ensemble(c, 5) == qpcpd::build_ensemble(c, 6));
}

TEST_CASE("absorption layer by wavelength") {
  CHECK(qpcpd::absorption_target(550) == AbsorptionLayer::algaas);
  CHECK(qpcpd::absorption_target(650) == AbsorptionLayer::algaas);
  CHECK(qpcpd::absorption_target(700) == AbsorptionLayer::gaas_buffer);
  CHECK(qpcpd::absorption_target(870) == AbsorptionLayer::gaas_buffer);
  CHECK(qpcpd::absorption_target(1000) == AbsorptionLayer::none);
  CHECK_THROWS_AS(qpcpd::absorption_target(0), std::domain_error);
  CHECK_THROWS_AS(qpcpd::absorption_target(-5), std::domain_error);
}

TEST_CASE("capture fills one eligible trap at a time") {
  const TrapConfig c;
  auto ens = qpcpd::build_ensemble(c, 1);
  qpcpd::Rng rng(17);
  const auto first = qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng);
  REQUIRE(first);
  CHECK(qpcpd::is_dopant(ens.traps[*first].kind));
  CHECK(ens.occupied_count() == 1);
  CHECK(qpcpd::effective_gate_shift(ens) == ens.traps[*first].coupling);

  const auto buffer = qpcpd::capture_photon(ens, AbsorptionLayer::gaas_buffer, rng);
  REQUIRE(buffer);
  CHECK(ens.traps[*buffer].kind == qpcpd::TrapKind::buffer_micro);
  CHECK_THROWS_AS(qpcpd::capture_photon(ens, AbsorptionLayer::none, rng), std::domain_error);
}

TEST_CASE("99 captures fill every dopant trap, the next one is empty") {
  const TrapConfig c;
  auto ens = qpcpd::build_ensemble(c, 1);
  qpcpd::Rng rng(1);
  double previous = 0.0;
  for (int i = 0; i < 99; ++i) {
    REQUIRE(qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng));
    const double shift = qpcpd::effective_gate_shift(ens);
    CHECK(shift > previous);
    previous = shift;
  }
  CHECK_FALSE(qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng));
  double expected = 0.0;
  for (const auto& t : ens.traps) {
    if (t.kind != qpcpd::TrapKind::buffer_micro) expected += t.coupling;
  }
  CHECK(qpcpd::effective_gate_shift(ens) == expected);
  CHECK_THAT(qpcpd::effective_gate_shift(ens), WithinAbs(0.2, 0.04));
}

TEST_CASE("buffer traps only join at short wavelength when enabled") {
  TrapConfig c;
  c.buffer_trap_count = 5;
  auto ens = qpcpd::build_ensemble(c, 2);
  qpcpd::Rng rng(3);
  for (int i = 0; i < 99; ++i) qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng);
  CHECK_FALSE(qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng));
  const auto extra = qpcpd::capture_photon(ens, AbsorptionLayer::algaas, rng, true);
  REQUIRE(extra);
  CHECK(ens.traps[*extra].kind == qpcpd::TrapKind::buffer_micro);
}

TEST_CASE("effective gate shift of hand-built ensembles") {
  qpcpd::TrapEnsemble ens;
  CHECK(qpcpd::effective_gate_shift(ens) == 0.0);
  ens.traps.push_back({qpcpd::TrapKind::dx_center, 2.9e-3, true});
  ens.traps.push_back({qpcpd::TrapKind::neutral_donor, 1.0e-3, false});
  CHECK(qpcpd::effective_gate_shift(ens) == 2.9e-3);
}

TEST_CASE("same seed gives the same capture sequence") {
  const TrapConfig c;
  auto a = qpcpd::build_ensemble(c, 4);
  auto b = a;
  qpcpd::Rng ra(8), rb(8);
  for (int i = 0; i < 50; ++i) {
    CHECK(qpcpd::capture_photon(a, AbsorptionLayer::algaas, ra) == qpcpd::capture_photon(b, AbsorptionLayer::algaas, rb));
  }
}

TEST_CASE("invalid trap and source configuration") {
  TrapConfig c;
  c.channel_capacitance = 0;
  CHECK_THROWS_AS(qpcpd::validate(c), std::domain_error);
  c = {};
  c.active_area = 1e-14;  // rounds to zero traps
  CHECK_THROWS_AS(qpcpd::build_ensemble(c, 1), std::domain_error);
  qpcpd::PhotonSource s;
  s.quantum_efficiency = 1.5;
  CHECK_THROWS_AS(qpcpd::validate(s), std::domain_error);
  CHECK_THAT(qpcpd::PhotonSource{}.detection_rate(), WithinAbs(0.03, 1e-15));
}
