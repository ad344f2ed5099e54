#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "respaudit/dataset.hpp"
#include "respaudit/identification.hpp"
#include "respaudit/rng.hpp"

using namespace respaudit;
using Catch::Matchers::ContainsSubstring;

namespace {

// Two units, one group: (tau, mu0, mu1, z) frozen so every bound below is
// hand-checkable. r0 = r1 = 1/2, tau0 = 0.2, tau1 = 0.6.
std::vector<GroupObservation> two_units() {
  return {{0.2, 0.3, 0.5, false, 1.0}, {0.6, 0.2, 0.8, true, 1.0}};
}

// tau bounded away from zero keeps both rate denominators clear of the
// degeneracy guard for any assignment
std::vector<GroupObservation> random_group(Rng& rng, std::size_t n) {
  std::vector<GroupObservation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    GroupObservation o;
    o.mu0 = rng.uniform(0.1, 0.35);
    o.tau = rng.uniform(0.05, 0.6);
    o.mu1 = o.mu0 + o.tau;
    o.treated = rng.bernoulli(0.5);
    o.weight = 1.0;
    obs.push_back(o);
  }
  obs[0].treated = true;  // both cells populated
  obs[1].treated = false;
  return obs;
}

}  // namespace

TEST_CASE("group statistics on the two-unit example") {
  const auto obs = two_units();
  const auto gs = group_stats(obs, 0.1, "g");
  REQUIRE(gs.r1 == 0.5);
  REQUIRE(gs.r0 == 0.5);
  REQUIRE(gs.tau1 == 0.6);
  REQUIRE(gs.tau0 == 0.2);
  REQUIRE(gs.clip1 == 0.1);
  REQUIRE(gs.clip0 == 0.1);
  REQUIRE(gs.mean_tau() == Catch::Approx(0.4).margin(1e-15));

  const auto gs0 = group_stats(obs, 0.0, "g");
  REQUIRE(gs0.clip0 == 0.0);
  REQUIRE(gs0.clip1 == 0.0);

  const auto gs1 = group_stats(obs, 1.0, "g");
  REQUIRE(gs1.clip1 == Catch::Approx(0.2).margin(1e-15));
  REQUIRE(gs1.clip0 == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("point rates on the two-unit example") {
  const auto pr = point_rates(group_stats(two_units(), 0.0, "g"));
  REQUIRE(pr.tpr == Catch::Approx(0.75).margin(1e-15));
  REQUIRE(pr.tnr == Catch::Approx(2.0 / 3.0).margin(1e-15));
}

TEST_CASE("degenerate policies hit the boundary rates") {
  auto all_treated = two_units();
  for (auto& o : all_treated) o.treated = true;
  const auto pr1 = point_rates(group_stats(all_treated, 0.0, "g"));
  REQUIRE(pr1.tpr == 1.0);
  REQUIRE(pr1.tnr == 0.0);

  auto none_treated = two_units();
  for (auto& o : none_treated) o.treated = false;
  const auto pr0 = point_rates(group_stats(none_treated, 0.0, "g"));
  REQUIRE(pr0.tpr == 0.0);
  REQUIRE(pr0.tnr == 1.0);
}

TEST_CASE("rho at eta = 0 equals the point rates bitwise") {
  const auto obs = two_units();
  const std::vector<double> eta = {0.0, 0.0};
  const auto r = rho(obs, eta, "g");
  const auto pr = point_rates(group_stats(obs, 0.0, "g"));
  REQUIRE(r.tpr == pr.tpr);
  REQUIRE(r.tnr == pr.tnr);
}

TEST_CASE("rho tilts with one-sided slack exactly as the closed forms") {
  const auto obs = two_units();
  const auto up = rho(obs, std::vector<double>{0.0, 0.1}, "g");
  REQUIRE(up.tpr == Catch::Approx(0.35 / 0.45).margin(1e-15));
  REQUIRE(up.tnr == Catch::Approx(0.40 / 0.55).margin(1e-15));

  const auto dn = rho(obs, std::vector<double>{0.1, 0.0}, "g");
  REQUIRE(dn.tpr == Catch::Approx(0.30 / 0.45).margin(1e-15));
  REQUIRE(dn.tnr == Catch::Approx(0.35 / 0.55).margin(1e-15));
}

TEST_CASE("rho rejects slack above the per-unit cap") {
  const auto obs = two_units();
  REQUIRE_THROWS_AS(rho(obs, std::vector<double>{0.0, 0.21}, "g"), EtaOutOfRangeError);
  REQUIRE_THROWS_AS(rho(obs, std::vector<double>{-0.01, 0.0}, "g"), EtaOutOfRangeError);
  REQUIRE_THROWS_AS(rho(obs, std::vector<double>{0.0}, "g"), ValidationError);
}

TEST_CASE("interval bounds on the two-unit example") {
  const auto rb = bounds(group_stats(two_units(), 0.1, "g"));
  REQUIRE(rb.tpr.lower == Catch::Approx(0.30 / 0.45).margin(1e-15));
  REQUIRE(rb.tpr.upper == Catch::Approx(0.35 / 0.45).margin(1e-15));
  REQUIRE(rb.tnr.lower == Catch::Approx(0.35 / 0.55).margin(1e-15));
  REQUIRE(rb.tnr.upper == Catch::Approx(0.40 / 0.55).margin(1e-15));
  REQUIRE(rb.extremes_jointly_achievable);

  const auto rb1 = bounds(group_stats(two_units(), 1.0, "g"));
  REQUIRE(rb1.tpr.lower == Catch::Approx(0.30 / 0.55).margin(1e-15));
  REQUIRE(rb1.tpr.upper == Catch::Approx(0.40 / 0.50).margin(1e-15));
}

TEST_CASE("bang-bang slack reproduces the interval endpoints") {
  const auto obs = two_units();
  for (double B : {0.05, 0.1, 0.2, 1.0}) {
    const auto gs = group_stats(obs, B, "g");
    const auto rb = bounds(gs);
    std::vector<double> up_eta, dn_eta;
    for (const auto& o : obs) {
      const double cap = clip_value(B, o.mu0, o.mu1);
      up_eta.push_back(o.treated ? cap : 0.0);
      dn_eta.push_back(o.treated ? 0.0 : cap);
    }
    const auto up = rho(obs, up_eta, "g");
    const auto dn = rho(obs, dn_eta, "g");
    REQUIRE(up.tpr == Catch::Approx(rb.tpr.upper).margin(1e-12));
    REQUIRE(up.tnr == Catch::Approx(rb.tnr.upper).margin(1e-12));
    REQUIRE(dn.tpr == Catch::Approx(rb.tpr.lower).margin(1e-12));
    REQUIRE(dn.tnr == Catch::Approx(rb.tnr.lower).margin(1e-12));
  }
}

TEST_CASE("intervals collapse bitwise to the point rates at B = 0") {
  Rng rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const auto obs = random_group(rng, 12);
    const auto gs = group_stats(obs, 0.0, "g");
    const auto pr = point_rates(gs);
    const auto rb = bounds(gs);
    REQUIRE(rb.tpr.lower == pr.tpr);
    REQUIRE(rb.tpr.upper == pr.tpr);
    REQUIRE(rb.tnr.lower == pr.tnr);
    REQUIRE(rb.tnr.upper == pr.tnr);
  }
}

TEST_CASE("intervals are nested in the budget") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const auto obs = random_group(rng, 10);
    double prev_tpr_lo = 0.0, prev_tpr_hi = 1.0, prev_tnr_lo = 0.0, prev_tnr_hi = 1.0;
    bool first = true;
    for (double B : {0.0, 0.05, 0.1, 0.3, 1.0}) {
      const auto rb = bounds(group_stats(obs, B, "g"));
      if (!first) {
        REQUIRE(rb.tpr.lower <= prev_tpr_lo + 1e-12);
        REQUIRE(rb.tpr.upper >= prev_tpr_hi - 1e-12);
        REQUIRE(rb.tnr.lower <= prev_tnr_lo + 1e-12);
        REQUIRE(rb.tnr.upper >= prev_tnr_hi - 1e-12);
      }
      first = false;
      prev_tpr_lo = rb.tpr.lower;
      prev_tpr_hi = rb.tpr.upper;
      prev_tnr_lo = rb.tnr.lower;
      prev_tnr_hi = rb.tnr.upper;
    }
  }
}

TEST_CASE("budgets beyond the largest per-unit cap saturate") {
  Rng rng(17);
  const auto obs = random_group(rng, 8);
  double max_cap = 0.0;
  for (const auto& o : obs) max_cap = std::max(max_cap, std::min(o.mu0, 1.0 - o.mu1));
  const auto rb_sat = bounds(group_stats(obs, std::min(1.0, max_cap + 1e-9), "g"));
  const auto rb_one = bounds(group_stats(obs, 1.0, "g"));
  REQUIRE(rb_sat.tpr.lower == rb_one.tpr.lower);
  REQUIRE(rb_sat.tpr.upper == rb_one.tpr.upper);
  REQUIRE(rb_sat.tnr.lower == rb_one.tnr.lower);
  REQUIRE(rb_sat.tnr.upper == rb_one.tnr.upper);
}

TEST_CASE("vanishing responder mass is reported, not divided by") {
  std::vector<GroupObservation> obs = {{0.0, 0.3, 0.3, false, 1.0},
                                       {0.0, 0.4, 0.4, true, 1.0}};
  const auto gs = group_stats(obs, 0.0, "g");
  REQUIRE_THROWS_MATCHES(point_rates(gs), DegenerateGroupError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("'g'")));
}

TEST_CASE("configuration errors on malformed budgets") {
  const auto obs = two_units();
  REQUIRE_THROWS_AS(group_stats(obs, -0.1, "g"), ConfigError);
  REQUIRE_THROWS_AS(group_stats(obs, 1.5, "g"), ConfigError);
  REQUIRE_THROWS_AS(group_stats(std::vector<GroupObservation>{}, 0.1, "g"),
                    DegenerateGroupError);
  const auto gs = group_stats(obs, 0.1, "g");
  REQUIRE_THROWS_AS(bounds(gs, 0.2), ConfigError);
  REQUIRE(bounds(gs, 0.1).tpr.upper == bounds(gs).tpr.upper);
}

TEST_CASE("weighted observations match duplicated observations") {
  Rng rng(19);
  std::vector<GroupObservation> dup;
  std::vector<GroupObservation> wtd;
  for (int i = 0; i < 6; ++i) {
    GroupObservation o;
    o.mu0 = rng.uniform(0.1, 0.9);
    o.mu1 = rng.uniform(0.1, 0.9);
    o.tau = o.mu1 - o.mu0;
    o.treated = i % 2 == 0;
    o.weight = 1.0;
    dup.push_back(o);
    dup.push_back(o);
    o.weight = 2.0;
    wtd.push_back(o);
  }
  for (double B : {0.0, 0.1, 0.4}) {
    const auto a = bounds(group_stats(dup, B, "g"));
    const auto b = bounds(group_stats(wtd, B, "g"));
    REQUIRE(a.tpr.lower == Catch::Approx(b.tpr.lower).margin(1e-14));
    REQUIRE(a.tpr.upper == Catch::Approx(b.tpr.upper).margin(1e-14));
    REQUIRE(a.tnr.lower == Catch::Approx(b.tnr.lower).margin(1e-14));
    REQUIRE(a.tnr.upper == Catch::Approx(b.tnr.upper).margin(1e-14));
  }
}

TEST_CASE("dataset-level accessors validate the group name") {
  std::vector<UnitRecord> rs;
  for (int i = 0; i < 4; ++i) {
    UnitRecord r;
    r.unit_id = "u" + std::to_string(i);
    r.group = i < 2 ? "g0" : "g1";
    r.treatment = i % 2;
    r.outcome = 0;
    r.features = {static_cast<double>(i)};
    r.mu0_hat = 0.3;
    r.mu1_hat = 0.5;
    r.tau_hat = 0.2;
    rs.push_back(r);
  }
  const Dataset ds(rs, {"x1"});
  const std::vector<std::uint8_t> z = {1, 0, 1, 0};
  REQUIRE(group_stats(ds, z, "g0", 0.1).n == 2);
  REQUIRE_THROWS_MATCHES(group_stats(ds, z, "nope", 0.1), ConfigError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("nope")));
  REQUIRE(negative_tau_fraction(ds) == 0.0);
}
