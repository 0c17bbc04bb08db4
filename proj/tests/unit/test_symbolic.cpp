#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "holokan/symbolic.hpp"

using namespace holokan;
using Catch::Approx;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(a + (b - a) * i / (n - 1));
  return xs;
}

}  // namespace

TEST_CASE("exact candidates are recovered with their coefficients") {
  const auto xs = linspace(-2.0, 2.0, 101);
  for (CandidateBasis cand : kCandidateLibrary) {
    if (cand == CandidateBasis::One) continue;
    std::vector<double> ys;
    for (double x : xs) ys.push_back(-1.7 * candidate_value(cand, x) + 0.4);
    const auto fit = fit_candidate(xs, ys, cand);
    CHECK(fit.a == Approx(-1.7));
    CHECK(fit.c0 == Approx(0.4).margin(1e-12));
    CHECK(fit.r_squared == Approx(1.0));
    CHECK(best_candidate(xs, ys, 1.0).candidate == cand);
  }
}

TEST_CASE("r squared against a hand computation") {
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> ys{0.0, 1.0, 1.0, 3.0};
  // Line 0.9x - 0.1 leaves residuals 0.1, 0.2, -0.7, 0.4; SS_tot = 4.75.
  const auto fit = fit_candidate(xs, ys, CandidateBasis::X);
  CHECK(fit.a == Approx(0.9));
  CHECK(fit.c0 == Approx(-0.1));
  CHECK(fit.r_squared == Approx(1.0 - 0.70 / 4.75));
}

TEST_CASE("degenerate fits") {
  const std::vector<double> two{0.0, 1.0};
  CHECK_THROWS_AS(fit_candidate(two, two, CandidateBasis::X), DegenerateFit);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(fit_candidate(zeros, zeros, CandidateBasis::X2), DegenerateFit);
}

TEST_CASE("flat curves choose the constant candidate") {
  const auto xs = linspace(-1, 1, 20);
  const std::vector<double> ys(20, 0.3);
  const auto c = best_candidate(xs, ys, 0.0);
  CHECK(c.candidate == CandidateBasis::One);
  CHECK(c.fit.a == Approx(0.3));
}

TEST_CASE("analytic fields classify by real-axis response") {
  for (SystemId id : kPureSystems) {
    const auto spec = make_system(id);
    const auto rep = classify_by_response(real_axis_response(analytic_field(spec), spec));
    CHECK(rep.detected_family == spec.family);
    CHECK(rep.mean_r2 > 0.99);
  }
}

TEST_CASE("zero network is constant") {
  const KanNetwork zero;
  const auto spec = make_system(SystemId::Quadratic);
  const auto rep = symbolic_report(zero, spec);
  CHECK(rep.detected_family == Family::Constant);
  const auto vote = symbolic_report(zero, spec, FamilyRule::EdgeVote);
  CHECK(vote.detected_family == Family::Constant);
  CHECK(vote.dominant_fits.size() == 4);
}

TEST_CASE("edge sweep covers every edge") {
  const auto net = KanNetwork::initialized(KanArchitecture{}, 42);
  const auto spec = make_system(SystemId::Cubic);
  const auto sweeps = sweep_edges(net, spec, 20);
  REQUIRE(sweeps.size() == 20);
  CHECK(sweeps[0].inputs.size() == 400);
  CHECK(sweeps[0].layer == 1);
  CHECK(sweeps[19].layer == 2);
  for (const auto& s : sweeps) {
    CHECK(s.range_lo <= s.range_hi);
    CHECK(s.curve_x.front() == s.range_lo);
  }
}

TEST_CASE("edge vote is invariant to scaling the importances") {
  std::vector<EdgeFit> fits;
  const CandidateBasis cands[] = {CandidateBasis::X2, CandidateBasis::Sin, CandidateBasis::X2, CandidateBasis::Exp,
                                  CandidateBasis::Cos, CandidateBasis::X3};
  for (int i = 0; i < 6; ++i) {
    EdgeFit f;
    f.candidate = cands[i];
    f.importance = 1.0 + 0.5 * ((i * 7) % 6);
    f.r_squared = 0.9 + 0.01 * i;
    fits.push_back(f);
  }
  const auto a = classify_by_edge_vote(fits, 4);
  for (auto& f : fits) f.importance *= 1e3;
  const auto b = classify_by_edge_vote(fits, 4);
  CHECK(a.detected_family == b.detected_family);
  CHECK(a.mean_r2 == b.mean_r2);
  CHECK(a.dominant_fits.size() == 4);
}

TEST_CASE("edge vote majority and tie break") {
  std::vector<EdgeFit> fits(4);
  fits[0] = {1, 0, 0, CandidateBasis::Sin, 1, 0, 0.7, 0, 0, 4.0};
  fits[1] = {1, 0, 1, CandidateBasis::Cos, 1, 0, 0.9, 0, 0, 3.0};
  fits[2] = {1, 1, 0, CandidateBasis::X2, 1, 0, 0.99, 0, 0, 2.0};
  fits[3] = {1, 1, 1, CandidateBasis::X2, 1, 0, 0.95, 0, 0, 1.0};
  auto r = classify_by_edge_vote(fits, 4);
  CHECK(r.detected_family == Family::PolyX2);  // 2-2 tie, higher mean R^2
  CHECK(r.mean_r2 == Approx(0.97));
  r = classify_by_edge_vote(fits, 3);
  CHECK(r.detected_family == Family::Trigonometric);
  CHECK(r.dominant_candidate == CandidateBasis::Sin);
}
