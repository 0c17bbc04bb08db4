#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "holokan/analysis.hpp"
#include "holokan/kan.hpp"
#include "holokan/systems.hpp"

namespace holokan {

/// Candidate library, in tie-break order.
enum class CandidateBasis { One, X, X2, X3, Sin, Cos, Exp, XExp };

inline constexpr std::array<CandidateBasis, 8> kCandidateLibrary = {
    CandidateBasis::One, CandidateBasis::X,   CandidateBasis::X2,  CandidateBasis::X3,
    CandidateBasis::Sin, CandidateBasis::Cos, CandidateBasis::Exp, CandidateBasis::XExp};

inline double candidate_value(CandidateBasis b, double x) {
  switch (b) {
    case CandidateBasis::One: return 1.0;
    case CandidateBasis::X: return x;
    case CandidateBasis::X2: return x * x;
    case CandidateBasis::X3: return x * x * x;
    case CandidateBasis::Sin: return std::sin(x);
    case CandidateBasis::Cos: return std::cos(x);
    case CandidateBasis::Exp: return std::exp(x);
    case CandidateBasis::XExp: return x * std::exp(x);
  }
  return 0.0;
}

inline std::string_view candidate_name(CandidateBasis b) {
  switch (b) {
    case CandidateBasis::One: return "1";
    case CandidateBasis::X: return "x";
    case CandidateBasis::X2: return "x^2";
    case CandidateBasis::X3: return "x^3";
    case CandidateBasis::Sin: return "sin";
    case CandidateBasis::Cos: return "cos";
    case CandidateBasis::Exp: return "exp";
    case CandidateBasis::XExp: return "x*exp";
  }
  return "?";
}

inline Family candidate_family(CandidateBasis b) {
  switch (b) {
    case CandidateBasis::One: return Family::Constant;
    case CandidateBasis::X: return Family::Linear;
    case CandidateBasis::X2: return Family::PolyX2;
    case CandidateBasis::X3: return Family::PolyX3;
    case CandidateBasis::Sin:
    case CandidateBasis::Cos: return Family::Trigonometric;
    case CandidateBasis::Exp: return Family::Exponential;
    case CandidateBasis::XExp: return Family::MixedExp;
  }
  return Family::Constant;
}

struct CandidateFit {
  double a = 0.0;
  double c0 = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit ys ~ a * b(xs) + c0 with R^2 = 1 - SS_res / SS_tot.
inline CandidateFit fit_candidate(std::span<const double> xs, std::span<const double> ys, CandidateBasis cand) {
  if (xs.size() != ys.size() || xs.size() < 3) throw DegenerateFit("fit needs at least three paired samples");
  const double n = static_cast<double>(xs.size());
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= n;
  double ss_tot = 0.0;
  for (double y : ys) ss_tot += (y - mean_y) * (y - mean_y);

  if (cand == CandidateBasis::One) {
    return {mean_y, 0.0, ss_tot > 0.0 ? 0.0 : 1.0};
  }
  std::vector<double> bs(xs.size());
  double mean_b = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bs[i] = candidate_value(cand, xs[i]);
    mean_b += bs[i];
  }
  mean_b /= n;
  double var_b = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    var_b += (bs[i] - mean_b) * (bs[i] - mean_b);
    cov += (bs[i] - mean_b) * (ys[i] - mean_y);
  }
  if (var_b / n < 1e-12 || !std::isfinite(var_b)) throw DegenerateFit("candidate is constant on the sampled range");
  CandidateFit fit;
  fit.a = cov / var_b;
  fit.c0 = mean_y - fit.a * mean_b;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.a * bs[i] + fit.c0);
    ss_res += r * r;
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return fit;
}

/// One edge observed over the evaluation sweep.
struct EdgeSweep {
  int layer = 1;
  int from = 0;
  int to = 0;
  std::vector<double> inputs;
  std::vector<double> activations;
  double range_lo = 0.0;
  double range_hi = 0.0;
  double importance = 0.0;  // std of activations over the sweep
  std::vector<double> curve_x;  // uniform grid over the active range
  std::vector<double> curve_y;
};

/// Records every edge over a resolution x resolution lattice of the system
/// domain and resamples each edge on `curve_points` uniform points of its
/// active input range.
inline std::vector<EdgeSweep> sweep_edges(const KanNetwork& net, const SystemSpec& spec, int resolution = 100,
                                          int curve_points = 200) {
  EvalGrid grid{resolution, resolution, spec.domain};
  std::vector<Complex> pts;
  for (Complex z : grid.points())
    if (!spec.excluded(z)) pts.push_back(z);
  std::vector<EdgeTrace> traces;
  forward(net, pts, &traces);

  std::vector<EdgeSweep> out;
  const auto add = [&](int layer, int from, int to) {
    const int edge = net.edge_index(layer, from, to);
    EdgeSweep s;
    s.layer = layer;
    s.from = from;
    s.to = to;
    s.inputs = std::move(traces[static_cast<std::size_t>(edge)].inputs);
    s.activations = std::move(traces[static_cast<std::size_t>(edge)].outputs);
    const auto [lo, hi] = std::minmax_element(s.inputs.begin(), s.inputs.end());
    s.range_lo = *lo;
    s.range_hi = *hi;
    double mean = 0.0;
    for (double v : s.activations) mean += v;
    mean /= static_cast<double>(s.activations.size());
    double var = 0.0;
    for (double v : s.activations) var += (v - mean) * (v - mean);
    s.importance = std::sqrt(var / static_cast<double>(s.activations.size()));
    for (int i = 0; i < curve_points; ++i) {
      const double x = s.range_lo + (s.range_hi - s.range_lo) * i / (curve_points - 1);
      s.curve_x.push_back(x);
      s.curve_y.push_back(edge_activation(net, edge, x));
    }
    out.push_back(std::move(s));
  };
  for (int j = 0; j < 2; ++j)
    for (int h = 0; h < net.hidden(); ++h) add(1, j, h);
  for (int h = 0; h < net.hidden(); ++h)
    for (int o = 0; o < 2; ++o) add(2, h, o);
  return out;
}

struct EdgeFit {
  int layer = 1;
  int from = 0;
  int to = 0;
  CandidateBasis candidate = CandidateBasis::One;
  double a = 0.0;
  double c0 = 0.0;
  double r_squared = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  double importance = 0.0;
};

struct CandidateChoice {
  CandidateBasis candidate = CandidateBasis::One;
  CandidateFit fit;
};

/// Max-R^2 candidate for a sampled curve. The constant candidate is chosen
/// only when the curve is flat (std < 1e-6); near-ties (< 1e-9) keep library order.
inline CandidateChoice best_candidate(std::span<const double> xs, std::span<const double> ys, double spread) {
  CandidateChoice choice;
  const bool flat = spread < 1e-6 || xs.size() < 3;
  if (flat) {
    double mean = 0.0;
    for (double v : ys) mean += v;
    choice.fit.a = ys.empty() ? 0.0 : mean / static_cast<double>(ys.size());
    choice.fit.r_squared = 1.0;
    return choice;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (CandidateBasis cand : kCandidateLibrary) {
    if (cand == CandidateBasis::One) continue;
    CandidateFit f;
    try {
      f = fit_candidate(xs, ys, cand);
    } catch (const DegenerateFit&) {
      continue;
    }
    if (f.r_squared > best + 1e-9) {
      best = f.r_squared;
      choice.candidate = cand;
      choice.fit = f;
    }
  }
  return choice;
}

inline EdgeFit best_fit(const EdgeSweep& sweep) {
  EdgeFit fit;
  fit.layer = sweep.layer;
  fit.from = sweep.from;
  fit.to = sweep.to;
  fit.range_lo = sweep.range_lo;
  fit.range_hi = sweep.range_hi;
  fit.importance = sweep.importance;
  const double spread = sweep.range_hi > sweep.range_lo ? sweep.importance : 0.0;
  const auto choice = best_candidate(sweep.curve_x, sweep.curve_y, spread);
  fit.candidate = choice.candidate;
  fit.a = choice.fit.a;
  fit.c0 = choice.fit.c0;
  fit.r_squared = choice.fit.r_squared;
  return fit;
}

/// One output component sampled along the real axis, z = x + 0i.
struct AxisResponse {
  int output = 0;  // 0 = u, 1 = v
  std::vector<double> xs;
  std::vector<double> ys;
  double importance = 0.0;  // std of ys
};

/// Samples f on `points` uniform real-axis points spanning the domain,
/// skipping points inside the exclusion disk.
inline std::array<AxisResponse, 2> real_axis_response(const VectorField& f, const SystemSpec& spec,
                                                      int points = 200) {
  if (points < 3) throw ConfigError("real-axis response needs at least three points");
  std::array<AxisResponse, 2> out;
  out[1].output = 1;
  for (int i = 0; i < points; ++i) {
    const double x = spec.domain.lo + spec.domain.width() * i / (points - 1);
    const Complex z(x, 0.0);
    if (spec.excluded(z)) continue;
    const Complex w = f(z);
    out[0].xs.push_back(x);
    out[0].ys.push_back(w.real());
    out[1].xs.push_back(x);
    out[1].ys.push_back(w.imag());
  }
  for (auto& r : out) {
    double mean = 0.0;
    for (double y : r.ys) mean += y;
    mean /= std::max<double>(1.0, static_cast<double>(r.ys.size()));
    double var = 0.0;
    for (double y : r.ys) var += (y - mean) * (y - mean);
    r.importance = r.ys.empty() ? 0.0 : std::sqrt(var / static_cast<double>(r.ys.size()));
  }
  return out;
}

struct ResponseFit {
  int output = 0;
  CandidateBasis candidate = CandidateBasis::One;
  double a = 0.0;
  double c0 = 0.0;
  double r_squared = 0.0;
  double importance = 0.0;
};

inline ResponseFit fit_response(const AxisResponse& r) {
  const auto choice = best_candidate(r.xs, r.ys, r.importance);
  return {r.output, choice.candidate, choice.fit.a, choice.fit.c0, choice.fit.r_squared, r.importance};
}

struct FamilyReport {
  Family detected_family = Family::Constant;
  CandidateBasis dominant_candidate = CandidateBasis::One;
  double mean_r2 = 0.0;
  std::vector<ResponseFit> responses;
  std::vector<EdgeFit> dominant_fits;  // top edges by importance
};

/// Edge vote: ranks edges by importance, keeps the top `top_k`, and takes the
/// majority family among their candidates. Ties go to the family with higher
/// mean R^2; mean_r2 is taken over the winning family's edges.
inline FamilyReport classify_by_edge_vote(std::span<const EdgeFit> fits, int top_k = 4) {
  if (fits.empty()) throw ConfigError("edge vote needs at least one edge fit");
  std::vector<EdgeFit> ranked(fits.begin(), fits.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const EdgeFit& a, const EdgeFit& b) { return a.importance > b.importance; });
  ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(top_k, 1))));

  struct Tally {
    int count = 0;
    double r2 = 0.0;
    CandidateBasis first = CandidateBasis::One;
  };
  std::map<Family, Tally> tally;
  for (const auto& f : ranked) {
    auto& t = tally[candidate_family(f.candidate)];
    if (t.count == 0) t.first = f.candidate;
    ++t.count;
    t.r2 += f.r_squared;
  }
  FamilyReport rep;
  bool first = true;
  Tally best{};
  for (const auto& [family, t] : tally) {
    const bool better = first || t.count > best.count ||
                        (t.count == best.count && t.r2 / t.count > best.r2 / best.count);
    if (better) {
      rep.detected_family = family;
      best = t;
      first = false;
    }
  }
  rep.dominant_candidate = best.first;
  rep.mean_r2 = best.r2 / best.count;
  rep.dominant_fits = std::move(ranked);
  return rep;
}

/// Response rule: fits both output components along the real axis and takes
/// the family of the component with the larger spread.
inline FamilyReport classify_by_response(const std::array<AxisResponse, 2>& responses) {
  FamilyReport rep;
  for (const auto& r : responses) rep.responses.push_back(fit_response(r));
  const auto& dom = rep.responses[0].importance >= rep.responses[1].importance ? rep.responses[0] : rep.responses[1];
  rep.dominant_candidate = dom.candidate;
  rep.detected_family = candidate_family(dom.candidate);
  rep.mean_r2 = dom.r_squared;
  return rep;
}

enum class FamilyRule { Response, EdgeVote };

inline std::string_view family_rule_name(FamilyRule r) { return r == FamilyRule::Response ? "response" : "edge-vote"; }

/// Full symbolic pass over a trained network. Edge fits are always computed
/// and the top `top_k` are attached; the family comes from `rule`.
inline FamilyReport symbolic_report(const KanNetwork& net, const SystemSpec& spec, FamilyRule rule = FamilyRule::Response,
                                    int top_k = 4, int resolution = 100) {
  std::vector<EdgeFit> fits;
  for (const auto& s : sweep_edges(net, spec, resolution)) fits.push_back(best_fit(s));
  auto vote = classify_by_edge_vote(fits, top_k);
  if (rule == FamilyRule::EdgeVote) return vote;
  auto rep = classify_by_response(real_axis_response([&net](Complex z) { return forward(net, z); }, spec));
  rep.dominant_fits = std::move(vote.dominant_fits);
  return rep;
}

}  // namespace holokan
