#pragma once

// Greedy top-down selection of inside poles.
//
// Ball-stick: take poles by decreasing radius, accepting one when its ball
// keeps a gap of at least eps to every accepted ball. Porous: take the pole of
// highest priority r + lambda * min(0, min gap to accepted balls).
//
// Each mode has two interchangeable ways of finding the balls a candidate must
// be checked against: all of them (brute force), or only those adjacent to it
// in a power diagram (accelerated). Both share the same queue, so they accept
// identical sequences whenever the accelerated candidate lists are complete.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"
#include "polarballs/poles.hpp"
#include "polarballs/power_diagram.hpp"

namespace polarballs {

enum class Mode { Ballstick, Porous };
enum class Acceleration { BruteForce, PowerDiagram };

inline const char* to_string(Mode m) { return m == Mode::Ballstick ? "ballstick" : "porous"; }
inline const char* to_string(Acceleration a) { return a == Acceleration::BruteForce ? "brute" : "power"; }

struct SelectionParams {
  Mode mode = Mode::Ballstick;
  double delta = 0.05;     // minimum radius, fraction of the bbox diagonal
  double epsilon = 0.008;  // ball-stick gap, fraction of the bbox diagonal
  double lambda = 0.8;     // porous penetration penalty
  std::optional<std::size_t> max_balls;
  Acceleration acceleration = Acceleration::PowerDiagram;
  /// Cross-check every accelerated candidate list against all balls.
  bool shadow = false;

  void validate() const {
    if (!(delta > 0.0)) throw Error(ErrorCode::ContractViolation, "delta must be positive");
    if (!(epsilon >= 0.0)) throw Error(ErrorCode::ContractViolation, "epsilon must be non-negative");
    if (mode == Mode::Porous && !(lambda > 0.0 && lambda <= 1.0)) {
      throw Error(ErrorCode::ContractViolation, "lambda must lie in (0, 1]");
    }
  }
};

template <int Dim>
struct SelectionStep {
  int pole = 0;
  Point<Dim> center;
  double radius = 0.0;
  double priority = 0.0;
  std::size_t rejected = 0;           // candidates rejected since the previous acceptance
  std::uint64_t checks = 0;           // gap evaluations spent on this step
  std::uint64_t cumulative_checks = 0;
  double elapsed = 0.0;  // seconds since the run started; not serialized
};

template <int Dim>
struct SelectionTrace {
  Mode mode = Mode::Ballstick;
  Acceleration acceleration = Acceleration::PowerDiagram;
  double diag = 0.0;
  std::vector<SelectionStep<Dim>> steps;
  std::size_t trailing_rejected = 0;
  std::uint64_t total_checks = 0;
  std::uint64_t hidden_fallbacks = 0;  // accelerated queries answered by brute force
  std::uint64_t shadow_checks = 0;
  std::uint64_t shadow_misses = 0;
  std::vector<std::string> log;

  std::vector<int> accepted_ids() const {
    std::vector<int> out;
    for (const auto& s : steps) out.push_back(s.pole);
    return out;
  }
  std::vector<Ball<Dim>> balls() const {
    std::vector<Ball<Dim>> out;
    for (const auto& s : steps) out.push_back({s.center, s.radius});
    return out;
  }
};

namespace detail {

template <int Dim>
Box<Dim> pole_box(const PoleSet<Dim>& poles) {
  Box<Dim> b;
  for (const auto& p : poles.inside) b.extend(p.position);
  for (const auto& p : poles.outside) b.extend(p.position);
  const double pad = poles.diag > 0.0 ? poles.diag : 1.0;
  for (int k = 0; k < Dim; ++k) {
    b.lo[k] -= pad;
    b.hi[k] += pad;
  }
  return b;
}

}  // namespace detail

/// Inside poles adjacent to the tentatively inserted site; ids below
/// `num_inside` denote inside poles.
template <int Dim>
std::vector<int> conflict_candidates(const TentativeInsert<Dim>& h, int num_inside) {
  std::vector<int> out;
  for (int id : h.neighbors())
    if (id < num_inside) out.push_back(id);
  return out;
}

/// Peel loop on PD(Q + remaining inside poles): removes inside-pole neighbours
/// of `accepted` until only outside poles border it, then restores the diagram
/// and removes `accepted` for good. Returns the peeled ids, or nullopt when the
/// accepted site is hidden and no adjacency information exists.
template <int Dim>
std::optional<std::vector<int>> porous_priority_update(PowerDiagram<Dim>& pd, int accepted, int num_inside) {
  std::optional<std::vector<int>> peeled;
  pd.begin();
  if (!pd.hidden(accepted)) {
    peeled.emplace();
    while (true) {
      std::vector<int> ring;
      for (int id : pd.neighbors(accepted))
        if (id < num_inside) ring.push_back(id);
      if (ring.empty()) break;
      for (int id : ring) pd.remove(id);
      peeled->insert(peeled->end(), ring.begin(), ring.end());
    }
  }
  pd.rollback();
  pd.remove(accepted);
  if (peeled) std::sort(peeled->begin(), peeled->end());
  return peeled;
}

/// The set porous_priority_update peels, found without removals. The peel loop
/// stops once the accepted cell equals its cell in PD(Q + accepted), so a
/// remaining pole is peeled iff it would share a facet with the accepted pole
/// in PD(Q + accepted + that pole): it conflicts with some, but not all, of the
/// accepted vertex's cells. `outside` must hold exactly Q and is left
/// unchanged. Returns nullopt when the accepted pole is hidden there.
template <int Dim>
std::optional<std::vector<int>> peel_set(PowerDiagram<Dim>& outside, int accepted, const WeightedSite<Dim>& site,
                                         const std::vector<std::pair<int, WeightedSite<Dim>>>& remaining) {
  if (!outside.insert(accepted, site)) {
    outside.remove(accepted);
    return std::nullopt;
  }
  const auto& tri = outside.triangulation();
  const auto star = tri.star(outside.vertex_index(accepted));

  // Orthospheres in floating point with an error allowance; undecided
  // comparisons go to the exact predicate.
  struct Probe {
    int cell;
    Point<Dim> x;
    double w;
    double x_err;  // bound on the orthocenter error, +inf when unreliable
    double w_err;
  };
  std::vector<Probe> probes;
  probes.reserve(star.size());
  for (int c : star) {
    Probe pr{c, Point<Dim>::Zero(), 0.0, std::numeric_limits<double>::infinity(), 0.0};
    const auto& cv = tri.cell(c).v;
    const auto& v0 = tri.vertex(cv[0]);
    Eigen::Matrix<double, Dim, Dim> A;
    double row_prod = 1.0;
    double row_max = 0.0;
    for (int i = 1; i <= Dim; ++i) {
      A.row(i - 1) = (tri.vertex(cv[i]).p - v0.p).transpose();
      row_prod *= A.row(i - 1).norm();
      row_max = std::max(row_max, A.row(i - 1).norm());
    }
    const double quality = std::abs(A.determinant()) / row_prod;
    if (quality > 1e-6 && std::isfinite(quality)) {
      pr.x = tri.orthocenter(c);
      pr.w = tri.ortho_weight(c, pr.x);
      const double rx = (pr.x - v0.p).norm();
      pr.x_err = 1e-10 * (rx + row_max) / quality;
      pr.w_err = 2.0 * rx * pr.x_err + 1e-12 * (rx * rx + std::abs(v0.w));
      if (!pr.x.allFinite() || !std::isfinite(pr.w)) pr.x_err = std::numeric_limits<double>::infinity();
    }
    probes.push_back(pr);
  }

  std::vector<int> peeled;
  for (const auto& [id, ws] : remaining) {
    bool some = false;
    bool all = true;
    for (const auto& pr : probes) {
      bool hit = false;
      bool decided = false;
      if (std::isfinite(pr.x_err)) {
        const double dx = (ws.center - pr.x).norm();
        const double val = dx * dx - ws.weight - pr.w;
        const double slack = 1e-12 * (dx * dx + std::abs(ws.weight) + std::abs(pr.w)) + 2.0 * dx * pr.x_err + pr.w_err;
        if (val > slack) {
          decided = true;
        } else if (val < -slack) {
          decided = true;
          hit = true;
        }
      }
      if (!decided) hit = tri.conflict_with(pr.cell, ws.center, ws.weight, id);
      some |= hit;
      all &= hit;
      if (some && !all) break;
    }
    if (some && !all) peeled.push_back(id);
  }
  outside.remove(accepted);
  std::sort(peeled.begin(), peeled.end());
  return peeled;
}

namespace detail {

template <int Dim>
SelectionTrace<Dim> run_ballstick(const PoleSet<Dim>& poles, const SelectionParams& params) {
  const auto start = std::chrono::steady_clock::now();
  SelectionTrace<Dim> tr;
  tr.mode = Mode::Ballstick;
  tr.acceleration = params.acceleration;
  tr.diag = poles.diag;
  const double min_r = params.delta * poles.diag;
  const double eps = params.epsilon * poles.diag;
  const int np = static_cast<int>(poles.inside.size());
  const bool accel = params.acceleration == Acceleration::PowerDiagram;

  std::vector<int> order(np);
  for (int i = 0; i < np; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (poles.inside[a].radius != poles.inside[b].radius) return poles.inside[a].radius > poles.inside[b].radius;
    return a < b;
  });

  std::optional<PowerDiagram<Dim>> pd;
  if (accel) {
    pd.emplace(detail::pole_box(poles));
    for (const auto& q : poles.outside) pd->insert(np + q.id, {q.position, q.radius * q.radius});
  }

  std::vector<int> accepted;
  std::vector<char> is_accepted(np, 0);
  std::size_t rejected = 0;
  std::uint64_t step_checks = 0;
  for (int id : order) {
    const auto& cand = poles.inside[id];
    if (cand.radius < min_r) break;
    if (params.max_balls && accepted.size() >= *params.max_balls) break;
    const Ball<Dim> b = polar_ball(cand);

    std::vector<int> to_check;
    std::optional<TentativeInsert<Dim>> h;
    if (accel) {
      h.emplace(*pd, id, WeightedSite<Dim>{cand.position, cand.radius * cand.radius});
      if (h->visible()) {
        to_check = conflict_candidates(*h, np);
      } else {
        ++tr.hidden_fallbacks;
        to_check = accepted;
      }
    } else {
      to_check = accepted;
    }

    bool ok = true;
    for (int j : to_check) {
      ++step_checks;
      if (ball_gap(b, polar_ball(poles.inside[j])) < eps) ok = false;
    }
    if (params.shadow) {
      std::vector<int> sorted = to_check;
      std::sort(sorted.begin(), sorted.end());
      for (int j : accepted) {
        ++tr.shadow_checks;
        if (ball_gap(b, polar_ball(poles.inside[j])) < eps && !std::binary_search(sorted.begin(), sorted.end(), j)) {
          ++tr.shadow_misses;
        }
      }
    }

    if (h) h->rollback();
    if (!ok) {
      ++rejected;
      continue;
    }
    if (accel) pd->insert(id, {cand.position, (cand.radius + eps) * (cand.radius + eps)});
    accepted.push_back(id);
    is_accepted[id] = 1;
    tr.total_checks += step_checks;
    SelectionStep<Dim> st;
    st.pole = id;
    st.center = cand.position;
    st.radius = cand.radius;
    st.priority = cand.radius;
    st.rejected = rejected;
    st.checks = step_checks;
    st.cumulative_checks = tr.total_checks;
    st.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    tr.steps.push_back(st);
    rejected = 0;
    step_checks = 0;
  }
  tr.total_checks += step_checks;
  tr.trailing_rejected = rejected;
  return tr;
}

template <int Dim>
SelectionTrace<Dim> run_porous(const PoleSet<Dim>& poles, const SelectionParams& params) {
  const auto start = std::chrono::steady_clock::now();
  SelectionTrace<Dim> tr;
  tr.mode = Mode::Porous;
  tr.acceleration = params.acceleration;
  tr.diag = poles.diag;
  const double min_r = params.delta * poles.diag;
  const int np = static_cast<int>(poles.inside.size());
  const bool accel = params.acceleration == Acceleration::PowerDiagram;

  std::optional<PowerDiagram<Dim>> pd;
  if (accel) {
    pd.emplace(detail::pole_box(poles));
    for (const auto& q : poles.outside) pd->insert(np + q.id, {q.position, q.radius * q.radius});
  }

  std::vector<double> pen(np, 0.0);  // min(0, min gap to accepted balls)
  std::vector<char> gone(np, 0);
  auto priority = [&](int j) { return poles.inside[j].radius + params.lambda * pen[j]; };
  using Entry = std::pair<double, int>;  // (priority, -id)
  std::priority_queue<Entry> queue;
  for (int j = 0; j < np; ++j) queue.emplace(priority(j), -j);

  std::size_t stale = 0;
  while (!queue.empty()) {
    const auto [stored, neg] = queue.top();
    const int id = -neg;
    queue.pop();
    if (gone[id]) continue;
    const double cur = priority(id);
    if (cur != stored) {
      ++stale;
      queue.emplace(cur, -id);
      continue;
    }
    // A boundary sample acts as a zero-radius pole of priority 0, so a
    // negative top priority ends the run just like a small radius does.
    if (poles.inside[id].radius < min_r || cur < 0.0) break;
    if (params.max_balls && tr.steps.size() >= *params.max_balls) break;

    gone[id] = 1;
    const Ball<Dim> b = polar_ball(poles.inside[id]);
    std::vector<int> update;
    bool from_diagram = false;
    if (accel) {
      std::vector<std::pair<int, WeightedSite<Dim>>> remaining;
      for (int j = 0; j < np; ++j) {
        if (!gone[j]) remaining.push_back({j, {poles.inside[j].position, poles.inside[j].radius * poles.inside[j].radius}});
      }
      auto peeled = peel_set(*pd, id, {b.center, b.radius * b.radius}, remaining);
      if (peeled) {
        update = std::move(*peeled);
        from_diagram = true;
      } else {
        ++tr.hidden_fallbacks;
      }
    }
    if (!from_diagram) {
      for (int j = 0; j < np; ++j)
        if (!gone[j]) update.push_back(j);
    }

    std::uint64_t checks = 0;
    for (int j : update) {
      if (gone[j]) continue;
      ++checks;
      const double d = ball_gap(b, polar_ball(poles.inside[j]));
      if (d < pen[j]) pen[j] = d;
    }
    if (params.shadow) {
      for (int j = 0; j < np; ++j) {
        if (gone[j]) continue;
        ++tr.shadow_checks;
        if (ball_gap(b, polar_ball(poles.inside[j])) < 0.0 && !std::binary_search(update.begin(), update.end(), j)) {
          ++tr.shadow_misses;
        }
      }
    }
    tr.total_checks += checks;
    SelectionStep<Dim> st;
    st.pole = id;
    st.center = b.center;
    st.radius = b.radius;
    st.priority = cur;
    st.checks = checks;
    st.cumulative_checks = tr.total_checks;
    st.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    tr.steps.push_back(st);
  }
  (void)stale;
  return tr;
}

}  // namespace detail

template <int Dim>
SelectionTrace<Dim> select_ballstick(const PoleSet<Dim>& poles, SelectionParams params) {
  params.mode = Mode::Ballstick;
  params.validate();
  if (poles.inside.empty()) throw Error(ErrorCode::EmptyInput, "no inside poles to select from");
  return detail::run_ballstick(poles, params);
}

template <int Dim>
SelectionTrace<Dim> select_porous(const PoleSet<Dim>& poles, SelectionParams params) {
  params.mode = Mode::Porous;
  params.validate();
  if (poles.inside.empty()) throw Error(ErrorCode::EmptyInput, "no inside poles to select from");
  return detail::run_porous(poles, params);
}

/// Exhaustive-check reference for either mode. An empty pole set gives an
/// empty trace.
template <int Dim>
SelectionTrace<Dim> select_oracle(const PoleSet<Dim>& poles, SelectionParams params) {
  params.acceleration = Acceleration::BruteForce;
  params.shadow = false;
  params.validate();
  if (poles.inside.empty()) {
    SelectionTrace<Dim> tr;
    tr.mode = params.mode;
    tr.acceleration = params.acceleration;
    tr.diag = poles.diag;
    return tr;
  }
  return params.mode == Mode::Ballstick ? detail::run_ballstick(poles, params) : detail::run_porous(poles, params);
}

template <int Dim>
SelectionTrace<Dim> select(const PoleSet<Dim>& poles, const SelectionParams& params) {
  return params.mode == Mode::Ballstick ? select_ballstick(poles, params) : select_porous(poles, params);
}

/// Smallest pairwise gap among the selected balls (+inf for fewer than two).
template <int Dim>
double min_pairwise_gap(const std::vector<Ball<Dim>>& balls) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j) m = std::min(m, ball_gap(balls[i], balls[j]));
  return m;
}

template <int Dim>
nlohmann::json to_json(const SelectionTrace<Dim>& tr) {
  nlohmann::json balls = nlohmann::json::array();
  for (const auto& s : tr.steps) {
    balls.push_back({{"pole", s.pole},
                     {"center", point_json<Dim>(s.center)},
                     {"radius", s.radius},
                     {"priority", s.priority},
                     {"rejected", s.rejected},
                     {"checks", s.checks}});
  }
  return {{"mode", to_string(tr.mode)},
          {"acceleration", to_string(tr.acceleration)},
          {"bbox_diag", tr.diag},
          {"balls", balls},
          {"trailing_rejected", tr.trailing_rejected},
          {"total_checks", tr.total_checks},
          {"hidden_fallbacks", tr.hidden_fallbacks}};
}

}  // namespace polarballs
