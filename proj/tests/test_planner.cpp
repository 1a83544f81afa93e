#include <doctest.h>

#include <cmath>
#include <queue>

#include "fixtures.hpp"
#include "hatnav/planner.hpp"
#include "hatnav/rng.hpp"

using namespace hatnav;
using fixtures::error_code_of;

namespace {

Trajectory make_traj(const std::vector<Vec2>& pts) {
  Trajectory t;
  t.start = pts.front();
  t.goal = pts.back();
  for (const auto& p : pts) t.waypoints.push_back({p});
  return t;
}

NeuralField zero_field(const Rect2& rect) {
  NeuralField f = field_init(FieldConfig{}, rect);
  f.layers.back().weights.setZero();
  f.layers.back().bias.setConstant(-1000.0);
  return f;
}

NeuralField random_field(std::uint64_t seed, const Rect2& rect) {
  FieldConfig c;
  c.seed = seed;
  NeuralField f = field_init(c, rect);
  Rng rng(seed);
  for (auto& l : f.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = rng.uniform(-0.5, 0.5);
  }
  return f;
}

/// Dijkstra over cell centers with the same move set as the planner.
double dijkstra_cost(const TraversabilityGrid& g, TraversabilityGrid::Index2 s, TraversabilityGrid::Index2 e,
                     PlanMode mode) {
  const auto& d = g.dims();
  std::vector<double> dist(g.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  dist[g.linear(s)] = 0.0;
  q.push({0.0, g.linear(s)});
  while (!q.empty()) {
    auto [c, u] = q.top();
    q.pop();
    if (c > dist[u]) continue;
    const int ux = static_cast<int>(u % d[0]);
    const int uy = static_cast<int>(u / d[0]);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const TraversabilityGrid::Index2 v{ux + dx, uy + dy};
        if (!g.in_bounds(v) || !passable_for(g.at(v), mode)) continue;
        if (dx != 0 && dy != 0 &&
            (!passable_for(g.at({ux + dx, uy}), mode) || !passable_for(g.at({ux, uy + dy}), mode))) {
          continue;
        }
        const double nc = c + g.resolution() * std::hypot(dx, dy);
        if (nc < dist[g.linear(v)]) {
          dist[g.linear(v)] = nc;
          q.push({nc, g.linear(v)});
        }
      }
    }
  }
  return dist[g.linear(e)];
}

TraversabilityGrid arch_grid() {
  return inflate(segment(voxelize(gen_scene(fixtures::arch_scene()), 0.05), RobotProfile{}), 0.1);
}

}  // namespace

TEST_CASE("PlannerConfig validation") {
  PlannerConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_waypoints = 7;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = {};
  c.p_stop = 1.0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = {};
  c.footprint_samples = 0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = {};
  c.w_duck = -1.0;
  CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("resample_polyline spaces points evenly") {
  const std::vector<Vec2> poly = {{0, 0}, {1, 0}, {1, 2}, {1.5, 2}};
  const auto pts = resample_polyline(poly, 15);
  REQUIRE(pts.size() == 15);
  CHECK(pts.front() == poly.front());
  CHECK(pts.back() == poly.back());
  // Total length 3.5 over 14 steps; chords on straight pieces equal the step.
  CHECK((pts[1] - pts[0]).norm() == doctest::Approx(0.25));
  CHECK(pts[4].isApprox(Vec2(1, 0)));
  CHECK(pts[12].isApprox(Vec2(1, 2)));
}

TEST_CASE("seed_path on an empty grid is the diagonal") {
  const TraversabilityGrid g = fixtures::uniform_grid(100, 100, 0.05);
  const Trajectory t = seed_path(g, {0.5, 0.5}, {4.5, 4.5}, PlanMode::kHat, 64);
  REQUIRE(t.waypoints.size() == 64);
  CHECK(t.valid());
  CHECK(t.waypoints.front().position == Vec2(0.5, 0.5));
  CHECK(t.waypoints.back().position == Vec2(4.5, 4.5));
  CHECK(std::abs(t.length() - std::sqrt(32.0)) <= 0.05 * std::sqrt(2.0));
}

TEST_CASE("seed_path follows a shortest grid path") {
  const TraversabilityGrid g = arch_grid();
  for (PlanMode mode : {PlanMode::kHat, PlanMode::kFlat2d}) {
    const Vec2 s(1.52, 0.43), e(1.47, 2.61);
    const Trajectory t = seed_path(g, s, e, mode, 200);
    const double grid_cost = dijkstra_cost(g, g.index_of(s), g.index_of(e), mode);
    // The polyline swaps the two end cell centers for the exact endpoints.
    CHECK(std::abs(t.length() - grid_cost) <= 2.0 * g.resolution() * std::sqrt(2.0));
    for (const auto& w : t.waypoints) CHECK(passable_for(*g.lookup(w.position), mode));
  }
}

TEST_CASE("seed_path on the arch scene by mode") {
  const TraversabilityGrid g = arch_grid();
  const Trajectory flat = seed_path(g, {1.5, 0.5}, {1.5, 2.5}, PlanMode::kFlat2d, 64);
  const Trajectory hat = seed_path(g, {1.5, 0.5}, {1.5, 2.5}, PlanMode::kHat, 64);
  bool hat_ducks = false;
  for (const auto& w : flat.waypoints) CHECK(g.lookup(w.position)->cls == CellClass::kFree);
  for (const auto& w : hat.waypoints) hat_ducks |= g.lookup(w.position)->cls == CellClass::kDuck;
  CHECK(hat_ducks);
  CHECK(hat.length() < flat.length());
}

TEST_CASE("seed_path errors") {
  const TraversabilityGrid g = arch_grid();
  CHECK(error_code_of([&] { seed_path(g, {1.5, 0.5}, {0.925, 1.5}, PlanMode::kHat, 64); }) ==
        ErrorCode::kGoalBlocked);
  CHECK(error_code_of([&] { seed_path(g, {0.925, 1.5}, {1.5, 0.5}, PlanMode::kHat, 64); }) ==
        ErrorCode::kStartBlocked);
  CHECK(error_code_of([&] { seed_path(g, {1.5, 0.5}, {1.5, 1.5}, PlanMode::kFlat2d, 64); }) ==
        ErrorCode::kGoalBlocked);
  TraversabilityGrid walled = fixtures::uniform_grid(20, 20, 0.1);
  for (int y = 0; y < 20; ++y) walled.at({10, y}).cls = CellClass::kBlocked;
  CHECK(error_code_of([&] { seed_path(walled, {0.5, 0.5}, {1.8, 0.5}, PlanMode::kHat, 64); }) ==
        ErrorCode::kNoFeasiblePath);
  // A diagonal gap between two blocked cells is not a passage.
  TraversabilityGrid pinched = fixtures::uniform_grid(4, 4, 0.1);
  for (auto [x, y] : {std::pair{1, 0}, {0, 1}}) pinched.at({x, y}).cls = CellClass::kBlocked;
  for (auto [x, y] : {std::pair{2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}}) pinched.at({x, y}).cls = CellClass::kBlocked;
  CHECK(error_code_of([&] { seed_path(pinched, {0.05, 0.05}, {0.35, 0.35}, PlanMode::kHat, 16); }) ==
        ErrorCode::kNoFeasiblePath);
}

TEST_CASE("objective on a straight line through empty space") {
  const Rect2 rect{Vec2(0, 0), Vec2(4, 4)};
  const NeuralField f = zero_field(rect);
  PlannerConfig cfg;
  std::vector<Vec2> pts;
  for (int i = 0; i < 64; ++i) pts.push_back(Vec2(0.5, 0.5) + (i / 63.0) * Vec2(3.0, 2.0));
  const ObjectiveResult r = objective(make_traj(pts), f, cfg);
  CHECK(r.terms.smooth < 1e-20);
  CHECK(r.terms.length == doctest::Approx(cfg.w_len * 13.0 / 63.0).epsilon(1e-12));
  CHECK(r.terms.collision == 0.0);
  CHECK(r.terms.duck == 0.0);
  CHECK(r.cost == r.terms.total());
  CHECK(r.grad.front().isZero());
  CHECK(r.grad.back().isZero());
}

TEST_CASE("objective gradient matches central differences") {
  const Rect2 rect{Vec2(0, 0), Vec2(3, 3)};
  Rng rng(123);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const NeuralField f = random_field(500 + trial, rect);
    PlannerConfig cfg;
    cfg.footprint_samples = 1 + static_cast<int>(rng.below(8));
    cfg.footprint_radius = rng.uniform(0.0, 0.2);
    const int n = 8 + static_cast<int>(rng.below(20));
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0.2, 2.8), rng.uniform(0.2, 2.8));
    const ObjectiveResult r = objective(make_traj(pts), f, cfg);

    Eigen::VectorXd analytic(2 * n), numeric(2 * n);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < 2; ++a) {
        analytic[2 * i + a] = r.grad[i][a];
        if (i == 0 || i == n - 1) {
          numeric[2 * i + a] = 0.0;  // anchors are held fixed
          continue;
        }
        auto lo = pts, hi = pts;
        lo[i][a] -= h;
        hi[i][a] += h;
        numeric[2 * i + a] = (objective(make_traj(hi), f, cfg).cost - objective(make_traj(lo), f, cfg).cost) / (2 * h);
      }
    }
    worst = std::max(worst, (analytic - numeric).norm() / std::max(numeric.norm(), 1e-9));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("objective is linear in the collision weight") {
  const Rect2 rect{Vec2(0, 0), Vec2(3, 3)};
  const NeuralField f = random_field(7, rect);
  std::vector<Vec2> pts;
  for (int i = 0; i < 16; ++i) pts.emplace_back(0.2 + 0.15 * i, 1.0 + 0.3 * std::sin(i));
  PlannerConfig cfg;
  const ObjectiveResult a = objective(make_traj(pts), f, cfg);
  cfg.w_col *= 2.0;
  const ObjectiveResult b = objective(make_traj(pts), f, cfg);
  CHECK(b.terms.collision == 2.0 * a.terms.collision);
  CHECK(b.terms.length == a.terms.length);
  CHECK(b.terms.duck == a.terms.duck);
}

TEST_CASE("optimize straightens a kinked seed in empty space") {
  const TraversabilityGrid g = fixtures::uniform_grid(60, 60, 0.05);
  const Vec2 s(0.3, 0.4), e(2.7, 1.3);
  const Trajectory seed = seed_path(g, s, e, PlanMode::kHat, 64);
  PlannerConfig cfg;
  cfg.seed = 3;
  const OptimizeResult r = optimize(seed, g, PlanMode::kHat, cfg);
  CHECK(r.trajectory.waypoints.front().position == s);
  CHECK(r.trajectory.waypoints.back().position == e);
  CHECK(r.trajectory.valid());
  CHECK(r.trajectory.length() <= 1.01 * (e - s).norm());
  CHECK(r.cost_history.size() == static_cast<std::size_t>(r.outer_iterations_run));
  CHECK(r.cost_history.back() <= r.cost_history.front());
  CHECK_FALSE(r.warning);
}

TEST_CASE("optimize descends monotonically on a fixed field") {
  const TraversabilityGrid g = arch_grid();
  const Trajectory seed = seed_path(g, {1.5, 0.5}, {1.5, 2.5}, PlanMode::kHat, 32);
  PlannerConfig cfg;
  cfg.field_steps = 0;
  cfg.outer_iterations = 60;
  const OptimizeResult r = optimize(seed, g, PlanMode::kHat, cfg);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1] + 1e-9);
}

TEST_CASE("optimize on the arch scene: modes, feasibility, determinism") {
  const TraversabilityGrid g = arch_grid();
  const Vec2 s(1.5, 0.5), e(1.5, 2.5);
  PlannerConfig cfg;
  cfg.seed = 11;
  cfg.n_waypoints = 32;
  cfg.outer_iterations = 100;
  const OptimizeResult hat = optimize(seed_path(g, s, e, PlanMode::kHat, 32), g, PlanMode::kHat, cfg);
  const OptimizeResult flat = optimize(seed_path(g, s, e, PlanMode::kFlat2d, 32), g, PlanMode::kFlat2d, cfg);

  bool crosses_band = false;
  for (const auto& w : hat.trajectory.waypoints) {
    const CellAnalysis* c = g.lookup(w.position);
    REQUIRE(c != nullptr);
    CHECK(passable_for(*c, PlanMode::kHat));
    crosses_band |= c->cls == CellClass::kDuck;
  }
  CHECK(crosses_band);
  for (const auto& w : flat.trajectory.waypoints) CHECK(g.lookup(w.position)->cls == CellClass::kFree);
  CHECK(hat.trajectory.length() < flat.trajectory.length());
  CHECK(hat.trajectory.waypoints.front().position == s);
  CHECK(flat.trajectory.waypoints.back().position == e);
  CHECK(hat.cost_history.back() <= hat.cost_history.front());

  const OptimizeResult again = optimize(seed_path(g, s, e, PlanMode::kHat, 32), g, PlanMode::kHat, cfg);
  CHECK(again.cost_history == hat.cost_history);
  for (std::size_t i = 0; i < hat.trajectory.waypoints.size(); ++i) {
    CHECK(again.trajectory.waypoints[i].position == hat.trajectory.waypoints[i].position);
  }
}

TEST_CASE("annotate_heights") {
  const RobotProfile profile;
  SUBCASE("all-free path holds h_max") {
    const TraversabilityGrid g = fixtures::uniform_grid(40, 10, 0.05);
    std::vector<Vec2> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(0.1 + 0.06 * i, 0.25);
    const Trajectory t = annotate_heights(make_traj(pts), g, profile, 0.2);
    for (const auto& w : t.waypoints) CHECK(w.body_height == profile.h_max);
  }

  // 1D corridor: duck band x in [2.0, 2.5) with required 0.18.
  TraversabilityGrid g = fixtures::uniform_grid(100, 1, 0.05);
  for (int x = 40; x < 50; ++x) {
    auto& c = g.at({x, 0});
    c.cls = CellClass::kDuck;
    c.required_height = 0.18;
    c.clearance = 0.20;
  }
  std::vector<Vec2> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(0.05 * i, 0.025);
  const Trajectory line = make_traj(pts);

  SUBCASE("ramps of 0.6 m on either side of the band") {
    const Trajectory t = annotate_heights(line, g, profile, 0.2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double x = pts[i].x();
      // Hand-derived profile: 0.18 inside, rising at 0.2 m/m away from the band.
      double expect = 0.30;
      if (x >= 2.0 && x < 2.5) {
        expect = 0.18;
      } else if (x < 2.0) {
        expect = std::min(0.30, 0.18 + 0.2 * (2.0 - x));
      } else {
        expect = std::min(0.30, 0.18 + 0.2 * (x - 2.45));
      }
      CHECK(t.waypoints[i].body_height == doctest::Approx(expect).epsilon(1e-9));
    }
    CHECK(t.waypoints[28].body_height == doctest::Approx(0.30));  // the ramp starts at x = 1.4
    CHECK(t.waypoints[36].body_height == doctest::Approx(0.22));
  }
  SUBCASE("unbounded slope gives the step profile") {
    const Trajectory t = annotate_heights(line, g, profile, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double expect = (pts[i].x() >= 2.0 && pts[i].x() < 2.5) ? 0.18 : 0.30;
      CHECK(t.waypoints[i].body_height == expect);
    }
  }
  SUBCASE("blocked waypoint") {
    g.at({70, 0}).cls = CellClass::kBlocked;
    CHECK(error_code_of([&] { annotate_heights(line, g, profile, 0.2); }) == ErrorCode::kWaypointBlocked);
  }
}

TEST_CASE("height validity on random paths over a segmented room") {
  const RobotProfile profile;
  const TraversabilityGrid g = inflate(segment(voxelize(gen_scene(fixtures::room_scene()), 0.05), profile), 0.1);
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 40; ++trial) {
    const Vec2 s(rng.uniform(0.1, 4.9), rng.uniform(0.1, 4.9));
    const Vec2 e(rng.uniform(0.1, 4.9), rng.uniform(0.1, 4.9));
    Trajectory t;
    try {
      t = seed_path(g, s, e, PlanMode::kHat, 64);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const double slope = rng.uniform(0.05, 0.5);
    const Trajectory a = annotate_heights(t, g, profile, slope);
    for (std::size_t i = 0; i < a.waypoints.size(); ++i) {
      const double h = a.waypoints[i].body_height;
      const CellAnalysis* c = g.lookup(a.waypoints[i].position);
      CHECK(h >= profile.h_min);
      CHECK(h <= profile.h_max);
      CHECK(h <= c->clearance - profile.safety_margin + 1e-12);
      if (i > 0) {
        const double dist = (a.waypoints[i].position - a.waypoints[i - 1].position).norm();
        CHECK(std::abs(h - a.waypoints[i - 1].body_height) <= slope * dist + 1e-12);
      }
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("path_metrics") {
  const TimeModel model;
  SUBCASE("straight 3.6 m path") {
    std::vector<Vec2> pts;
    for (int i = 0; i <= 36; ++i) pts.emplace_back(0.1 * i, 0.0);
    const PathMetrics m = path_metrics(make_traj(pts), model);
    CHECK(m.length == doctest::Approx(3.6));
    CHECK(m.max_curvature == doctest::Approx(0.0));
    CHECK(m.est_time == doctest::Approx(18.0));
    CHECK(m.duck_fraction == 0.0);
  }
  SUBCASE("right-angle corner") {
    const PathMetrics m = path_metrics(make_traj({{0, 0}, {1, 0}, {1, 1}}), model);
    CHECK(m.max_curvature == doctest::Approx(M_PI / 2));
    CHECK(m.est_time == doctest::Approx(2.0 / 0.2 + 2.0 * M_PI / 2));
  }
  SUBCASE("regular polygon approaches 1/R") {
    const double r = 1.7;
    std::vector<Vec2> pts;
    for (int i = 0; i <= 64; ++i) pts.emplace_back(r * std::cos(2 * M_PI * i / 64), r * std::sin(2 * M_PI * i / 64));
    const PathMetrics m = path_metrics(make_traj(pts), model);
    CHECK(std::abs(m.max_curvature * r - 1.0) < 0.05);
  }
  SUBCASE("duck fraction and transitions") {
    Trajectory t = make_traj({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}});
    const double hs[] = {0.30, 0.30, 0.20, 0.20, 0.30};
    for (int i = 0; i < 5; ++i) t.waypoints[i].body_height = hs[i];
    const PathMetrics m = path_metrics(t, model);
    // Segment weights 0, 0.5, 1, 0.5 over 4 m.
    CHECK(m.duck_fraction == doctest::Approx(0.5));
    CHECK(m.est_time == doctest::Approx(4.0 / 0.2 + 2.0 * 2));
  }
  SUBCASE("errors") {
    CHECK(error_code_of([] { path_metrics(make_traj({{0, 0}, {1, 0}}), TimeModel{}); }) ==
          ErrorCode::kTooFewWaypoints);
  }
}
