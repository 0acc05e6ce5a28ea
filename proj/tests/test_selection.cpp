#include <doctest.h>

#include <random>

#include "kafr/selection.hpp"
#include "kafr/synth.hpp"
#include "oracles.hpp"

using namespace kafr;

namespace {

ToolTrack linear_track(FrameIndex n, Point velocity = Point(1, 0), Role role = Role::RightJaw) {
  MotionProfile p;
  p.kind = MotionKind::Linear;
  p.duration = n;
  p.velocity = velocity;
  p.role = role;
  return generate_track(p);
}

SelectionPolicy one_role(Algorithm a, SelectionCriterion c) {
  SelectionPolicy p;
  p.algorithm = a;
  p.roles = {Role::RightJaw};
  p.criterion = c;
  return p;
}

KinematicSeries speed_series(const std::vector<double>& v, Role role = Role::RightJaw) {
  KinematicSeries s{"v", role, {}};
  for (std::size_t i = 0; i < v.size(); ++i) {
    KinematicEntry e;
    e.speed = v[i];
    s.entries.emplace(static_cast<FrameIndex>(i), e);
  }
  return s;
}

}  // namespace

TEST_CASE("stationary tools keep only the first frame") {
  MotionProfile p;
  p.kind = MotionKind::Stationary;
  p.duration = 50;
  const std::vector<ToolTrack> tracks{generate_track(p)};
  for (double b : {0.0, 1e-6, 1.0, 1e6}) {
    const auto k = adaptive1_select(tracks, one_role(Algorithm::Adaptive1, AccumulationBudget{b}));
    CHECK(k.selected == std::vector<FrameIndex>{0});
  }
}

TEST_CASE("budget zero keeps every frame with motion") {
  const std::vector<ToolTrack> tracks{linear_track(20)};
  const auto k = adaptive1_select(tracks, one_role(Algorithm::Adaptive1, AccumulationBudget{0}));
  CHECK(k.selected.size() == 20);
}

TEST_CASE("unit-speed track with budget 6 fires every third frame") {
  const std::vector<ToolTrack> tracks{linear_track(20)};
  const auto k = adaptive1_select(tracks, one_role(Algorithm::Adaptive1, AccumulationBudget{6}));
  CHECK(k.selected == std::vector<FrameIndex>{0, 3, 6, 9, 12, 15, 18});
  CHECK(k.budget == 6.0);
  CHECK(k.achieved_fraction == doctest::Approx(7.0 / 20.0));
}

TEST_CASE("consecutive accumulation sums frame-to-frame steps") {
  auto policy = one_role(Algorithm::Adaptive1, AccumulationBudget{3});
  policy.accumulation = Accumulation::Consecutive;
  const std::vector<ToolTrack> tracks{linear_track(10)};
  CHECK(adaptive1_select(tracks, policy).selected == std::vector<FrameIndex>{0, 3, 6, 9});
}

TEST_CASE("adaptive 2 ignores constant velocity") {
  const std::vector<ToolTrack> tracks{linear_track(40, Point(3, 4))};
  for (double b : {1e-9, 1.0, 50.0}) {
    const auto k = adaptive2_select(tracks, one_role(Algorithm::Adaptive2, AccumulationBudget{b}));
    CHECK(k.selected == std::vector<FrameIndex>{1});  // first speed-bearing frame
  }
}

TEST_CASE("adaptive 2 fires at a speed jump") {
  const std::vector<KinematicSeries> s{speed_series({0, 0, 5, 5, 5, 5})};
  const auto k = adaptive2_select(s, one_role(Algorithm::Adaptive2, AccumulationBudget{5}));
  CHECK(k.selected == std::vector<FrameIndex>{0, 2});
}

TEST_CASE("adaptive 2 on a sinusoidal speed profile matches the brute-force sweep") {
  MotionProfile p;
  p.kind = MotionKind::SinusoidalSpeed;
  p.duration = 200;
  p.base_speed = 3;
  p.speed_amplitude = 2;
  p.speed_period = 40;
  const auto track = generate_track(p);
  const std::vector<ToolTrack> tracks{track};
  auto policy = one_role(Algorithm::Adaptive2, AccumulationBudget{10});
  const auto k = adaptive2_select(tracks, policy);
  const auto want =
      oracle::adaptive2({oracle::speeds(track.samples, kDefaultGapMax)}, 0, 199, 10.0);
  CHECK(k.selected == want);
  CHECK(k.selected.size() > 2);
}

TEST_CASE("sweep matches the brute-force oracle on random tracks") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 150; ++trial) {
    const FrameIndex n = 2 + static_cast<FrameIndex>(u(rng) * 48);
    std::vector<ToolTrack> tracks{oracle::random_track(rng, "v", Role::LeftJaw, n, 0.2, false),
                                  oracle::random_track(rng, "v", Role::RightJaw, n, 0.3, false)};
    const FrameRange r = frame_range_of(tracks);
    SelectionPolicy policy;
    policy.accumulation = trial % 3 == 0 ? Accumulation::Consecutive : Accumulation::Anchored;
    const double b = u(rng) * 60.0;
    policy.criterion = AccumulationBudget{b};
    const bool consecutive = policy.accumulation == Accumulation::Consecutive;

    policy.algorithm = Algorithm::Adaptive1;
    CHECK(adaptive1_select(tracks, policy).selected ==
          oracle::adaptive1({tracks[0].samples, tracks[1].samples}, r.first, r.last, b, consecutive));

    policy.algorithm = Algorithm::Adaptive2;
    policy.criterion = AccumulationBudget{b / 10.0};
    CHECK(adaptive2_select(tracks, policy).selected ==
          oracle::adaptive2({oracle::speeds(tracks[0].samples, kDefaultGapMax),
                             oracle::speeds(tracks[1].samples, kDefaultGapMax)},
                            r.first, r.last, b / 10.0, consecutive));
  }
}

TEST_CASE("missing roles and bad policies are rejected") {
  const std::vector<ToolTrack> tracks{linear_track(10)};
  SelectionPolicy policy;  // both jaws
  policy.criterion = AccumulationBudget{1};
  CHECK_THROWS_AS(adaptive1_select(tracks, policy), Error);
  auto p = one_role(Algorithm::Adaptive2, AccumulationBudget{1});
  CHECK_THROWS_AS(adaptive1_select(tracks, p), Error);
  p = one_role(Algorithm::Adaptive1, AccumulationBudget{-1});
  CHECK_THROWS_AS(adaptive1_select(tracks, p), Error);
  p = one_role(Algorithm::Adaptive1, FThreshold{1.5});
  CHECK_THROWS_AS(adaptive1_select(tracks, p), Error);
  p = one_role(Algorithm::Adaptive1, TargetFraction{0});
  CHECK_THROWS_AS(adaptive1_select(tracks, p), Error);
  CHECK_THROWS_AS(adaptive1_select({}, one_role(Algorithm::Adaptive1, AccumulationBudget{1})), Error);
}

TEST_CASE("f-scale threshold equals the converted budget") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<ToolTrack> tracks{oracle::random_track(rng, "v", Role::RightJaw, 60, 0.1, false)};
    auto policy = one_role(Algorithm::Adaptive1, FThreshold{0.01 + 0.5 * u(rng)});
    policy.beta = 0.05 + 4.95 * u(rng);
    policy.epsilon = 1e-3 * (0.001 + u(rng));
    const double d = std::get<FThreshold>(policy.criterion).value;
    const auto by_threshold = adaptive1_select(tracks, policy);
    policy.criterion = AccumulationBudget{budget_from_threshold(d, policy.beta, policy.epsilon)};
    CHECK(adaptive1_select(tracks, policy).selected == by_threshold.selected);
  }
}

TEST_CASE("selection is deterministic") {
  std::mt19937_64 rng(8);
  const std::vector<ToolTrack> tracks{oracle::random_track(rng, "v", Role::RightJaw, 300, 0.1)};
  const auto policy = one_role(Algorithm::Adaptive1, TargetFraction{0.1});
  CHECK(adaptive1_select(tracks, policy) == adaptive1_select(tracks, policy));
}

TEST_CASE("monotonicity holds for monotone motion and fails in general") {
  // straight-line motion: widening the gap to the anchor never shrinks a term
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    MotionProfile p;
    p.kind = MotionKind::SinusoidalSpeed;
    p.duration = 300;
    p.base_speed = 1 + u(rng);
    p.speed_amplitude = u(rng);
    p.speed_period = 10 + 90 * u(rng);
    const std::vector<ToolTrack> tracks{generate_track(p)};
    const auto problem = make_problem(tracks, one_role(Algorithm::Adaptive1, TargetFraction{}));
    double b1 = u(rng) * 500;
    double b2 = u(rng) * 500;
    if (b1 > b2) std::swap(b1, b2);
    CHECK(problem.count(b1) >= problem.count(b2));
  }

  // a fixed counterexample: the sweep is greedy, so a smaller budget can
  // re-anchor at a worse spot
  ToolTrack t{"v", Role::RightJaw, {}};
  const double xs[] = {0, 3, 1, 3, 3};
  for (int f = 0; f < 5; ++f) t.samples.emplace(f, Point(xs[f], 0));
  const std::vector<ToolTrack> tracks{t};
  const auto problem = make_problem(tracks, one_role(Algorithm::Adaptive1, TargetFraction{}));
  CHECK(problem.count(3.0) == 2);
  CHECK(problem.count(4.0) == 3);
}

TEST_CASE("UFS index rule") {
  CHECK(ufs_select(10, 1.0).selected.size() == 10);
  CHECK(ufs_select(10, 0.1).selected == std::vector<FrameIndex>{0});
  const auto k = ufs_select(100, 0.2);
  REQUIRE(k.selected.size() == 20);
  CHECK(k.selected.front() == 0);
  CHECK(k.selected.back() == 99);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(k.selected[t] == static_cast<FrameIndex>(std::floor(t * 99.0 / 19.0 + 0.5)));
  }
  const auto r = ufs_select(FrameRange{40, 49}, 0.5, "v");
  CHECK(r.selected == std::vector<FrameIndex>{40, 42, 45, 47, 49});
  CHECK(r.video_id == "v");
  CHECK_THROWS_AS(ufs_select(10, 1.5), Error);
}

TEST_CASE("MSE selector") {
  MotionProfile p;
  p.kind = MotionKind::Stationary;
  p.duration = 10;
  p.origin = Point(4, 4);
  auto policy = one_role(Algorithm::MSE, AccumulationBudget{1e-6});
  const auto still = generate_frames(p, 8, 8);
  CHECK(mse_select(still, policy, "s").selected == std::vector<FrameIndex>{0});

  // 2x2 block stepping right by one pixel per frame on an 8x8 canvas
  p.kind = MotionKind::Linear;
  p.origin = Point(1, 3);
  p.velocity = Point(1, 0);
  p.duration = 6;
  p.block_size = 2;
  const auto moving = generate_frames(p, 8, 8);
  policy.criterion = AccumulationBudget{3};
  std::vector<FrameIndex> want{0};
  std::size_t anchor = 0;
  double acc = 0;
  for (std::size_t j = 1; j < moving.size(); ++j) {
    double sum = 0;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const double d = double(moving[anchor].image(y, x)) - double(moving[j].image(y, x));
        sum += d * d;
      }
    }
    acc += sum / 64.0;
    if (acc > 0 && acc >= 3) {
      want.push_back(static_cast<FrameIndex>(j));
      anchor = j;
      acc = 0;
    }
  }
  CHECK(mse_select(moving, policy, "m").selected == want);
}

TEST_CASE("calibration hits the target on a linear track") {
  // brute force over integer budgets: any budget landing on 25 +/- 1 proves
  // the band is reachable
  const std::vector<ToolTrack> tracks{linear_track(100)};
  const auto problem = make_problem(tracks, one_role(Algorithm::Adaptive1, TargetFraction{}));
  bool reachable = false;
  for (int b = 0; b < 5000; ++b) {
    const auto c = problem.count(b);
    reachable = reachable || (c >= 24 && c <= 26);
  }
  REQUIRE(reachable);
  const auto cal = calibrate_threshold(problem, 0.25);
  CHECK(cal.target_count == 25);
  CHECK(cal.selected_count >= 24);
  CHECK(cal.selected_count <= 26);
  CHECK(problem.count(cal.budget) == cal.selected_count);

  const auto full = calibrate_threshold(problem, 1.0);
  CHECK(full.selected_count == 100);
  CHECK(full.achieved_fraction == 1.0);
}

TEST_CASE("calibration reports an unreachable target with its ceiling") {
  ToolTrack t = linear_track(10);
  for (FrameIndex f = 5; f < 10; ++f) t.samples[f] = t.samples[4];  // stops halfway
  const std::vector<ToolTrack> tracks{t};
  const auto problem = make_problem(tracks, one_role(Algorithm::Adaptive1, TargetFraction{}));
  try {
    calibrate_threshold(problem, 0.8);
    FAIL("expected UnreachableTarget");
  } catch (const UnreachableTarget& e) {
    CHECK(e.target() == 0.8);
    CHECK(e.ceiling() == doctest::Approx(0.5));
  }
}

TEST_CASE("corpus calibration pools counts") {
  std::vector<ToolTrack> a{linear_track(200)};
  std::vector<ToolTrack> b{linear_track(200, Point(2, 0))};
  b[0].video_id = "w";
  const auto policy = one_role(Algorithm::Adaptive1, TargetFraction{});
  const std::vector<SweepProblem> problems{make_problem(a, policy), make_problem(b, policy)};
  const auto cal = calibrate_threshold(problems, 0.1);
  CHECK(cal.target_count == 40);
  CHECK(problems[0].count(cal.budget) + problems[1].count(cal.budget) == cal.selected_count);
  CHECK(std::abs(double(cal.selected_count) - 40.0) <= 4.0);
}
