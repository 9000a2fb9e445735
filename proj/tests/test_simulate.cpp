#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "monopose/simulate.hpp"
#include "test_support.hpp"

using namespace monopose;
using namespace monopose::testing;

TEST_CASE("generate_scene: zero motion, zero noise gives identical pixels") {
  SceneSpec spec;
  spec.noise_sigma_px = 0;
  spec.n_outliers = 0;
  spec.seed = 1;
  const GeneratedScene scene = generate_scene(spec);
  CHECK(scene.matches.size() == 100);
  for (const auto& m : scene.matches) {
    CHECK(m.a == m.b);
  }
}

TEST_CASE("generate_scene: determinism and composition") {
  SceneSpec spec;
  spec.randomize_motion = true;
  spec.seed = 17;
  const GeneratedScene a = generate_scene(spec);
  const GeneratedScene b = generate_scene(spec);
  REQUIRE(a.matches.size() == b.matches.size());
  for (std::size_t i = 0; i < a.matches.size(); ++i) {
    CHECK(a.matches[i].a == b.matches[i].a);
    CHECK(a.matches[i].b == b.matches[i].b);
  }
  CHECK(a.truth.rotation == b.truth.rotation);
  CHECK(a.truth.translation == b.truth.translation);

  CHECK(a.matches.size() == std::size_t(spec.n_far + spec.n_near + spec.n_outliers));
  int far = 0, near = 0, outlier = 0;
  for (const auto kind : a.truth.kind) {
    if (kind == PointKind::Far) ++far;
    if (kind == PointKind::Near) ++near;
    if (kind == PointKind::Outlier) ++outlier;
  }
  CHECK(far == spec.n_far);
  CHECK(near == spec.n_near);
  CHECK(outlier == spec.n_outliers);
}

TEST_CASE("generate_scene: all projections land inside the image") {
  SceneSpec spec;
  spec.randomize_motion = true;
  spec.noise_sigma_px = 0;
  spec.seed = 5;
  const GeneratedScene scene = generate_scene(spec);
  for (const auto& m : scene.matches) {
    CHECK(m.a.x() >= 0);
    CHECK(m.a.x() < spec.image_width);
    CHECK(m.a.y() >= 0);
    CHECK(m.a.y() < spec.image_height);
    CHECK(m.b.x() >= 0);
    CHECK(m.b.x() < spec.image_width);
  }
}

TEST_CASE("generate_scene: geometry obeys the motion model") {
  SceneSpec spec;
  spec.rot_true_deg = {7, -3, 2};
  spec.t_true = {0.2, -0.1, 0.3};
  spec.noise_sigma_px = 0;
  spec.n_outliers = 0;
  spec.n_far = 10;
  spec.n_near = 10;
  spec.seed = 6;
  const GeneratedScene scene = generate_scene(spec);
  // reference rotation from the independent composition oracle
  const Eigen::Matrix3d r_ref = euler_oracle(7, -3, 2);
  CHECK((scene.truth.rotation - r_ref).cwiseAbs().maxCoeff() < 1e-12);
  // each frame-B bearing must satisfy lambda' n' = lambda R^T n - T for
  // some positive depths; equivalently n' x (R^T n * l - T) = 0
  for (const auto& m : scene.matches) {
    const Eigen::Vector3d n = lift(spec.intrinsics, Eigen::Vector2d(m.a)).n;
    const Eigen::Vector3d np = lift(spec.intrinsics, Eigen::Vector2d(m.b)).n;
    // coplanarity of n', R^T n and T (two-view constraint)
    const Eigen::Vector3d rtn = scene.truth.rotation.transpose() * n;
    CHECK(std::abs(np.dot(rtn.cross(scene.truth.translation))) < 1e-12);
  }
}

TEST_CASE("generate_scene: invalid specs and impossible frusta") {
  SceneSpec spec;
  spec.near_depth = {4.0, 1.0};
  CHECK_THROWS_AS(generate_scene(spec), Error);

  SceneSpec tight;
  tight.t_true = {0.0, 0.0, 500.0};  // motion far beyond every sampled point
  tight.noise_sigma_px = 0;
  CHECK_THROWS_AS(generate_scene(tight), FrustumTooTight);
}

TEST_CASE("generate_scene: grid-search oracle confirms the generator's rotation") {
  SceneSpec spec;
  spec.rot_true_deg = {3.25, -1.5, 2.75};
  spec.t_true = {0, 0, 0};
  spec.noise_sigma_px = 0;
  spec.n_outliers = 0;
  spec.n_far = 40;
  spec.n_near = 0;
  spec.seed = 8;
  const GeneratedScene scene = generate_scene(spec);
  std::vector<DirectionPaird> pairs;
  for (const auto& m : scene.matches) {
    pairs.push_back({lift(spec.intrinsics, Eigen::Vector2d(m.a)).n,
                     lift(spec.intrinsics, Eigen::Vector2d(m.b)).n, m.id});
  }
  // exhaustive 0.25-degree grid over a +-2 degree cube around the truth
  double best = 1e300;
  Eigen::Vector3d best_angles;
  for (double da = -2; da <= 2.001; da += 0.25) {
    for (double db = -2; db <= 2.001; db += 0.25) {
      for (double dg = -2; dg <= 2.001; dg += 0.25) {
        const Eigen::Matrix3d r =
            euler_oracle(3.25 + da, -1.5 + db, 2.75 + dg);
        double cost = 0;
        for (const auto& p : pairs) {
          cost += (r.transpose() * p.n - p.n_prime).squaredNorm();
        }
        if (cost < best) {
          best = cost;
          best_angles = {da, db, dg};
        }
      }
    }
  }
  CHECK(best_angles.cwiseAbs().maxCoeff() <= 0.25 + 1e-12);  // within one cell
}

TEST_CASE("run_monte_carlo: bit-identical reports for identical inputs") {
  SceneSpec spec;
  spec.randomize_motion = true;
  spec.seed = 99;
  PipelineConfigd cfg;
  const SimulationReport a = run_monte_carlo(spec, cfg, 20);
  const SimulationReport b = run_monte_carlo(spec, cfg, 20);
  CHECK(a.n_trials == b.n_trials);
  CHECK(a.avg_matches == b.avg_matches);
  CHECK(a.mean_abs_rot_err_deg == b.mean_abs_rot_err_deg);
  CHECK(a.mean_t_dir_err_deg == b.mean_t_dir_err_deg);
  CHECK(a.n_rotation_failures == b.n_rotation_failures);
  CHECK(a.n_translation_failures == b.n_translation_failures);
}

TEST_CASE("run_monte_carlo: noiseless outlier-free errors vanish") {
  SceneSpec spec;
  spec.noise_sigma_px = 0;
  spec.n_outliers = 0;
  // idealized far points and an epipole outside the frustum: exactness needs
  // genuinely translation-free rotation carriers and nonzero parallax on
  // every near point
  spec.far_depth = {1e10, 2e10};
  spec.rot_true_deg = {3, -2, 4};
  spec.t_true = {0.4, 0.1, 0.12};
  spec.seed = 100;
  PipelineConfigd cfg;
  const SimulationReport report = run_monte_carlo(spec, cfg, 25);
  CHECK(report.mean_abs_rot_err_deg.maxCoeff() < 1e-6);
  CHECK(report.mean_t_dir_err_deg < 1e-6);
  CHECK(report.n_rotation_failures == 0);
  CHECK(report.n_translation_failures == 0);
  CHECK(report.avg_matches == doctest::Approx(100.0));
}

TEST_CASE("run_monte_carlo: rotation error grows with the noise level") {
  PipelineConfigd cfg;
  double previous = -1.0;
  for (const double sigma : {0.1, 0.4, 1.6}) {
    SceneSpec spec;
    spec.randomize_motion = true;
    spec.noise_sigma_px = sigma;
    spec.seed = 101;
    const SimulationReport report = run_monte_carlo(spec, cfg, 200);
    const double level = report.mean_abs_rot_err_deg.sum();
    CHECK(level > previous);
    previous = level;
  }
}

TEST_CASE("run_monte_carlo: unbiased per-axis errors on noiseless trials") {
  // signed means over exact-recovery trials must vanish
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> ang(-12.0, 12.0);
  Eigen::Vector3d signed_sum = Eigen::Vector3d::Zero();
  const int trials = 500;
  for (int i = 0; i < trials; ++i) {
    SceneSpec spec;
    spec.noise_sigma_px = 0;
    spec.n_outliers = 0;
    spec.n_far = 20;
    spec.n_near = 5;
    spec.rot_true_deg = {ang(rng), ang(rng), ang(rng)};
    spec.seed = 7000 + i;
    const GeneratedScene scene = generate_scene(spec);
    PipelineConfigd cfg;
    cfg.ransac.rng_seed = i;
    const PoseEstimated pose = estimate_pose<double>(spec.intrinsics, scene.matches, cfg);
    signed_sum += rotation_error_deg(pose.rotation, scene.truth.rotation);
  }
  CHECK((signed_sum / trials).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("run_monte_carlo: failure accounting") {
  SceneSpec spec;
  spec.randomize_motion = true;
  spec.noise_sigma_px = 12.0;  // drown the far points in noise
  spec.n_outliers = 40;
  spec.seed = 102;
  PipelineConfigd cfg;
  cfg.ransac.max_iterations = 60;
  const SimulationReport report = run_monte_carlo(spec, cfg, 30);
  CHECK(report.n_trials == 30);
  CHECK(report.n_rotation_failures >= 0);
  CHECK(report.n_rotation_failures <= 30);
  CHECK(report.n_translation_failures <= 30);
  CHECK(report.mean_abs_rot_err_deg.minCoeff() >= 0.0);
  CHECK(report.mean_t_dir_err_deg >= 0.0);
}

TEST_CASE("run_monte_carlo: rejects a zero trial count") {
  SceneSpec spec;
  PipelineConfigd cfg;
  CHECK_THROWS_AS(run_monte_carlo(spec, cfg, 0), Error);
}
