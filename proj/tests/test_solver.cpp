#include "support.hpp"

using namespace testing;

TEST_CASE("block Cholesky agrees with a dense factorization") {
  std::mt19937_64 rng(31);
  const std::size_t n = 6;
  const int b = 4;
  BlockTridiagonal m(n, b);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(b, b);
    m.diag(i) = x * x.transpose() + 8.0 * Eigen::MatrixXd::Identity(b, b);
    if (i + 1 < n) m.upper(i) = Eigen::MatrixXd::Random(b, b);
  }
  const Eigen::MatrixXd dense = m.to_dense();
  const BlockCholesky chol(m);
  const Eigen::MatrixXd l = chol.dense_factor();
  CHECK((l * l.transpose() - dense).norm() < 1e-12 * dense.norm());
  const Eigen::VectorXd rhs = random_vector(dense.rows(), rng);
  CHECK((chol.solve(rhs) - dense.llt().solve(rhs)).norm() < 1e-12);
}

TEST_CASE("block Cholesky names the first singular block") {
  BlockTridiagonal m(3, 2);
  m.diag(0) = Eigen::Matrix2d::Identity();
  m.diag(1) = Eigen::Matrix2d::Zero();
  m.diag(2) = Eigen::Matrix2d::Identity();
  try {
    BlockCholesky chol(m);
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.block() == 1);
  }
}

TEST_CASE("one distance and no prior is rank deficient at the first block") {
  const ProblemData p(make_anchors(Eigen::MatrixXd::Zero(2, 1)), group_measurements({{0.0, 0, 1.0}}, 1),
                      unit_noise());
  const MotionPrior none = MotionPrior::make(PriorKind::none, 2, 1.0);
  try {
    gn_step(Eigen::Vector2d(0.5, 0.5), p, none);
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.block() == 0);
  }
}

TEST_CASE("Gauss-Newton step equals the dense normal-equation solution") {
  std::mt19937_64 rng(37);
  const ProblemData p = simulate(small_sim(37, 6, 1e-2), unit_noise());
  const MotionPrior prior = MotionPrior::make(PriorKind::constant_velocity, 2, 0.2);
  const int k = prior.state_dim();
  const auto size = static_cast<Eigen::Index>(p.num_times()) * k;
  const Eigen::VectorXd theta = random_vector(size, rng);

  // Dense J and weighted residual of the stacked problem, scaled like the cost.
  const auto& ms = p.measurements();
  const double e_count = static_cast<double>(p.num_measurements());
  const double n_count = static_cast<double>(p.num_times());
  Eigen::MatrixXd jtwj = Eigen::MatrixXd::Zero(size, size);
  Eigen::VectorXd jtwe = Eigen::VectorXd::Zero(size);
  for (std::size_t n = 0; n < ms.num_times(); ++n) {
    const Eigen::VectorXd x = theta.segment(n * k, 2);
    for (std::size_t r = ms.offsets[n]; r < ms.offsets[n + 1]; ++r) {
      const Eigen::VectorXd a = p.anchors().coordinates.col(ms.anchor[r]);
      const double e = ms.distance[r] * ms.distance[r] - (a - x).squaredNorm();
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(size);
      row.segment(n * k, 2) = 2.0 * (x - a).transpose();
      jtwj += p.inv_variance(r) / e_count * row.transpose() * row;
      jtwe += p.inv_variance(r) / e_count * row.transpose() * e;
    }
  }
  const Eigen::MatrixXd r = assemble_R(prior, p.times()).to_dense() / n_count;
  const Eigen::VectorXd expected = (jtwj + r).ldlt().solve(jtwe - r * theta);
  const GnStep step = gn_step(theta, p, prior);
  CHECK((step.delta - expected).norm() < 1e-9 * (1 + expected.norm()));
  CHECK(step.cost == doctest::Approx(total_cost(theta + step.delta, p, prior)));
}

TEST_CASE("noiseless start at the truth is already stationary") {
  for (auto kind : {PriorKind::none, PriorKind::zero_velocity, PriorKind::constant_velocity}) {
    SimConfig sc = small_sim(41, 30, 0.0);
    sc.sigma_a = 0.0;
    if (kind == PriorKind::zero_velocity) sc.velocity_range = 0.0;
    const ProblemData p = simulate(sc, sim_noise(0.0));
    const MotionPrior prior = MotionPrior::make(kind, 2, 0.2);
    const Eigen::VectorXd theta = ground_truth_state(p, prior);
    const GnStep step = gn_step(theta, p, prior);
    CHECK(step.delta.norm() / std::sqrt(double(theta.size())) < 1e-10);

    SolveConfig cfg;
    const TrajectoryEstimate est = solve(p, prior, cfg, theta);
    CHECK(est.converged);
    CHECK(est.iterations <= 2);
    CHECK(est.cost < 1e-20);
  }
}

TEST_CASE("ground-truth init with one restart gives one converged estimate") {
  const ProblemData p = simulate(small_sim(43, 20, 1e-3), sim_noise(1e-3));
  const MotionPrior cv = MotionPrior::make(PriorKind::constant_velocity, 2, 0.2);
  SolveConfig cfg;
  cfg.n_restarts = 1;
  cfg.init = InitStrategy::ground_truth;
  const auto ests = multi_restart(p, cv, cfg);
  REQUIRE(ests.size() == 1);
  CHECK(ests[0].converged);
  CHECK_FALSE(ests[0].diverged);
}

TEST_CASE("same seed gives bitwise identical restarts") {
  const ProblemData p = simulate(small_sim(47, 30, 1e-2), sim_noise(1e-2));
  const MotionPrior cv = MotionPrior::make(PriorKind::constant_velocity, 2, 0.2);
  SolveConfig cfg;
  cfg.rng_seed = 99;
  const auto a = multi_restart(p, cv, cfg);
  const auto b = multi_restart(p, cv, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cost == b[i].cost);
    CHECK(a[i].restart == b[i].restart);
    CHECK(a[i].theta == b[i].theta);
  }
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].cost <= a[i].cost);
}

TEST_CASE("random init draws one position per restart unless asked per time") {
  const ProblemData p = simulate(small_sim(53, 10, 1e-2), sim_noise(1e-2));
  const MotionPrior cv = MotionPrior::make(PriorKind::constant_velocity, 2, 0.2);
  SolveConfig cfg;
  std::mt19937_64 rng(1);
  const Eigen::VectorXd shared = initial_state(p, cv, cfg, rng);
  CHECK(shared.segment(0, 2) == shared.segment(36, 2));
  CHECK(shared.segment(2, 2).isZero(0.0));
  const auto& c = p.anchors().coordinates;
  CHECK((shared.segment(0, 2).array() >= c.rowwise().minCoeff().array()).all());
  CHECK((shared.segment(0, 2).array() <= c.rowwise().maxCoeff().array()).all());
  cfg.init_per_time = true;
  const Eigen::VectorXd per_time = initial_state(p, cv, cfg, rng);
  CHECK(per_time.segment(0, 2) != per_time.segment(36, 2));
}

TEST_CASE("best-cost labels") {
  CHECK(label_by_best_cost({3.0}) == std::vector<CostLabel>{CostLabel::best_cost});
  const auto labels = label_by_best_cost({1.0, 1.0 + 1e-9, 2.0});
  CHECK(labels == std::vector<CostLabel>{CostLabel::best_cost, CostLabel::best_cost, CostLabel::suboptimal});
  const auto zeros = label_by_best_cost({0.0, 1e-13, 1e-6, std::nan("")});
  CHECK(zeros == std::vector<CostLabel>{CostLabel::best_cost, CostLabel::best_cost, CostLabel::suboptimal,
                                        CostLabel::suboptimal});
}

TEST_CASE("near-colinear anchors produce several cost clusters") {
  int with_clusters = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SimConfig sc = small_sim(200 + seed, 100, 1e-3);
    sc.placement = AnchorPlacement::near_colinear;
    const ProblemData p = simulate(sc, sim_noise(1e-3));
    const MotionPrior cv = MotionPrior::make(PriorKind::constant_velocity, 2, 0.2);
    SolveConfig cfg;
    cfg.rng_seed = seed;
    std::vector<double> costs;
    for (const auto& e : multi_restart(p, cv, cfg)) costs.push_back(e.cost);
    const auto labels = label_by_best_cost(costs, 1e-4);
    with_clusters += std::count(labels.begin(), labels.end(), CostLabel::suboptimal) > 0;
  }
  CHECK(with_clusters >= 1);
}

TEST_CASE("solve config validation") {
  SolveConfig cfg;
  cfg.n_restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.init = InitStrategy::user_supplied;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(init_strategy_from_string(to_string(InitStrategy::random_in_box)) == InitStrategy::random_in_box);
}
