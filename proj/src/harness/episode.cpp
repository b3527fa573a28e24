#include "dynaboost/harness/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dynaboost::harness {

namespace {

constexpr double kBlowUp = 1e12;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::unique_ptr<WeakController> make_learner(const ExperimentConfig& c, const Setup& s,
                                             RngStream& init, int hidden) {
  const BallSet actions(c.action_radius, action_dim(s.system));
  const Index k = state_dim(s.system);
  if (c.controller.kind == ControllerConfig::Kind::kGpc) {
    const auto& g = c.controller.gpc;
    GpcOptions opt{c.H, g.radius_m, LearningRate(g.schedule, g.lr)};
    Mat feedback = g.feedback == Feedback::kLqr ? s.lqr_gain : Mat::Zero(actions.dim(), k);
    return std::make_unique<GpcController>(std::move(feedback), actions, opt);
  }
  const auto& n = c.controller.rnn;
  RecurrentOptions opt{c.H, hidden, n.lr, n.clip_norm, n.init_scale, n.last_slot_only};
  return std::make_unique<RecurrentController>(k, actions.dim(), actions, opt, init);
}

// Hidden size whose parameter count is closest to N weak networks together.
int overparam_hidden(const ExperimentConfig& c, Index k, Index d) {
  const auto target = static_cast<double>(c.N) *
                      static_cast<double>(RecurrentController::parameter_count_for(k, c.controller.rnn.hidden, d));
  int best = c.controller.rnn.hidden;
  double best_gap = 1e300;
  for (int h = 1; h <= 4096; ++h) {
    const auto count = static_cast<double>(RecurrentController::parameter_count_for(k, h, d));
    const double gap = std::abs(count - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = h;
    }
    if (count > target) break;
  }
  return best;
}

}  // namespace

std::uint64_t system_seed(const ExperimentConfig& config) {
  return config.env.system_seed.value_or(derive_seed(config.seed, 1ULL << 40));
}

std::uint64_t run_seed(const ExperimentConfig& config, int run_index) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(run_index));
}

Setup make_setup(const ExperimentConfig& config) {
  validate(config);
  if (config.env.kind == EnvConfig::Kind::kPendulum) {
    PendulumSystem pendulum;
    LinearSystem linear = linearize_upright(pendulum);
    QuadraticCost cost = QuadraticCost::identity(2, 1);
    Mat gain = solve_dare(linear.A(), linear.B(), cost.Q(), cost.R()).K;
    const double bound = DisturbanceGenerator(config.disturbance, 2, RngStream(0)).bound();
    return Setup{pendulum, std::move(cost), std::move(linear), bound, std::move(gain)};
  }
  RngStream rng(system_seed(config));
  LinearSystem linear = random_lds(rng, config.env.k, config.env.d, config.env.rho);
  QuadraticCost cost = QuadraticCost::identity(config.env.k, config.env.d);
  Mat gain = solve_dare(linear.A(), linear.B(), cost.Q(), cost.R()).K;
  const double bound = DisturbanceGenerator(config.disturbance, config.env.k, RngStream(0)).bound();
  return Setup{linear, std::move(cost), linear, bound, std::move(gain)};
}

std::vector<Vec> generate_disturbances(const DisturbanceSpec& spec, Index dim, int rounds,
                                       RngStream rng) {
  DisturbanceGenerator gen(spec, dim, rng);
  std::vector<Vec> w;
  w.reserve(static_cast<std::size_t>(rounds));
  for (int t = 1; t <= rounds; ++t) w.push_back(gen.next(t));
  return w;
}

std::uint64_t hash_disturbances(std::span<const Vec> w) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& v : w) h = fnv1a(h, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  return h;
}

EpisodeResult run_agent(const SystemModel& system, const QuadraticCost& cost, int memory,
                        std::span<const Vec> w, Agent& agent, std::string algorithm) {
  const Index k = state_dim(system);
  EpisodeResult out;
  out.algorithm = std::move(algorithm);
  out.w_hash = hash_disturbances(w);
  out.parameter_count = agent.parameter_count();

  Trajectory& tr = out.trajectory;
  tr.states.reserve(w.size() + 1);
  tr.actions.reserve(w.size());
  tr.disturbances.reserve(w.size());
  tr.costs.reserve(w.size());
  tr.states.push_back(Vec::Zero(k));

  Window inferred(2 * memory - 1, k);  // w_{t-2H+1} .. w_{t-1}
  Window states(memory, k);            // x_{t-H+1} .. x_t
  for (std::size_t t = 0; t < w.size(); ++t) {
    const Vec& x = tr.states.back();
    if (t > 0) inferred.push(infer_disturbance(system, tr.states[t - 1], tr.actions.back(), x));
    states.push(x);

    const Observation obs{x, inferred.newest(memory)};
    Vec u = agent.act(obs);
    tr.costs.push_back(eval_cost(cost, x, u));
    Vec next = step(system, x, u, w[t]);
    tr.actions.push_back(std::move(u));
    tr.disturbances.push_back(w[t]);

    if (!all_finite(next) || next.norm() > kBlowUp) {
      out.diverged = true;
      out.diverged_round = static_cast<long>(t) + 1;
      break;
    }
    tr.states.push_back(std::move(next));

    const ProxyLossContext ctx(system, cost, memory, inferred.newest(memory - 1),
                               static_cast<long>(t) + 1);
    const LossHistory history(memory, inferred.items(), states.items());
    agent.learn(ctx, history);
  }
  return out;
}

std::vector<std::string> algorithm_names(const ExperimentConfig& config) {
  std::vector<std::string> names{"boosted"};
  for (const auto b : config.baselines) names.emplace_back(baseline_name(b));
  return names;
}

std::unique_ptr<Agent> make_agent(const ExperimentConfig& c, const Setup& s,
                                  const std::string& algorithm, std::uint64_t seed) {
  const BallSet actions(c.action_radius, action_dim(s.system));
  const int hidden = c.controller.rnn.hidden;
  if (algorithm == "boosted") {
    std::vector<std::unique_ptr<WeakController>> learners;
    for (int i = 1; i <= c.N; ++i) {
      RngStream init = RngStream::derive(seed, static_cast<std::uint64_t>(i));
      learners.push_back(make_learner(c, s, init, hidden));
    }
    std::optional<double> alpha = c.booster.alpha;
    std::optional<double> beta = c.booster.beta;
    if (c.booster.variant == BoostVariant::kDynaBoost2 && !(alpha && beta)) {
      const auto bounds =
          derive_curvature_bounds(s.linear, s.cost, c.H, s.disturbance_bound, c.action_radius);
      if (!alpha) alpha = bounds.alpha;
      if (!beta) beta = bounds.beta;
    }
    return std::make_unique<BoostedAgent>(
        Booster(c.booster.variant, std::move(learners), c.H, actions.dim(), alpha, beta));
  }
  if (algorithm == "single") {
    RngStream init = RngStream::derive(seed, 1);
    return std::make_unique<LearningAgent>(make_learner(c, s, init, hidden), c.H);
  }
  if (algorithm == "overparam") {
    RngStream init = RngStream::derive(seed, 1000);
    const int big = overparam_hidden(c, state_dim(s.system), actions.dim());
    return std::make_unique<LearningAgent>(make_learner(c, s, init, big), c.H);
  }
  if (algorithm == "lqr") {
    return std::make_unique<FixedAgent>(std::make_unique<LqrController>(s.lqr_gain, actions));
  }
  if (algorithm == "zero") {
    return std::make_unique<FixedAgent>(std::make_unique<ZeroController>(actions));
  }
  throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

RunResult run_episode(const ExperimentConfig& config, const Setup& setup, int run_index) {
  RunResult run;
  run.run_index = run_index;
  run.seed = run_seed(config, run_index);
  const auto w = generate_disturbances(config.disturbance, state_dim(setup.system), config.T,
                                       RngStream::derive(run.seed, 0));
  run.w_hash = hash_disturbances(w);
  for (const auto& name : algorithm_names(config)) {
    auto agent = make_agent(config, setup, name, run.seed);
    run.episodes.push_back(run_agent(setup.system, setup.cost, config.H, w, *agent, name));
    if (run.episodes.back().w_hash != run.w_hash) {
      throw std::logic_error("paired disturbance hash mismatch for " + name);
    }
  }
  return run;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, int parallel) {
  const Setup setup = make_setup(config);
  std::vector<RunResult> runs(static_cast<std::size_t>(config.runs));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < config.runs; i = next++) {
      try {
        runs[static_cast<std::size_t>(i)] = run_episode(config, setup, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(parallel, 1, config.runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  std::sort(runs.begin(), runs.end(),
            [](const RunResult& a, const RunResult& b) { return a.seed < b.seed; });
  return runs;
}

}  // namespace dynaboost::harness
