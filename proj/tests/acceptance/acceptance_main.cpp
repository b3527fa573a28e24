// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dynaboost/boosting.hpp"
#include "dynaboost/controllers.hpp"
#include "dynaboost/harness/comparator.hpp"
#include "dynaboost/harness/episode.hpp"
#include "dynaboost/harness/experiments.hpp"
#include "dynaboost/harness/stats.hpp"

#ifndef DYNABOOST_CLI
#error "DYNABOOST_CLI must name the command-line binary"
#endif

using namespace dynaboost;
using namespace dynaboost::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec normal_vec(RngStream& rng, Index n, double scale = 1.0) { return gaussian(rng, Vec::Zero(n), scale); }

std::vector<Vec> normal_vecs(RngStream& rng, int count, Index n, double scale = 1.0) {
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.push_back(normal_vec(rng, n, scale));
  return out;
}

// ---------------------------------------------------------------- 1

class Constant : public WeakController {
 public:
  explicit Constant(std::shared_ptr<Vec> v) : WeakController(BallSet(1e9, v->size())), v_(std::move(v)) {}
  Vec act(const Observation&) const override { return *v_; }
  void receive_loss(const ResidualLoss&, const LossHistory&) override {}
  std::size_t parameter_count() const override { return 0; }

 private:
  std::shared_ptr<Vec> v_;
};

Outcome combination_identity() {
  RngStream rng(101);
  const Index d = 3;
  double worst = 0.0;
  for (int n = 1; n <= 20; ++n) {
    std::vector<std::shared_ptr<Vec>> outputs;
    std::vector<std::unique_ptr<WeakController>> learners;
    for (int i = 0; i < n; ++i) {
      outputs.push_back(std::make_shared<Vec>(Vec::Zero(d)));
      learners.push_back(std::make_unique<Constant>(outputs.back()));
    }
    Booster booster(BoostVariant::kDynaBoost1, std::move(learners), 2, d);
    const Vec x = Vec::Zero(d);
    const std::vector<Vec> w(2, Vec::Zero(d));
    for (int set = 0; set < 100; ++set) {
      Vec expected = Vec::Zero(d);
      for (int i = 1; i <= n; ++i) {
        *outputs[static_cast<std::size_t>(i - 1)] = normal_vec(rng, d, 2.0);
        expected += 2.0 * i / (n * (n + 1.0)) * *outputs[static_cast<std::size_t>(i - 1)];
      }
      const Vec got = booster.act(Observation{x, w}).action;
      worst = std::max(worst, (got - expected).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-12, fmt("max |u_N - sum gamma_i a_i| = %.2e over N=1..20 x 100 sets (tol 1e-12)", worst)};
}

// ---------------------------------------------------------------- 2

constexpr double kFdStep = 1e-5;

Vec fd_gradient(const std::function<double(const Vec&)>& f, Vec x) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kFdStep;
    const double up = f(x);
    x[i] = keep - kFdStep;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * kFdStep);
  }
  return g;
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-8); }

Vec concat(const std::vector<Vec>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec out(n);
  Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

std::vector<Vec> split(const Vec& v, int count) {
  const Index n = v.size() / count;
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.push_back(v.segment(i * n, n));
  return out;
}

Mat spd(RngStream& rng, Index n) {
  Mat l(n, n);
  for (Index i = 0; i < l.size(); ++i) l.data()[i] = rng.normal();
  return l * l.transpose() + 0.2 * Mat::Identity(n, n);
}

Outcome gradient_oracles() {
  RngStream rng(202);
  const int H = 5, points = 100;
  double proxy_err = 0.0, gpc_err = 0.0, rnn_err = 0.0;
  for (int p = 0; p < points; ++p) {
    // Proxy loss on a random LDS and on the pendulum.
    const SystemModel lds = random_lds(rng, 3, 2, 0.9);
    const QuadraticCost lc(spd(rng, 3), spd(rng, 2));
    const auto lw = normal_vecs(rng, H - 1, 3);
    const ProxyLossContext lctx(lds, lc, H, lw);
    const Vec lu = concat(normal_vecs(rng, H, 2));
    proxy_err = std::max(proxy_err, rel(concat(proxy_window_grad(lctx, split(lu, H))),
                                        fd_gradient([&](const Vec& v) { return eval_proxy(lctx, split(v, H)); }, lu)));

    const SystemModel pend = PendulumSystem();
    const QuadraticCost pc = QuadraticCost::identity(2, 1);
    const auto pw = normal_vecs(rng, H - 1, 2, 0.05);
    const ProxyLossContext pctx(pend, pc, H, pw);
    Vec pu(H);
    for (Index i = 0; i < H; ++i) pu[i] = 1.6 * rng.uniform() - 0.8;
    proxy_err = std::max(proxy_err, rel(concat(proxy_window_grad(pctx, split(pu, H))),
                                        fd_gradient([&](const Vec& v) { return eval_proxy(pctx, split(v, H)); }, pu)));

    // Shared residual loss and history for the learners.
    const Index k = 3, d = 2;
    const auto hw = normal_vecs(rng, 2 * H - 1, k);
    const auto hx = normal_vecs(rng, H, k);
    const LossHistory history(H, hw, hx);
    ResidualLoss loss = LinearResidualLoss(normal_vecs(rng, H, d));
    if (p % 2 == 1) loss = QuadraticResidualLoss(normal_vecs(rng, H, d), normal_vecs(rng, H, d), 0.5 + rng.uniform());
    auto total = [&](const WeakController& c) {
      std::vector<Vec> u;
      for (int j = 0; j < H; ++j) u.push_back(c.act(history.observation(j)));
      return eval_residual(loss, u);
    };

    GpcController gpc(k, d, BallSet(1e9, d), GpcOptions{H, 1e9, {LearningRate::Kind::kConstant, 0.1}});
    std::vector<Mat> m;
    for (int i = 0; i < H; ++i) {
      Mat b(d, k);
      for (Index e = 0; e < b.size(); ++e) b.data()[e] = 0.3 * rng.normal();
      m.push_back(b);
    }
    gpc.set_M(m);
    auto flat_m = [&](const std::vector<Mat>& blocks) {
      std::vector<Vec> parts;
      for (const auto& b : blocks) parts.push_back(Eigen::Map<const Vec>(b.data(), b.size()));
      return concat(parts);
    };
    GpcController probe = gpc;
    const Vec gpc_fd = fd_gradient(
        [&](const Vec& v) {
          std::vector<Mat> blocks;
          for (int i = 0; i < H; ++i) blocks.push_back(Eigen::Map<const Mat>(v.data() + i * d * k, d, k));
          probe.set_M(blocks);
          return total(probe);
        },
        flat_m(m));
    gpc_err = std::max(gpc_err, rel(flat_m(gpc.parameter_gradient(loss, history)), gpc_fd));

    RecurrentOptions opt;
    opt.memory = H;
    opt.hidden = 4;
    opt.init_scale = 0.8;
    RecurrentController rnn(k, d, BallSet(1e9, d), opt, rng);
    const ElmanWeights w0 = rnn.weights();
    RecurrentController rprobe = rnn;
    const Vec rnn_fd = fd_gradient(
        [&](const Vec& v) {
          rprobe.set_weights(w0.unflatten(v));
          return total(rprobe);
        },
        w0.flatten());
    rnn_err = std::max(rnn_err, rel(rnn.gradient(loss, history).flatten(), rnn_fd));
  }
  const bool ok = proxy_err <= 1e-5 && gpc_err <= 1e-5 && rnn_err <= 1e-4;
  return {ok, fmt("max rel error proxy %.2e, gpc %.2e (tol 1e-5), rnn %.2e (tol 1e-4), %d points each", proxy_err,
                  gpc_err, rnn_err, points)};
}

// ---------------------------------------------------------------- 3

Outcome dare_correctness() {
  // Scalar fixed-point oracle: P <- 1 + P - P^2 / (1 + P).
  double p = 1.0;
  for (int i = 0; i < 200; ++i) p = 1.0 + p - p * p / (1.0 + p);
  const auto sol = solve_dare(Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1));
  const double golden = (1 + std::sqrt(5.0)) / 2;
  const double scalar_err = std::max(std::abs(sol.P(0, 0) - golden), std::abs(sol.P(0, 0) - p));

  RngStream rng(303);
  const double tol = 1e-12;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Index k = 1 + static_cast<Index>(rng.uniform() * 5);
    const Index d = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(k));
    Mat a(k, k), b(k, d);
    for (Index e = 0; e < a.size(); ++e) a.data()[e] = rng.normal() / std::sqrt(static_cast<double>(k));
    for (Index e = 0; e < b.size(); ++e) b.data()[e] = rng.normal();
    const Mat q = Mat::Identity(k, k), r = Mat::Identity(d, d);
    const auto s = solve_dare(a, b, q, r, tol);
    // Residual of the Riccati equation, computed here from scratch.
    const Mat bpa = b.transpose() * s.P * a;
    const Mat rhs = q + a.transpose() * s.P * a - bpa.transpose() * (r + b.transpose() * s.P * b).inverse() * bpa;
    worst = std::max(worst, (rhs - s.P).cwiseAbs().maxCoeff() / std::max(1.0, s.P.cwiseAbs().maxCoeff()));
  }
  const bool ok = scalar_err <= 1e-9 && worst <= 10 * tol;
  return {ok, fmt("|P - golden ratio| = %.2e (tol 1e-9); max relative residual on 50 systems %.2e (tol %.0e)",
                  scalar_err, worst, 10 * tol)};
}

// ---------------------------------------------------------------- 4, 5

// Frozen target l(u) = |u - u*|^2 over the ball of radius 1 in R^3.
struct Frozen {
  Vec target;
  double excess(const Vec& u) const { return (u - target).squaredNorm(); }
  Vec gradient(const Vec& u) const { return 2.0 * (u - target); }
};

Outcome contraction() {
  RngStream rng(404);
  const BallSet ball(1.0, 3);
  const double alpha = 0.5, beta = 2.0;  // l is 2-smooth and (at least) 0.5-strongly convex
  const auto eta = step_lengths(BoostVariant::kDynaBoost2, 10, alpha, beta);
  double worst_slack = -1e300;
  for (int trial = 0; trial < 200; ++trial) {
    const Frozen f{project_to_ball(normal_vec(rng, 3), ball)};
    Vec u = Vec::Zero(3);
    const double initial = f.excess(u);
    for (int i = 1; i <= 10; ++i) {
      const double e = eta[static_cast<std::size_t>(i - 1)];
      const QuadraticResidualLoss loss({f.gradient(u)}, {u}, e * beta / 2);
      // Perfect oracle: the isotropic quadratic's minimizer over the ball is
      // the projection of its unconstrained minimizer.
      const Vec best = project_to_ball(u - f.gradient(u) / (e * beta), ball);
      const Vec probe = project_to_ball(normal_vec(rng, 3), ball);
      if (eval_quad_residual(loss, std::vector<Vec>{best}) > eval_quad_residual(loss, std::vector<Vec>{probe}) + 1e-12) {
        return {false, "oracle is not a minimizer"};
      }
      u = (1 - e) * u + e * best;
      worst_slack = std::max(worst_slack, f.excess(u) - (std::pow(1 - alpha / beta, i) * initial + 1e-9));
    }
  }
  return {worst_slack <= 0.0, fmt("max over 200 targets, i<=10 of excess_i - (0.75^i excess_0 + 1e-9) = %.3e", worst_slack)};
}

Outcome frank_wolfe_shape() {
  RngStream rng(505);
  const BallSet ball(1.0, 3);
  const std::vector<int> ns{2, 4, 8, 16};
  std::vector<double> scaled(ns.size(), 0.0);
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const Frozen f{project_to_ball(normal_vec(rng, 3), ball)};
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const int n = ns[k];
      const auto eta = step_lengths(BoostVariant::kDynaBoost1, n);
      Vec u = Vec::Zero(3);
      for (int i = 1; i <= n; ++i) {
        const LinearResidualLoss loss({f.gradient(u)});
        // Linear oracle over the ball.
        const Vec g = residual_slot_gradient(loss, 0, u);
        const Vec best = g.norm() > 0 ? Vec(-g / g.norm()) : Vec(Vec::Zero(3));
        const double e = eta[static_cast<std::size_t>(i - 1)];
        u = (1 - e) * u + e * best;
      }
      scaled[k] += n * f.excess(u) / trials;
    }
  }
  bool ok = true;
  std::string detail = "mean N*excess_N:";
  for (std::size_t k = 0; k < ns.size(); ++k) {
    ok = ok && scaled[k] <= 2.0 * scaled[0];
    detail += fmt(" N=%d %.4f", ns[k], scaled[k]);
  }
  return {ok, detail + fmt(" (bound 2x N=2 value = %.4f)", 2 * scaled[0])};
}

// ---------------------------------------------------------------- 6, 7

struct Summary {
  std::map<std::string, std::vector<double>> finals;  // per run, sorted by seed
  std::map<std::string, SeriesStats> stats;
  int diverged = 0;
};

Summary summarize_runs(const std::vector<RunResult>& runs) {
  Summary s;
  std::map<std::string, std::vector<std::vector<double>>> costs;
  for (const auto& run : runs) {
    for (const auto& ep : run.episodes) {
      if (ep.diverged) {
        ++s.diverged;
        continue;
      }
      double total = 0.0;
      for (double c : ep.trajectory.costs) total += c;
      s.finals[ep.algorithm].push_back(total / static_cast<double>(ep.trajectory.costs.size()));
      costs[ep.algorithm].push_back(ep.trajectory.costs);
    }
  }
  for (auto& [name, c] : costs) s.stats[name] = aggregate(c);
  return s;
}

double final_mean(const SeriesStats& s) { return s.mean.back(); }

Outcome sanity_check() {
  SuiteOptions opt;
  opt.runs = 20;
  opt.T = 2000;
  bool ok = true;
  std::string detail;
  for (const auto& cfg : sanity_suite(opt)) {
    if (cfg.env.k > 10) continue;
    const auto s = summarize_runs(run_experiment(cfg));
    if (s.diverged > 0) return {false, cfg.name + ": diverged runs"};
    const auto& b = s.stats.at("boosted");
    const auto& l = s.stats.at("lqr");
    const auto& z = s.stats.at("zero");
    const std::size_t t = b.rounds() - 1;
    const double ratio = final_mean(b) / final_mean(l);
    const bool separated = b.ci_hi(t) < z.ci_lo(t) || z.ci_hi(t) < b.ci_lo(t);
    ok = ok && ratio <= 1.15 && separated;
    detail += fmt("%s boosted/lqr %.4f (<=1.15), boosted CI [%.4g, %.4g] vs zero CI [%.4g, %.4g]; ", cfg.name.c_str(),
                  ratio, b.ci_lo(t), b.ci_hi(t), z.ci_lo(t), z.ci_hi(t));
  }
  return {ok, detail};
}

Outcome boosting_improves() {
  SuiteOptions opt;
  opt.runs = 20;
  opt.T = 2000;
  bool ok = true;
  std::string detail;
  for (const auto& cfg : correlated_suite(opt)) {
    const auto s = summarize_runs(run_experiment(cfg));
    if (s.diverged > 0) {
      ok = false;
      detail += cfg.name + ": diverged runs; ";
      continue;
    }
    const auto& b = s.finals.at("boosted");
    const auto& w = s.finals.at("single");
    int wins = 0;
    for (std::size_t i = 0; i < b.size(); ++i) wins += b[i] < w[i] ? 1 : 0;
    const double mb = final_mean(s.stats.at("boosted")), ms = final_mean(s.stats.at("single"));
    const bool pass = mb <= ms && wins >= 16;
    ok = ok && pass;
    detail += fmt("%s %s boosted %.5g vs single %.5g, wins %d/20; ", cfg.name.c_str(), pass ? "ok" : "MISS", mb, ms, wins);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 8

Outcome bounded_memory() {
  ExperimentConfig c;
  c.env = EnvConfig{EnvConfig::Kind::kLds, 1, 1, 0.9, std::nullopt};
  c.disturbance = IidGaussian{0.1, 0.0};
  c.T = 4000;
  c.controller.gpc = GpcConfig{LearningRate::Kind::kAdaptive, 0.2, 1.0, Feedback::kZero};
  const Setup setup = make_setup(c);
  std::map<int, double> eps{{5, 0.0}, {10, 0.0}, {15, 0.0}};
  const int runs = 5;
  for (int run = 0; run < runs; ++run) {
    const auto w = generate_disturbances(c.disturbance, 1, c.T, RngStream(derive_seed(808, static_cast<std::uint64_t>(run))));
    auto agent = make_agent(c, setup, "single", run_seed(c, run));
    const auto ep = run_agent(setup.system, setup.cost, c.H, w, *agent, "single");
    if (ep.diverged) return {false, "GPC run diverged"};
    for (auto& [h, e] : eps) {
      // Rounds t > 15 for every H so the three averages cover the same rounds.
      const auto errs = memory_errors(setup.system, setup.cost, ep.trajectory, h);
      const auto skip = static_cast<std::ptrdiff_t>(15 - h);
      double sum = 0.0;
      for (auto it = errs.begin() + skip; it != errs.end(); ++it) sum += *it;
      e += sum / static_cast<double>(errs.size() - static_cast<std::size_t>(skip)) / runs;
    }
  }
  const double r1 = eps[10] / eps[5], r2 = eps[15] / eps[10];
  return {r1 <= 0.65 && r2 <= 0.65,
          fmt("eps(5)=%.3e eps(10)=%.3e eps(15)=%.3e; ratios %.3f, %.3f (<=0.65)", eps[5], eps[10], eps[15], r1, r2)};
}

// ---------------------------------------------------------------- 9

Outcome regret_shape() {
  SuiteOptions opt;
  opt.runs = 1;
  ExperimentConfig cfg;
  for (const auto& c : correlated_suite(opt)) {
    if (c.name == "sinusoidal_gpc") cfg = c;
  }
  const Setup setup = make_setup(cfg);
  std::vector<double> per_round;
  std::string detail;
  for (int T : {500, 1000, 2000}) {
    cfg.T = T;
    const RunResult run = run_episode(cfg, setup, 0);
    const auto& boosted = run.episodes.front();
    if (boosted.algorithm != "boosted" || boosted.diverged) return {false, "boosted run missing or diverged"};
    double total = 0.0;
    for (double c : boosted.trajectory.costs) total += c;
    const auto best = best_fixed_gpc(boosted.trajectory.disturbances, setup.linear, setup.cost, cfg.H,
                                     cfg.controller.gpc.radius_m);
    per_round.push_back((total - best.cost) / T);
    detail += fmt("T=%d (%.5g - %.5g)/T = %.4e; ", T, total, best.cost, per_round.back());
  }
  const bool ok = per_round[1] < per_round[0] && per_round[2] < per_round[1];
  return {ok, detail + "must decrease"};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "dynaboost_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "exp.yaml";
  std::ofstream(cfg) << "name: repro\n"
                        "env: {type: lds, k: 2, d: 1, rho: 0.9}\n"
                        "disturbance: {type: random_walk, std: 0.3, lo: -1, hi: 1}\n"
                        "T: 300\n"
                        "booster: {variant: dynaboost1}\n"
                        "controller: {type: rnn, hidden: 4, lr: 0.05}\n"
                        "baselines: [lqr, single, zero, overparam]\n"
                        "runs: 4\n"
                        "seed: 99\n";
  for (const char* out : {"a", "b"}) {
    const std::string cmd = std::string("\"") + DYNABOOST_CLI + "\" run --config \"" + cfg.string() + "\" --out \"" +
                            (dir / out).string() + "\" --parallel " + (out[0] == 'a' ? "1" : "3") + " > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, fmt("cli exited with status %d", rc)};
  }
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : {"repro_raw.csv", "repro_aggregate.csv", "repro.svg"}) {
    const std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  fs::remove_all(dir);
  return {same, fmt("two runs (1 and 3 threads) produced %s CSV/SVG output (%zu bytes)", same ? "identical" : "DIFFERENT",
                    bytes)};
}

}  // namespace

int main() {
  report(1, "combination weights", combination_identity);
  report(2, "gradient oracles", gradient_oracles);
  report(3, "riccati solver", dare_correctness);
  report(4, "strongly convex contraction", contraction);
  report(5, "frank-wolfe rate", frank_wolfe_shape);
  report(6, "sanity suite", sanity_check);
  report(7, "boosting beats its weak learner", boosting_improves);
  report(8, "bounded memory decay", bounded_memory);
  report(9, "regret per round shrinks", regret_shape);
  report(10, "reproducibility", reproducibility);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
