#include <benchmark/benchmark.h>

#include "dwl/config.hpp"
#include "dwl/gait.hpp"
#include "dwl/learn.hpp"
#include "dwl/nets.hpp"
#include "dwl/sim.hpp"

using namespace dwl;

static void BM_SolveQuintic(benchmark::State& state) {
  gait::QuinticConstraints c{0.0, 0.1, 10.0, 0.1, 0.0, 0.0, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gait::solve_quintic(c));
  }
}
BENCHMARK(BM_SolveQuintic);

static void BM_StepReward(benchmark::State& state) {
  rewards::RewardWeights w;
  rewards::RewardInputs in;
  in.joint_pos.assign(6, 0.1);
  in.joint_vel.assign(6, 0.5);
  in.torques.assign(6, 2.0);
  in.nominal_pose.assign(6, 0.1);
  in.action_t.assign(6, 0.2);
  in.action_tm1.assign(6, 0.1);
  in.action_tm2.assign(6, 0.0);
  in.contact_force = {60.0, 0.0};
  in.mask = {1, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rewards::step_reward(in, w));
  }
}
BENCHMARK(BM_StepReward);

static void BM_SimSubstep(benchmark::State& state) {
  sim::RobotModel model;
  sim::Simulator s(model, sim::TerrainProfile{});
  const auto pose = model.nominal_pose();
  for (auto _ : state) {
    s.substep(pose, 0.002);
  }
}
BENCHMARK(BM_SimSubstep);

static void BM_GruStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  nn::ParamStoreT<float> store;
  RngStream rng(1, 0);
  nn::GruCellT<float> gru;
  gru.init(store, "g", 47, 256, rng);
  auto x = nn::TensorT<float>::filled(batch, 47, 0.1f);
  auto h = nn::TensorT<float>::zeros(batch, 256);
  nn::NoGradGuard ng;
  for (auto _ : state) {
    h = gru.step(x, h);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_GruStep)->Arg(1)->Arg(32)->Arg(256);

static void BM_Gae(benchmark::State& state) {
  const std::size_t T = 24;
  std::vector<double> r(T, 1.0), v(T, 0.5);
  std::vector<std::uint8_t> d(T, 0);
  d[10] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(learn::gae(r, v, d, 0.995, 0.95, 0.3));
  }
}
BENCHMARK(BM_Gae);

static void BM_EnvStep(benchmark::State& state) {
  auto p = config::make_profile("smoke");
  env::PlanarEnv e(p.env, p.robot, p.opts, 1, 0);
  std::vector<double> action(6, 0.0);
  for (auto _ : state) {
    const auto info = e.step(action);
    if (info.done) e.reset();
  }
}
BENCHMARK(BM_EnvStep);

BENCHMARK_MAIN();
