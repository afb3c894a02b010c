#include <benchmark/benchmark.h>

#include "msh/dataterm.hpp"
#include "msh/flow.hpp"
#include "msh/kernel.hpp"
#include "msh/multishape.hpp"
#include "msh/synth.hpp"

using namespace msh;

namespace {

Points sphere_points(int level) { return synth::icosphere(level).vertices; }

void bench_gram(benchmark::State& state) {
  auto pts = sphere_points(static_cast<int>(state.range(0)));
  kernel::KernelSpec k{0.7};
  for (auto _ : state) benchmark::DoNotOptimize(kernel::gram(k, pts));
  state.SetItemsProcessed(state.iterations() * pts.rows() * pts.rows());
}
BENCHMARK(bench_gram)->Arg(1)->Arg(2)->Arg(3);

void bench_apply(benchmark::State& state) {
  auto pts = sphere_points(static_cast<int>(state.range(0)));
  kernel::KernelSpec k{0.7};
  Points a = Points::Ones(pts.rows(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernel::apply(k, pts, pts, a));
}
BENCHMARK(bench_apply)->Arg(1)->Arg(2)->Arg(3);

void bench_current_cost_grad(benchmark::State& state) {
  auto mesh = synth::icosphere(static_cast<int>(state.range(0)));
  auto target = synth::icosphere(static_cast<int>(state.range(0)), 1.2);
  kernel::KernelSpec chi{0.45};
  dataterm::CurrentTerm term(mesh.faces, target, chi);
  for (auto _ : state) {
    benchmark::DoNotOptimize(term.cost(mesh.vertices));
    benchmark::DoNotOptimize(term.gradient(mesh.vertices));
  }
}
BENCHMARK(bench_current_cost_grad)->Arg(1)->Arg(2);

void bench_shoot(benchmark::State& state) {
  auto pts = sphere_points(2);
  kernel::KernelSpec k{0.7};
  auto alpha = flow::zero_control(10, static_cast<int>(pts.rows()));
  for (auto& a : alpha) a.setConstant(0.05);
  for (auto _ : state) benchmark::DoNotOptimize(flow::shoot(k, pts, alpha));
}
BENCHMARK(bench_shoot);

multishape::MultiShapeProblem two_ball_problem(multishape::Mode mode) {
  auto balls = synth::two_balls({});
  multishape::MultiShapeProblem p;
  p.complex = geom::make_complex({balls.template_a, balls.template_b});
  p.shape_kernels = {kernel::KernelSpec{0.7}, kernel::KernelSpec{0.7}};
  p.background_kernel = kernel::KernelSpec{0.7};
  kernel::KernelSpec chi{0.45};
  p.shape_terms = {
      std::make_shared<dataterm::CurrentTerm>(balls.template_a.faces, balls.target_a, chi),
      std::make_shared<dataterm::CurrentTerm>(balls.template_b.faces, balls.target_b, chi)};
  p.background_terms = {nullptr, nullptr};
  p.steps = 10;
  p.mode = mode;
  return p;
}

void bench_al_eval_identity(benchmark::State& state) {
  auto p = two_ball_problem(multishape::Mode::identity);
  auto ctrl = multishape::zero_control(p);
  for (auto& a : ctrl.alphas)
    for (auto& t : a) t.setConstant(0.01);
  auto al = multishape::zero_al(p);
  for (auto _ : state) benchmark::DoNotOptimize(multishape::al_eval(p, ctrl, al, true));
}
BENCHMARK(bench_al_eval_identity);

void bench_al_eval_sliding(benchmark::State& state) {
  auto p = two_ball_problem(multishape::Mode::sliding);
  auto ctrl = multishape::zero_control(p);
  for (auto& a : ctrl.alphas)
    for (auto& t : a) t.setConstant(0.01);
  auto al = multishape::zero_al(p);
  for (auto _ : state) benchmark::DoNotOptimize(multishape::al_eval(p, ctrl, al, true));
}
BENCHMARK(bench_al_eval_sliding);

}  // namespace

BENCHMARK_MAIN();
