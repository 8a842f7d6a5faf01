#include <benchmark/benchmark.h>

#include "tutorloop/runner.hpp"
#include "tutorloop/toy_policy.hpp"

namespace {

using namespace tutorloop;

struct Workload {
    std::vector<TaskInstance> tasks;
    std::vector<EpisodeSpec> specs;
    ToySoftmaxPolicy policy{64};
    ScriptedTeacher teacher;
    BatchParams params;

    explicit Workload(int episodes) {
        for (int i = 0; i < 64; ++i)
            tasks.push_back(make_toy_task("bench-" + std::to_string(i), i, 64));
        specs = make_episode_specs(tasks, episodes / 64, 1234);
        params.max_turns = 6;
        params.temperature = 1.0;
    }
};

void BM_rollout_serial(benchmark::State& state) {
    Workload w(static_cast<int>(state.range(0)));
    ToyStudentFactory student(w.policy);
    for (auto _ : state) {
        auto out = run_batch_serial(w.specs, student, w.teacher, w.params);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.specs.size()));
}

void BM_rollout_parallel(benchmark::State& state) {
    Workload w(static_cast<int>(state.range(0)));
    ToyStudentFactory student(w.policy);
    for (auto _ : state) {
        auto out = run_batch_parallel(w.specs, student, w.teacher, w.params, 0);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.specs.size()));
}

}  // namespace

BENCHMARK(BM_rollout_serial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_rollout_parallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
