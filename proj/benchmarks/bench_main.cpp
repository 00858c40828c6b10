// SPDX-License-Identifier: Apache-2.0
//
// mbsense: multiband delay estimation with stochastic particle-based VBI
// Copyright (C) 2026 The mbsense authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mbsense/coarse.hpp"
#include "mbsense/experiment.hpp"
#include "mbsense/likelihood.hpp"
#include "mbsense/priors.hpp"
#include "mbsense/spvbi.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mbsense;

namespace
{

struct Setup
{
    ScenarioConfig scenario;
    CsiMeasurement meas;
    RefinedParams refined;
    std::vector<CoarsePrior> priors;
};

const Setup &small_bandwidth()
{
    static const Setup s = [] {
        ScenarioPreset pre = make_preset("small-bandwidth");
        std::mt19937_64 rng(7);
        const ChannelParams truth = draw_truth(pre, rng);
        Setup out;
        out.scenario = pre.scenario;
        out.meas = synthesize_csi(pre.scenario, truth, rng());
        out.refined = to_refined(truth, pre.scenario);
        CoarseOptions opt;
        opt.model_order = truth.paths.size();
        out.priors = build_priors(run_coarse(out.meas, opt), pre.scenario, pre.width);
        return out;
    }();
    return s;
}

void BM_LogLikelihood(benchmark::State &state)
{
    const Setup &s = small_bandwidth();
    const RefinedLikelihood lik(s.meas.samples, s.scenario, s.refined.paths.size(), s.meas.noise_std);
    const std::vector<double> slots = to_slots(s.refined, lik.layout());
    for (auto _ : state)
        benchmark::DoNotOptimize(lik.log_likelihood(slots));
}
BENCHMARK(BM_LogLikelihood);

void BM_Coarse(benchmark::State &state)
{
    const Setup &s = small_bandwidth();
    CoarseOptions opt;
    opt.model_order = s.refined.paths.size();
    for (auto _ : state)
        benchmark::DoNotOptimize(run_coarse(s.meas, opt));
}
BENCHMARK(BM_Coarse)->Unit(benchmark::kMillisecond);

// Fixed iteration count; the tolerance is set so the stopping rule never fires.
void BM_SpvbiIterations(benchmark::State &state)
{
    const Setup &s = small_bandwidth();
    SpvbiHyper h;
    h.num_particles = static_cast<std::size_t>(state.range(0));
    h.batch_size = static_cast<std::size_t>(state.range(1));
    h.max_iters = 50;
    h.schedule.warm_iters = 0;
    h.tolerance = 1e-300;
    h.check_invariants = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_spvbi(s.meas, s.priors, h));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h.max_iters));
}
BENCHMARK(BM_SpvbiIterations)
    ->ArgsProduct({{5, 10, 20, 40}, {10}})
    ->ArgsProduct({{10}, {5, 20, 40}})
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
