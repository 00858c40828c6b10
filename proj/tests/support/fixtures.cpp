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

#include "fixtures.hpp"

#include <cmath>

namespace mbsense::testing
{

ScenarioConfig two_band_scenario(std::size_t n, double snr_db)
{
    ScenarioConfig sc;
    const double fs = 40e6 / static_cast<double>(n);
    sc.bands = {{2.4e9, fs, n}, {2.52e9, fs, n}};
    sc.snr_db = snr_db;
    return sc;
}

MultibandSignal direct_original(const ScenarioConfig &sc, const ChannelParams &p)
{
    MultibandSignal out(sc.num_bands());
    const long double tp = 6.283185307179586476925286766559L;
    for (std::size_t m = 0; m < sc.num_bands(); ++m)
    {
        const Band &b = sc.bands[m];
        for (std::size_t n = 0; n < b.num_subcarriers; ++n)
        {
            const long double f = static_cast<long double>(b.start_freq_hz) +
                                  static_cast<long double>(n) * static_cast<long double>(b.spacing_hz);
            std::complex<long double> acc = 0.0L;
            for (const auto &path : p.paths)
            {
                const long double ph = path.phase - tp * f * (static_cast<long double>(path.delay) + p.sync_error[m]) +
                                       p.band_phase[m];
                acc += std::polar(static_cast<long double>(path.amplitude), ph);
            }
            out[m].push_back({static_cast<double>(acc.real()), static_cast<double>(acc.imag())});
        }
    }
    return out;
}

ChannelParams random_truth(const ScenarioConfig &sc, std::size_t K, std::mt19937_64 &rng, double sync_sigma_s)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    const double period = 1.0 / sc.bands.front().spacing_hz;
    ChannelParams p;
    double t = 0.02 * period;
    for (std::size_t k = 0; k < K; ++k)
    {
        t += (0.05 + 0.15 * u(rng)) * period;
        p.paths.push_back({0.3 + u(rng), two_pi * u(rng), t});
    }
    for (std::size_t m = 0; m < sc.num_bands(); ++m)
    {
        p.band_phase.push_back(two_pi * u(rng));
        p.sync_error.push_back(sync_sigma_s * g(rng));
    }
    for (auto &ph : p.band_phase)
        ph = wrap_phase(ph);
    for (auto &path : p.paths)
        path.phase = wrap_phase(path.phase);
    return p;
}

std::vector<CoarsePrior> priors_around(const RefinedParams &c, double delay_half_s, double amp_half,
                                       double phase_half, double sync_sigma_s)
{
    std::vector<CoarsePrior> out;
    auto box = [](VariableId id, double center, double half) {
        CoarsePrior p;
        p.var = id;
        p.kind = PriorKind::Uniform;
        p.center = center;
        p.lo = center - half;
        p.hi = center + half;
        return p;
    };
    for (std::size_t k = 0; k < c.paths.size(); ++k)
        out.push_back(box({VarKind::Delay, k}, c.paths[k].delay, delay_half_s));
    for (std::size_t k = 0; k < c.paths.size(); ++k)
        out.push_back(box({VarKind::Amplitude, k}, c.paths[k].amplitude, amp_half));
    for (std::size_t k = 0; k < c.paths.size(); ++k)
    {
        CoarsePrior p = box({VarKind::PathPhase, k}, c.paths[k].phase, phase_half);
        p.lo = std::max(p.lo, 0.0);
        p.hi = std::min(p.hi, two_pi);
        out.push_back(p);
    }
    for (std::size_t m = 1; m < c.phase_offset.size(); ++m)
    {
        CoarsePrior p = box({VarKind::BandPhase, m}, c.phase_offset[m], phase_half);
        p.lo = std::max(p.lo, 0.0);
        p.hi = std::min(p.hi, two_pi);
        out.push_back(p);
    }
    for (std::size_t m = 0; m < c.sync_error.size(); ++m)
    {
        CoarsePrior p;
        p.var = {VarKind::SyncError, m};
        p.kind = PriorKind::Gaussian;
        p.center = 0.0;
        p.variance = sync_sigma_s * sync_sigma_s;
        p.lo = -4.0 * sync_sigma_s;
        p.hi = 4.0 * sync_sigma_s;
        out.push_back(p);
    }
    return out;
}

double reference_loglik(const CsiMeasurement &meas, const std::vector<double> &slots, const SlotLayout &layout,
                        double eta)
{
    RefinedParams p = from_slots(slots, layout);
    // from_slots wraps phases; keep delays unsorted-safe by not validating here
    const MultibandSignal s = reconstruct_refined(p, meas.scenario);
    return log_likelihood(meas.samples, s, eta);
}

} // namespace mbsense::testing
