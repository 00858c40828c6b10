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

#include "mbsense/baselines.hpp"

#include "mbsense/errors.hpp"

#include <cmath>
#include <string>

namespace mbsense
{

namespace
{

constexpr double grid_tol = 1e-6;

cdouble unit_cycles(long double cycles)
{
    const long double frac = cycles - std::floor(cycles);
    const double a = -two_pi * static_cast<double>(frac);
    return {std::cos(a), std::sin(a)};
}

} // namespace

FullBandGrid make_fullband_grid(const ScenarioConfig &scenario)
{
    scenario.validate();
    const Band &first = scenario.bands.front();
    FullBandGrid g{first.start_freq_hz, first.spacing_hz, 0};
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        const Band &b = scenario.bands[m];
        if (std::abs(b.spacing_hz - g.spacing_hz) > grid_tol * g.spacing_hz)
            throw ConfigError("full-band grid needs a common subcarrier spacing");
        const double pos = (b.start_freq_hz - g.start_freq_hz) / g.spacing_hz;
        if (std::abs(pos - std::round(pos)) > grid_tol)
            throw ConfigError("band " + std::to_string(m + 1) + " does not start on the common grid");
    }
    const Band &last = scenario.bands.back();
    g.count = static_cast<std::size_t>(std::llround((last.start_freq_hz - g.start_freq_hz) / g.spacing_hz)) +
              last.num_subcarriers;
    return g;
}

std::size_t band_offset(const FullBandGrid &grid, const ScenarioConfig &scenario, std::size_t band)
{
    return static_cast<std::size_t>(
        std::llround((scenario.bands.at(band).start_freq_hz - grid.start_freq_hz) / grid.spacing_hz));
}

std::vector<double> single_band_root_music(const std::vector<cdouble> &band_samples, double spacing_hz, std::size_t K,
                                           bool polish_roots)
{
    return band_root_music(band_samples, spacing_hz, K, std::nullopt, polish_roots).roots.delays;
}

std::vector<cdouble> reconstruct_fullband(const RefinedParams &params, const FullBandGrid &grid,
                                          const ScenarioConfig &scenario, bool band_imperfections)
{
    params.validate(scenario);
    std::vector<cdouble> out(grid.count, 0.0);
    // band index per grid point, or -1 inside the gap
    std::vector<long> owner(grid.count, -1);
    if (band_imperfections)
        for (std::size_t m = 0; m < scenario.num_bands(); ++m)
        {
            const std::size_t off = band_offset(grid, scenario, m);
            for (std::size_t n = 0; n < scenario.bands[m].num_subcarriers && off + n < grid.count; ++n)
                owner[off + n] = static_cast<long>(m);
        }
    const long double f0 = scenario.bands.front().start_freq_hz;
    for (std::size_t i = 0; i < grid.count; ++i)
    {
        const long double fprime = static_cast<long double>(grid.start_freq_hz) - f0 +
                                   static_cast<long double>(i) * static_cast<long double>(grid.spacing_hz);
        cdouble extra = 1.0;
        if (owner[i] >= 0)
        {
            const auto m = static_cast<std::size_t>(owner[i]);
            const std::size_t n = i - band_offset(grid, scenario, m);
            const long double cyc =
                static_cast<long double>(n) * static_cast<long double>(scenario.bands[m].spacing_hz) * params.sync_error[m];
            extra = std::polar(1.0, params.phase_offset[m]) * unit_cycles(cyc);
        }
        cdouble acc = 0.0;
        for (const PathParams &p : params.paths)
            acc += std::polar(p.amplitude, p.phase) * unit_cycles(fprime * static_cast<long double>(p.delay));
        out[i] = acc * extra;
    }
    return out;
}

SeEstimate se_estimate(const CsiMeasurement &measurement, std::size_t K, const CoarseOptions &options)
{
    CoarseOptions opt = options;
    opt.model_order = K;
    const CoarseEstimate c = run_coarse(measurement, opt);
    SeEstimate se;
    se.delays = c.delays;
    se.spacing_hz = measurement.scenario.bands.front().spacing_hz;
    se.anchor_freq_hz = measurement.scenario.bands.front().start_freq_hz;
    for (double d : se.delays)
        se.poles.push_back(unit_cycles(static_cast<long double>(se.spacing_hz) * d));
    se.gains = ls_amplitudes(measurement.samples.front(), se.delays, se.spacing_hz, opt.max_condition);
    return se;
}

std::vector<cdouble> reconstruct_fullband(const SeEstimate &se, const FullBandGrid &grid)
{
    if (std::abs(grid.spacing_hz - se.spacing_hz) > grid_tol * se.spacing_hz)
        throw ArgumentError("SE reconstruction: grid spacing differs from the pole spacing");
    const double pos = (grid.start_freq_hz - se.anchor_freq_hz) / grid.spacing_hz;
    const long long n0 = std::llround(pos);
    std::vector<cdouble> out(grid.count, 0.0);
    for (std::size_t k = 0; k < se.delays.size(); ++k)
        for (std::size_t i = 0; i < grid.count; ++i)
        {
            const long double n = static_cast<long double>(n0 + static_cast<long long>(i));
            out[i] += se.gains[k] * unit_cycles(n * static_cast<long double>(se.spacing_hz) * se.delays[k]);
        }
    return out;
}

} // namespace mbsense
