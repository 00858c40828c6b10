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

#include "mbsense/presets.hpp"

#include "mbsense/errors.hpp"

#include <cmath>

namespace mbsense
{

namespace
{

constexpr double native_spacing_hz = 78.125e3;
constexpr std::size_t desk_subcarriers = 128;

ScenarioConfig two_bands(double f1, double f2, double bandwidth_hz, bool native_spacing, double snr_db)
{
    ScenarioConfig sc;
    const std::size_t n = native_spacing ? static_cast<std::size_t>(std::llround(bandwidth_hz / native_spacing_hz))
                                      : desk_subcarriers;
    const double fs = bandwidth_hz / static_cast<double>(n);
    sc.bands = {{f1, fs, n}, {f2, fs, n}};
    sc.snr_db = snr_db;
    return sc;
}

} // namespace

std::vector<std::string> preset_names()
{
    return {"small-bandwidth", "large-bandwidth", "simplified"};
}

ScenarioPreset make_preset(const std::string &name, bool native_spacing, double snr_db)
{
    ScenarioPreset p;
    p.name = name;
    if (name == "small-bandwidth")
    {
        p.scenario = two_bands(2.4e9, 2.52e9, 40e6, native_spacing, snr_db);
        p.nominal.paths = {{1.0, wrap_phase(-M_PI / 4.0), 25e-9}, {0.5, M_PI / 4.0, 500e-9}};
        p.sync_sigma_s = 0.1e-9;
    }
    else if (name == "large-bandwidth")
    {
        p.scenario = two_bands(5e9, 6e9, 320e6, native_spacing, snr_db);
        p.nominal.paths = {{1.0, wrap_phase(-M_PI / 4.0), 10e-9}, {0.5, M_PI / 4.0, 20e-9}};
        p.sync_sigma_s = 1e-9;
    }
    else if (name == "simplified")
    {
        p.scenario = two_bands(2.4e9, 2.94e9, 40e6, native_spacing, 12.0);
        p.nominal.paths = {{1.0, wrap_phase(-M_PI / 4.0), 50e-9}};
        p.sync_sigma_s = 0.0;
        p.random_phases = false;
    }
    else
    {
        throw ConfigError("unknown preset '" + name + "'");
    }
    p.nominal.band_phase.assign(p.scenario.num_bands(), 0.0);
    p.nominal.sync_error.assign(p.scenario.num_bands(), 0.0);
    p.width.sync_sigma_s = p.sync_sigma_s;
    p.width.band_phases = p.random_phases;
    p.scenario.validate();
    p.nominal.validate(p.scenario);
    return p;
}

void set_band_start(ScenarioPreset &preset, std::size_t band, double start_freq_hz)
{
    if (band == 0 || band >= preset.scenario.num_bands())
        throw ConfigError("only bands after the reference band can be moved");
    preset.scenario.bands[band].start_freq_hz = start_freq_hz;
    preset.scenario.validate();
}

ChannelParams draw_truth(const ScenarioPreset &preset, std::mt19937_64 &rng)
{
    ChannelParams t = preset.nominal;
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    if (preset.random_phases)
    {
        for (auto &p : t.paths)
            p.phase = wrap_phase(phase(rng));
        for (auto &ph : t.band_phase)
            ph = wrap_phase(phase(rng));
    }
    if (preset.sync_sigma_s > 0.0)
    {
        std::normal_distribution<double> nd(0.0, preset.sync_sigma_s);
        for (int attempt = 0;; ++attempt)
        {
            for (auto &d : t.sync_error)
                d = nd(rng);
            try
            {
                check_aliasing(preset.scenario, t);
                break;
            }
            catch (const ConfigError &)
            {
                if (attempt > 1000)
                    throw;
            }
        }
    }
    t.validate(preset.scenario);
    return t;
}

} // namespace mbsense
