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

#ifndef MBSENSE_PRESETS_HPP
#define MBSENSE_PRESETS_HPP

// Scenario presets and random truth draws for the Monte-Carlo harness.

#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"

#include <random>
#include <string>
#include <vector>

namespace mbsense
{

struct ScenarioPreset
{
    std::string name;
    ScenarioConfig scenario;
    ChannelParams nominal;        // amplitudes, phases and delays; zero imperfections
    double sync_sigma_s = 0.0;    // delta_m ~ N(0, sigma^2)
    bool random_phases = true;    // beta_k, phi_m ~ U[0, 2 pi)
    WidthPolicy width;            // priors matching the imperfection model
};

// "small-bandwidth", "large-bandwidth" or "simplified". Desk scale uses 128
// subcarriers per band at the same bandwidth; native_spacing keeps 78.125 kHz.
ScenarioPreset make_preset(const std::string &name, bool native_spacing = false, double snr_db = 15.0);
std::vector<std::string> preset_names();

// Move the start of band m (m >= 1) and keep everything else.
void set_band_start(ScenarioPreset &preset, std::size_t band, double start_freq_hz);

// Truth for one trial: random beta_k, phi_m, delta_m as configured. delta
// draws are redrawn until the delays do not alias.
ChannelParams draw_truth(const ScenarioPreset &preset, std::mt19937_64 &rng);

} // namespace mbsense

#endif
