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

#ifndef MBSENSE_BASELINES_HPP
#define MBSENSE_BASELINES_HPP

// Reference estimators: single-band root-MUSIC and spectral-estimation (SE)
// full-band reconstruction, plus full-band evaluation of refined parameters.

#include "mbsense/coarse.hpp"
#include "mbsense/model.hpp"

#include <vector>

namespace mbsense
{

// Uniform grid from the first band's start frequency to the last band's last
// subcarrier, gap included.
struct FullBandGrid
{
    double start_freq_hz = 0.0;
    double spacing_hz = 0.0;
    std::size_t count = 0;

    double frequency(std::size_t n) const { return start_freq_hz + static_cast<double>(n) * spacing_hz; }
};

// Throws ConfigError when the bands do not share one spacing or do not sit on
// a common grid.
FullBandGrid make_fullband_grid(const ScenarioConfig &scenario);

// Grid index of subcarrier 0 of band m.
std::size_t band_offset(const FullBandGrid &grid, const ScenarioConfig &scenario, std::size_t band);

// Root-MUSIC on one band, no fusion. Sorted ascending delays in seconds.
std::vector<double> single_band_root_music(const std::vector<cdouble> &band_samples, double spacing_hz, std::size_t K,
                                           bool polish_roots = true);

// Refined model on the full grid, band 1 as phase and carrier reference.
// Frequencies that belong to a configured band carry that band's phase offset
// and sync error when band_imperfections is set, so the result restricted to a
// band equals reconstruct_refined there.
std::vector<cdouble> reconstruct_fullband(const RefinedParams &params, const FullBandGrid &grid,
                                          const ScenarioConfig &scenario, bool band_imperfections = true);

struct SeEstimate
{
    std::vector<double> delays;   // fused, seconds
    std::vector<cdouble> poles;   // exp(-j 2 pi f_s tau_k)
    std::vector<cdouble> gains;   // band-1 LS gains anchoring the extrapolation
    double spacing_hz = 0.0;
    double anchor_freq_hz = 0.0;  // f_c,1
};

SeEstimate se_estimate(const CsiMeasurement &measurement, std::size_t K, const CoarseOptions &options = {});

// All-pole extrapolation r(n) = sum_k g_k p_k^n, n counted from the anchor.
std::vector<cdouble> reconstruct_fullband(const SeEstimate &se, const FullBandGrid &grid);

} // namespace mbsense

#endif
