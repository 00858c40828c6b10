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

#ifndef MBSENSE_PRIORS_HPP
#define MBSENSE_PRIORS_HPP

// Priors handed from stage 1 to stage 2. Stored in SI units (seconds, radians).

#include "mbsense/coarse.hpp"
#include "mbsense/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mbsense
{

enum class VarKind
{
    Delay,      // tau_k
    Amplitude,  // |alpha'_k|
    PathPhase,  // beta'_k
    BandPhase,  // phi'_m, m >= 2
    SyncError   // delta_m
};

enum class PriorKind
{
    Uniform,
    Gaussian,         // truncated to [lo, hi]
    CircularUniform,  // [0, 2 pi)
    Fixed             // held at center, not optimized
};

struct VariableId
{
    VarKind kind = VarKind::Delay;
    std::size_t index = 0;  // path k or band m, 0-based

    bool operator==(const VariableId &) const = default;
};

std::string to_string(VarKind kind);
std::string to_string(PriorKind kind);
VarKind var_kind_from_string(const std::string &s);
PriorKind prior_kind_from_string(const std::string &s);

// Canonical label, e.g. "tau_1", "delta_2" (1-based like the usual notation).
std::string variable_label(const VariableId &id);

struct CoarsePrior
{
    VariableId var;
    PriorKind kind = PriorKind::Uniform;
    double center = 0.0;
    double lo = 0.0;        // box
    double hi = 0.0;
    double variance = 0.0;  // Gaussian only

    double width() const { return hi - lo; }
    void validate() const;
};

struct WidthPolicy
{
    // Delay box width = multiplier * sqrt(fused CRB variance + residual sync
    // spread), floored. delay_width_s overrides the rule when set.
    double delay_multiplier = 8.0;
    double delay_floor_s = 0.05e-9;
    std::optional<double> delay_width_s;
    double amplitude_rel_width = 1.0;
    // Sync-error prior N(0, sync_sigma_s^2) truncated to +-sync_box_sigmas.
    // sync_sigma_s == 0 pins every delta_m to 0.
    double sync_sigma_s = 0.1e-9;
    double sync_box_sigmas = 4.0;
    // When false the band phase offsets are pinned to 0 (no random phases).
    bool band_phases = true;
};

// Order: delays, amplitudes, path phases, band offsets (m >= 2), sync errors.
std::vector<CoarsePrior> build_priors(const CoarseEstimate &coarse, const ScenarioConfig &scenario,
                                      const WidthPolicy &policy = {});

// Number of free (non-fixed) variables.
std::size_t count_free(const std::vector<CoarsePrior> &priors);

} // namespace mbsense

#endif
