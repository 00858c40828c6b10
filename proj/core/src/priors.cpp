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

#include "mbsense/priors.hpp"

#include "mbsense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mbsense
{

std::string to_string(VarKind kind)
{
    switch (kind)
    {
    case VarKind::Delay:
        return "delay";
    case VarKind::Amplitude:
        return "amplitude";
    case VarKind::PathPhase:
        return "path_phase";
    case VarKind::BandPhase:
        return "band_phase";
    case VarKind::SyncError:
        return "sync_error";
    }
    return "?";
}

std::string to_string(PriorKind kind)
{
    switch (kind)
    {
    case PriorKind::Uniform:
        return "uniform";
    case PriorKind::Gaussian:
        return "gaussian";
    case PriorKind::CircularUniform:
        return "circular_uniform";
    case PriorKind::Fixed:
        return "fixed";
    }
    return "?";
}

VarKind var_kind_from_string(const std::string &s)
{
    for (VarKind k : {VarKind::Delay, VarKind::Amplitude, VarKind::PathPhase, VarKind::BandPhase, VarKind::SyncError})
        if (to_string(k) == s)
            return k;
    throw ConfigError("unknown variable kind '" + s + "'");
}

PriorKind prior_kind_from_string(const std::string &s)
{
    for (PriorKind k : {PriorKind::Uniform, PriorKind::Gaussian, PriorKind::CircularUniform, PriorKind::Fixed})
        if (to_string(k) == s)
            return k;
    throw ConfigError("unknown prior kind '" + s + "'");
}

std::string variable_label(const VariableId &id)
{
    const std::string n = std::to_string(id.index + 1);
    switch (id.kind)
    {
    case VarKind::Delay:
        return "tau_" + n;
    case VarKind::Amplitude:
        return "alpha_" + n;
    case VarKind::PathPhase:
        return "beta_" + n;
    case VarKind::BandPhase:
        return "phi_" + n;
    case VarKind::SyncError:
        return "delta_" + n;
    }
    return "?";
}

void CoarsePrior::validate() const
{
    const std::string name = variable_label(var);
    if (!std::isfinite(center) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ConfigError("prior " + name + ": non-finite bounds");
    if (kind == PriorKind::Fixed)
        return;
    if (!(hi > lo))
        throw ConfigError("prior " + name + ": box width must be positive");
    if (kind == PriorKind::Gaussian && !(variance > 0.0))
        throw ConfigError("prior " + name + ": gaussian variance must be positive");
    if (kind == PriorKind::CircularUniform && (lo != 0.0 || hi != two_pi))
        throw ConfigError("prior " + name + ": circular prior must cover [0, 2 pi)");
    if ((var.kind == VarKind::Delay || var.kind == VarKind::Amplitude) && lo < 0.0)
        throw ConfigError("prior " + name + ": interval leaves the non-negative domain");
    if ((var.kind == VarKind::PathPhase || var.kind == VarKind::BandPhase) && kind != PriorKind::CircularUniform &&
        (lo < 0.0 || hi > two_pi))
        throw ConfigError("prior " + name + ": phase interval must lie in [0, 2 pi]");
}

namespace
{

CoarsePrior boxed(VariableId id, double center, double width)
{
    CoarsePrior p;
    p.var = id;
    p.kind = PriorKind::Uniform;
    p.center = center;
    p.lo = center - width / 2.0;
    p.hi = center + width / 2.0;
    if (p.lo < 0.0)
    {
        p.hi -= p.lo;
        p.lo = 0.0;
    }
    return p;
}

CoarsePrior circular(VariableId id, double center)
{
    CoarsePrior p;
    p.var = id;
    p.kind = PriorKind::CircularUniform;
    p.center = wrap_phase(center);
    p.lo = 0.0;
    p.hi = two_pi;
    return p;
}

CoarsePrior fixed(VariableId id, double value)
{
    CoarsePrior p;
    p.var = id;
    p.kind = PriorKind::Fixed;
    p.center = p.lo = p.hi = value;
    return p;
}

} // namespace

std::vector<CoarsePrior> build_priors(const CoarseEstimate &coarse, const ScenarioConfig &scenario,
                                      const WidthPolicy &policy)
{
    const std::size_t k = coarse.num_paths;
    const std::size_t m_count = scenario.num_bands();
    if (k == 0 || coarse.delays.size() != k || coarse.amplitudes.size() != k)
        throw ArgumentError("build_priors: coarse estimate has no paths");
    if (policy.sync_sigma_s < 0.0 || !(policy.delay_multiplier > 0.0) || !(policy.amplitude_rel_width > 0.0))
        throw ConfigError("build_priors: invalid width policy");

    const RefinedParams centers = coarse_to_refined(coarse, scenario);

    // Fused delays inherit the weighted mean of the sync errors.
    double sync_spread = 0.0;
    if (policy.sync_sigma_s > 0.0 && !coarse.weights.empty())
    {
        const double wsum = std::accumulate(coarse.weights.begin(), coarse.weights.end(), 0.0);
        double w2 = 0.0;
        for (double w : coarse.weights)
            w2 += w * w;
        sync_spread = policy.sync_sigma_s * policy.sync_sigma_s * w2 / (wsum * wsum);
    }

    std::vector<CoarsePrior> out;
    for (std::size_t p = 0; p < k; ++p)
    {
        double width = 0.0;
        if (policy.delay_width_s)
        {
            width = *policy.delay_width_s;
        }
        else
        {
            const double crb = p < coarse.delay_crb_var.size() ? coarse.delay_crb_var[p] : 0.0;
            width = policy.delay_multiplier * std::sqrt((std::isfinite(crb) ? crb : 0.0) + sync_spread);
            width = std::max(width, policy.delay_floor_s);
        }
        out.push_back(boxed({VarKind::Delay, p}, coarse.delays[p], width));
    }
    for (std::size_t p = 0; p < k; ++p)
    {
        const double a = coarse.amplitudes[p];
        out.push_back(boxed({VarKind::Amplitude, p}, a, std::max(a * policy.amplitude_rel_width, 1e-12)));
    }
    for (std::size_t p = 0; p < k; ++p)
        out.push_back(circular({VarKind::PathPhase, p}, centers.paths[p].phase));
    for (std::size_t m = 1; m < m_count; ++m)
    {
        if (policy.band_phases)
            out.push_back(circular({VarKind::BandPhase, m}, centers.phase_offset[m]));
        else
            out.push_back(fixed({VarKind::BandPhase, m}, 0.0));
    }
    for (std::size_t m = 0; m < m_count; ++m)
    {
        if (policy.sync_sigma_s > 0.0)
        {
            CoarsePrior g;
            g.var = {VarKind::SyncError, m};
            g.kind = PriorKind::Gaussian;
            g.center = 0.0;
            g.variance = policy.sync_sigma_s * policy.sync_sigma_s;
            g.lo = -policy.sync_box_sigmas * policy.sync_sigma_s;
            g.hi = policy.sync_box_sigmas * policy.sync_sigma_s;
            out.push_back(g);
        }
        else
        {
            out.push_back(fixed({VarKind::SyncError, m}, 0.0));
        }
    }
    for (const auto &p : out)
        p.validate();
    return out;
}

std::size_t count_free(const std::vector<CoarsePrior> &priors)
{
    return static_cast<std::size_t>(
        std::count_if(priors.begin(), priors.end(), [](const CoarsePrior &p) { return p.kind != PriorKind::Fixed; }));
}

} // namespace mbsense
