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

#ifndef MBSENSE_PIPELINE_HPP
#define MBSENSE_PIPELINE_HPP

// Coarse stage -> priors -> SPVBI.

#include "mbsense/coarse.hpp"
#include "mbsense/priors.hpp"
#include "mbsense/spvbi.hpp"

namespace mbsense
{

struct PipelineOptions
{
    CoarseOptions coarse;
    WidthPolicy width;
    SpvbiHyper hyper;
    // Take eta_w from the coarse fit residual instead of the measurement.
    bool noise_from_residual = false;
};

struct PipelineResult
{
    CoarseEstimate coarse;
    std::vector<CoarsePrior> priors;
    PosteriorSet posterior;
};

// Per-dimension noise std from the residual of the coarse refined fit.
double residual_noise_std(const CsiMeasurement &measurement, const CoarseEstimate &coarse);

PipelineResult run_pipeline(const CsiMeasurement &measurement, const PipelineOptions &options,
                            const SpvbiObserver &observer = {});

} // namespace mbsense

#endif
