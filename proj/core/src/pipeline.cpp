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

#include "mbsense/pipeline.hpp"

#include "mbsense/errors.hpp"

#include <cmath>

namespace mbsense
{

double residual_noise_std(const CsiMeasurement &measurement, const CoarseEstimate &coarse)
{
    const ScenarioConfig &sc = measurement.scenario;
    double sse = 0.0;
    std::size_t dof = 0;
    for (std::size_t m = 0; m < sc.num_bands(); ++m)
    {
        std::vector<double> d(coarse.num_paths);
        for (std::size_t k = 0; k < coarse.num_paths; ++k)
            d[k] = coarse.delays[k] + coarse.sync_errors[m];
        const auto &r = measurement.samples[m];
        for (std::size_t n = 0; n < r.size(); ++n)
        {
            cdouble s = 0.0;
            for (std::size_t k = 0; k < coarse.num_paths; ++k)
                s += coarse.gains[m][k] * std::polar(1.0, -two_pi * static_cast<double>(n) * sc.bands[m].spacing_hz * d[k]);
            sse += std::norm(r[n] - s);
        }
        dof += r.size() > coarse.num_paths ? r.size() - coarse.num_paths : 0;
    }
    if (dof == 0)
        throw EstimationError("no residual degrees of freedom for a noise estimate");
    return std::sqrt(sse / (2.0 * static_cast<double>(dof)));
}

PipelineResult run_pipeline(const CsiMeasurement &measurement, const PipelineOptions &options,
                            const SpvbiObserver &observer)
{
    PipelineResult out;
    out.coarse = run_coarse(measurement, options.coarse);
    out.priors = build_priors(out.coarse, measurement.scenario, options.width);
    SpvbiHyper hyper = options.hyper;
    if (options.noise_from_residual && !hyper.noise_std)
    {
        const double eta = residual_noise_std(measurement, out.coarse);
        if (eta > 0.0)
            hyper.noise_std = eta;
    }
    out.posterior = run_spvbi(measurement, out.priors, hyper, observer);
    return out;
}

} // namespace mbsense
