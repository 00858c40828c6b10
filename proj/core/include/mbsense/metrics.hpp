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

#ifndef MBSENSE_METRICS_HPP
#define MBSENSE_METRICS_HPP

#include "mbsense/model.hpp"

#include <vector>

namespace mbsense
{

// sqrt(mean(e^2)). Throws ArgumentError on empty input.
double metric_rmse(const std::vector<double> &errors);

// Fraction of errors <= g for every g in grid.
std::vector<double> metric_cdf(const std::vector<double> &errors, const std::vector<double> &grid);

// sqrt(mean |truth - estimate|^2)
double metric_data_rmse(const std::vector<cdouble> &truth, const std::vector<cdouble> &estimate);

double median(std::vector<double> values);

// Standard error of the RMSE estimate, by the delta method on mean(e^2).
double rmse_standard_error(const std::vector<double> &errors);

enum class HrrpWindow
{
    Rectangular,
    Hann
};

// |IDFT| of full-band samples; bin k corresponds to delay k / (N f_s).
std::vector<double> hrrp(const std::vector<cdouble> &fullband, HrrpWindow window = HrrpWindow::Rectangular);

} // namespace mbsense

#endif
