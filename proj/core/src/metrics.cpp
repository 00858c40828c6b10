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

#include "mbsense/metrics.hpp"

#include "mbsense/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mbsense
{

double metric_rmse(const std::vector<double> &errors)
{
    if (errors.empty())
        throw ArgumentError("rmse of an empty error list");
    double acc = 0.0;
    for (double e : errors)
        acc += e * e;
    return std::sqrt(acc / static_cast<double>(errors.size()));
}

std::vector<double> metric_cdf(const std::vector<double> &errors, const std::vector<double> &grid)
{
    if (errors.empty() || grid.empty())
        throw ArgumentError("cdf needs errors and a grid");
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid)
    {
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
        out.push_back(static_cast<double>(count) / static_cast<double>(sorted.size()));
    }
    return out;
}

double metric_data_rmse(const std::vector<cdouble> &truth, const std::vector<cdouble> &estimate)
{
    if (truth.empty() || truth.size() != estimate.size())
        throw ArgumentError("data rmse needs two non-empty signals of equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        acc += std::norm(truth[i] - estimate[i]);
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw ArgumentError("median of an empty list");
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double rmse_standard_error(const std::vector<double> &errors)
{
    const std::size_t n = errors.size();
    if (n < 2)
        return 0.0;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i)
        sq[i] = errors[i] * errors[i];
    const double m = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double s : sq)
        var += (s - m) * (s - m);
    var /= static_cast<double>(n - 1);
    if (m <= 0.0)
        return 0.0;
    // d sqrt(m) = dm / (2 sqrt(m))
    return std::sqrt(var / static_cast<double>(n)) / (2.0 * std::sqrt(m));
}

std::vector<double> hrrp(const std::vector<cdouble> &fullband, HrrpWindow window)
{
    const std::size_t n = fullband.size();
    if (n == 0)
        throw ArgumentError("hrrp of an empty signal");
    std::vector<cdouble> in(fullband);
    if (window == HrrpWindow::Hann && n > 1)
        for (std::size_t i = 0; i < n; ++i)
            in[i] *= 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n - 1));
    Eigen::FFT<double> fft;
    std::vector<cdouble> out;
    fft.inv(out, in);
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i)
        mag[i] = std::abs(out[i]);
    return mag;
}

} // namespace mbsense
