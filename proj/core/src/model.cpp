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

#include "mbsense/model.hpp"

#include "mbsense/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mbsense
{

namespace
{

constexpr long double two_pi_l = 6.283185307179586476925286766559L;

// exp(j * 2*pi * cycles) with the integer part of the cycle count removed in
// extended precision, so carrier-frequency products keep ~1e-15 rad accuracy.
cdouble unit_phasor(long double cycles)
{
    const long double frac = cycles - std::floor(cycles);
    const double angle = static_cast<double>(two_pi_l * frac);
    return {std::cos(angle), std::sin(angle)};
}

void require_finite(double v, const char *what)
{
    if (!std::isfinite(v))
        throw ConfigError(std::string(what) + " must be finite");
}

} // namespace

double wrap_phase(double angle)
{
    double r = std::fmod(angle, two_pi);
    if (r < 0.0)
        r += two_pi;
    if (r >= two_pi)
        r -= two_pi;
    return r;
}

double wrap_phase_signed(double angle)
{
    double r = wrap_phase(angle);
    if (r > two_pi / 2.0)
        r -= two_pi;
    return r;
}

double circular_distance(double a, double b)
{
    return std::abs(wrap_phase_signed(a - b));
}

std::size_t ScenarioConfig::total_samples() const
{
    std::size_t n = 0;
    for (const auto &b : bands)
        n += b.num_subcarriers;
    return n;
}

void ScenarioConfig::validate() const
{
    if (bands.empty())
        throw ConfigError("scenario needs at least one band");
    for (std::size_t m = 0; m < bands.size(); ++m)
    {
        const Band &b = bands[m];
        require_finite(b.start_freq_hz, "band start frequency");
        require_finite(b.spacing_hz, "subcarrier spacing");
        if (b.num_subcarriers < 2)
            throw ConfigError("band " + std::to_string(m) + " needs at least 2 subcarriers");
        if (b.spacing_hz <= 0.0)
            throw ConfigError("band " + std::to_string(m) + " subcarrier spacing must be positive");
        if (b.start_freq_hz < 0.0)
            throw ConfigError("band " + std::to_string(m) + " start frequency must be non-negative");
        if (m > 0 && !(b.start_freq_hz > bands[m - 1].last_frequency()))
            throw ConfigError("bands must be sorted by start frequency and must not overlap");
    }
    if (noise_std.has_value() == snr_db.has_value())
        throw ConfigError("exactly one of noise_std and snr_db must be given");
    if (noise_std && (!std::isfinite(*noise_std) || *noise_std < 0.0))
        throw ConfigError("noise_std must be finite and non-negative");
    if (snr_db && !std::isfinite(*snr_db))
        throw ConfigError("snr_db must be finite");
}

void ChannelParams::validate(const ScenarioConfig &scenario) const
{
    if (paths.empty())
        throw ConfigError("channel needs at least one path");
    for (std::size_t k = 0; k < paths.size(); ++k)
    {
        require_finite(paths[k].amplitude, "path amplitude");
        require_finite(paths[k].phase, "path phase");
        require_finite(paths[k].delay, "path delay");
        if (paths[k].amplitude < 0.0)
            throw ConfigError("path amplitudes must be non-negative");
        if (k > 0 && !(paths[k].delay > paths[k - 1].delay))
            throw ConfigError("path delays must be strictly increasing");
    }
    const std::size_t m = scenario.num_bands();
    if (band_phase.size() != m || sync_error.size() != m)
        throw ConfigError("band_phase and sync_error need one entry per band");
    for (double phi : band_phase)
    {
        require_finite(phi, "band phase");
        if (phi < 0.0 || phi >= two_pi)
            throw ConfigError("band phases must lie in [0, 2*pi)");
    }
    for (double d : sync_error)
        require_finite(d, "sync error");
}

void RefinedParams::validate(const ScenarioConfig &scenario) const
{
    if (paths.empty())
        throw ConfigError("refined parameters need at least one path");
    for (std::size_t k = 0; k < paths.size(); ++k)
    {
        require_finite(paths[k].amplitude, "path amplitude");
        require_finite(paths[k].phase, "path phase");
        require_finite(paths[k].delay, "path delay");
        if (paths[k].amplitude < 0.0)
            throw ConfigError("path amplitudes must be non-negative");
    }
    const std::size_t m = scenario.num_bands();
    if (phase_offset.size() != m || sync_error.size() != m)
        throw ConfigError("phase_offset and sync_error need one entry per band");
    if (phase_offset[0] != 0.0)
        throw ConfigError("the reference band phase offset must be 0");
    for (double phi : phase_offset)
        require_finite(phi, "phase offset");
    for (double d : sync_error)
        require_finite(d, "sync error");
}

double carrier_offset(const ScenarioConfig &scenario, std::size_t band)
{
    return scenario.bands.at(band).start_freq_hz - scenario.bands.front().start_freq_hz;
}

void check_aliasing(const ScenarioConfig &scenario, const ChannelParams &params)
{
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        const double period = 1.0 / scenario.bands[m].spacing_hz;
        for (const auto &p : params.paths)
        {
            const double d = p.delay + params.sync_error[m];
            if (d < 0.0 || d >= period)
                throw ConfigError("delay " + std::to_string(p.delay * 1e9) + " ns plus sync error of band " +
                                  std::to_string(m) + " aliases (unambiguous range is [0, " +
                                  std::to_string(period * 1e9) + ") ns)");
        }
    }
}

double mean_power(const MultibandSignal &signal)
{
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto &band : signal)
    {
        for (const auto &v : band)
            acc += std::norm(v);
        n += band.size();
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

double resolve_noise_std(const ScenarioConfig &scenario, const MultibandSignal &noiseless)
{
    if (scenario.noise_std)
        return *scenario.noise_std;
    const double snr = std::pow(10.0, *scenario.snr_db / 10.0);
    return std::sqrt(mean_power(noiseless) / (2.0 * snr));
}

MultibandSignal reconstruct_original(const ChannelParams &params, const ScenarioConfig &scenario)
{
    MultibandSignal out(scenario.num_bands());
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        const Band &band = scenario.bands[m];
        const long double delta = params.sync_error.at(m);
        const long double phi_cycles = static_cast<long double>(params.band_phase.at(m)) / two_pi_l;
        out[m].assign(band.num_subcarriers, cdouble{});
        for (const auto &path : params.paths)
        {
            const long double beta_cycles = static_cast<long double>(path.phase) / two_pi_l;
            const long double lag = static_cast<long double>(path.delay) + delta;
            for (std::size_t n = 0; n < band.num_subcarriers; ++n)
            {
                const long double f = static_cast<long double>(band.start_freq_hz) +
                                      static_cast<long double>(n) * static_cast<long double>(band.spacing_hz);
                out[m][n] += path.amplitude * unit_phasor(beta_cycles + phi_cycles - f * lag);
            }
        }
    }
    return out;
}

MultibandSignal synthesize_noiseless(const ScenarioConfig &scenario, const ChannelParams &truth)
{
    scenario.validate();
    truth.validate(scenario);
    return reconstruct_original(truth, scenario);
}

CsiMeasurement synthesize_csi(const ScenarioConfig &scenario, const ChannelParams &truth, std::uint64_t seed)
{
    CsiMeasurement out;
    out.samples = synthesize_noiseless(scenario, truth);
    out.scenario = scenario;
    out.noise_seed = seed;
    out.noise_std = resolve_noise_std(scenario, out.samples);
    if (out.noise_std > 0.0)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, out.noise_std);
        for (auto &band : out.samples)
            for (auto &v : band)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                v += cdouble(re, im);
            }
    }
    return out;
}

MultibandSignal reconstruct_refined(const RefinedParams &params, const ScenarioConfig &scenario)
{
    MultibandSignal out(scenario.num_bands());
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        const Band &band = scenario.bands[m];
        const long double f_off = static_cast<long double>(band.start_freq_hz) -
                                  static_cast<long double>(scenario.bands.front().start_freq_hz);
        const long double fs = band.spacing_hz;
        const long double delta = params.sync_error.at(m);
        const long double phi_cycles = static_cast<long double>(params.phase_offset.at(m)) / two_pi_l;
        out[m].assign(band.num_subcarriers, cdouble{});
        for (const auto &path : params.paths)
        {
            const long double beta_cycles = static_cast<long double>(path.phase) / two_pi_l;
            const long double tau = path.delay;
            for (std::size_t n = 0; n < band.num_subcarriers; ++n)
            {
                const long double nf = static_cast<long double>(n) * fs;
                out[m][n] += path.amplitude * unit_phasor(beta_cycles + phi_cycles - (f_off + nf) * tau - nf * delta);
            }
        }
    }
    return out;
}

RefinedParams to_refined(const ChannelParams &params, const ScenarioConfig &scenario)
{
    const std::size_t num_bands = scenario.num_bands();
    // phi~_m = phi_m - 2 pi f_c,m delta_m, tracked in cycles
    std::vector<long double> phi_tilde(num_bands);
    for (std::size_t m = 0; m < num_bands; ++m)
    {
        const long double c = static_cast<long double>(params.band_phase.at(m)) / two_pi_l -
                              static_cast<long double>(scenario.bands[m].start_freq_hz) *
                                  static_cast<long double>(params.sync_error.at(m));
        phi_tilde[m] = c - std::floor(c);
    }
    const long double fc1 = scenario.bands.front().start_freq_hz;

    RefinedParams out;
    out.paths.reserve(params.paths.size());
    for (const auto &p : params.paths)
    {
        long double c = static_cast<long double>(p.phase) / two_pi_l + phi_tilde[0] -
                        fc1 * static_cast<long double>(p.delay);
        c -= std::floor(c);
        out.paths.push_back({p.amplitude, wrap_phase(static_cast<double>(two_pi_l * c)), p.delay});
    }
    out.phase_offset.resize(num_bands);
    out.phase_offset[0] = 0.0;
    for (std::size_t m = 1; m < num_bands; ++m)
    {
        long double c = phi_tilde[m] - phi_tilde[0];
        c -= std::floor(c);
        out.phase_offset[m] = wrap_phase(static_cast<double>(two_pi_l * c));
    }
    out.sync_error = params.sync_error;
    return out;
}

double log_likelihood(const MultibandSignal &measurement, const MultibandSignal &reconstructed, double noise_std)
{
    if (!(noise_std > 0.0))
        throw DomainError("log_likelihood requires noise_std > 0");
    if (measurement.size() != reconstructed.size())
        throw ArgumentError("log_likelihood: band count mismatch");
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t m = 0; m < measurement.size(); ++m)
    {
        if (measurement[m].size() != reconstructed[m].size())
            throw ArgumentError("log_likelihood: sample count mismatch in band " + std::to_string(m));
        for (std::size_t n = 0; n < measurement[m].size(); ++n)
            sq += std::norm(measurement[m][n] - reconstructed[m][n]);
        count += measurement[m].size();
    }
    const double constant = static_cast<double>(count) * std::log(1.0 / (std::sqrt(two_pi) * noise_std));
    return constant - sq / (2.0 * noise_std * noise_std);
}

} // namespace mbsense
