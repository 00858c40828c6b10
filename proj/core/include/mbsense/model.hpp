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

#ifndef MBSENSE_MODEL_HPP
#define MBSENSE_MODEL_HPP

// Multiband OFDM channel-frequency-response models.
//
// Units: frequencies in Hz, delays in seconds, phases in radians. All stored
// phases are normalised to [0, 2*pi).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace mbsense
{

using cdouble = std::complex<double>;

// Complex samples per band, outer index = band, inner index = subcarrier.
using MultibandSignal = std::vector<std::vector<cdouble>>;

inline constexpr double two_pi = 6.283185307179586476925286766559;

// Wraps an angle into [0, 2*pi).
double wrap_phase(double angle);

// Wraps an angle into (-pi, pi].
double wrap_phase_signed(double angle);

// Absolute angular distance on the circle, in [0, pi].
double circular_distance(double a, double b);

struct Band
{
    double start_freq_hz = 0.0;  // f_c,m
    double spacing_hz = 0.0;     // f_s,m
    std::size_t num_subcarriers = 0;

    double frequency(std::size_t n) const { return start_freq_hz + static_cast<double>(n) * spacing_hz; }
    double last_frequency() const { return frequency(num_subcarriers - 1); }
    double bandwidth() const { return static_cast<double>(num_subcarriers) * spacing_hz; }
};

struct ScenarioConfig
{
    std::vector<Band> bands;
    // Exactly one of these is authoritative. noise_std is the standard deviation
    // of the real and of the imaginary noise part (E|w|^2 = 2 noise_std^2).
    std::optional<double> noise_std;
    std::optional<double> snr_db;

    std::size_t num_bands() const { return bands.size(); }
    std::size_t total_samples() const;

    // Throws ConfigError on any violated invariant.
    void validate() const;
};

struct PathParams
{
    double amplitude = 0.0;  // alpha_k >= 0
    double phase = 0.0;      // beta_k
    double delay = 0.0;      // tau_k, seconds
};

// Ground truth of the original signal model.
struct ChannelParams
{
    std::vector<PathParams> paths;
    std::vector<double> band_phase;  // phi_m in [0, 2*pi)
    std::vector<double> sync_error;  // delta_m, seconds

    void validate(const ScenarioConfig &scenario) const;
};

// Parameters of the refined (band-gap aperture) model. Band 1 is the phase and
// carrier reference, so phase_offset[0] is always 0.
struct RefinedParams
{
    std::vector<PathParams> paths;     // {alpha'_k, beta'_k, tau_k}
    std::vector<double> phase_offset;  // phi'_m, [0] == 0
    std::vector<double> sync_error;    // delta_m, seconds

    void validate(const ScenarioConfig &scenario) const;
};

// f'_c,m = f_c,m - f_c,1
double carrier_offset(const ScenarioConfig &scenario, std::size_t band);

struct CsiMeasurement
{
    MultibandSignal samples;
    ScenarioConfig scenario;
    std::uint64_t noise_seed = 0;
    double noise_std = 0.0;  // the resolved per-dimension noise std actually used
};

// Rejects delay sets that alias: every tau_k + delta_m must lie in [0, 1/f_s,m).
void check_aliasing(const ScenarioConfig &scenario, const ChannelParams &params);

// Mean |s|^2 over all samples of a signal.
double mean_power(const MultibandSignal &signal);

// Per-dimension noise std implied by the scenario for a given noiseless signal.
// With snr_db authoritative: SNR = mean|s|^2 / (2 noise_std^2).
double resolve_noise_std(const ScenarioConfig &scenario, const MultibandSignal &noiseless);

MultibandSignal synthesize_noiseless(const ScenarioConfig &scenario, const ChannelParams &truth);

CsiMeasurement synthesize_csi(const ScenarioConfig &scenario, const ChannelParams &truth, std::uint64_t seed);

MultibandSignal reconstruct_original(const ChannelParams &params, const ScenarioConfig &scenario);

MultibandSignal reconstruct_refined(const RefinedParams &params, const ScenarioConfig &scenario);

RefinedParams to_refined(const ChannelParams &params, const ScenarioConfig &scenario);

// Log-likelihood with the additive constant kept:
//   N_tot * ln(1 / (sqrt(2 pi) eta)) - sum |r - s|^2 / (2 eta^2)
double log_likelihood(const MultibandSignal &measurement, const MultibandSignal &reconstructed, double noise_std);

} // namespace mbsense

#endif
