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

#ifndef MBSENSE_COARSE_HPP
#define MBSENSE_COARSE_HPP

// Stage 1: per-band Hankel root-MUSIC, CRB-weighted fusion across bands, LS
// gains and imperfection calibration.

#include "mbsense/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mbsense
{

// (N - L + 1) x L, entry (i, l) = samples[i + l]
Eigen::MatrixXcd build_hankel(const std::vector<cdouble> &samples, std::size_t L);

// Singular values of a Hankel matrix, descending.
Eigen::VectorXd hankel_singular_values(const Eigen::MatrixXcd &hankel);

// Wax-Kailath MDL on squared singular values. Result lies in [1, len - 1].
std::size_t estimate_model_order(const std::vector<double> &singular_values, std::size_t snapshot_count);

// Orthonormal L x (L - K) basis with S^H p(z_k) = 0 for every signal pole z_k,
// where p(z) = [1, z, ..., z^(L-1)]^T.
Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd &hankel, std::size_t K);

struct RootMusicResult
{
    std::vector<cdouble> roots;  // sorted by ascending delay
    std::vector<double> delays;  // seconds, in [0, 1/f_s)
};

// Roots within ~1e-6 of the unit circle get a Newton polish of their angle on
// the null spectrum when polish is set.
RootMusicResult root_music_delays(const Eigen::MatrixXcd &noise_basis, double spacing_hz, std::size_t K,
                                  bool polish = true);

// round(N/3) clamped to [K+1, N-K]
std::size_t default_window(std::size_t num_subcarriers, std::size_t K);

// w_m = SNR_m * B_m * (f_c,m^2 + B_m^2 / 12)
double crb_weight(double snr, double bandwidth_hz, double carrier_hz);

struct BandDelayEstimate
{
    std::vector<double> delays;  // per path, any order; sorted internally
    double snr = 1.0;            // linear
    double bandwidth_hz = 0.0;
    double carrier_hz = 0.0;
};

// Weighted mean per path after rank association across bands.
std::vector<double> crb_weighted_combine(const std::vector<BandDelayEstimate> &per_band);

// LS gains for steering columns [exp(-j 2 pi n f_s d_k)]_n. Throws
// IllConditionedError if cond(X) > max_condition.
std::vector<cdouble> ls_amplitudes(const std::vector<cdouble> &samples, const std::vector<double> &delays,
                                   double spacing_hz, double max_condition = 1e12);

// gains[m][k], band_delays[m][k] (raw per-band delays), carriers[m]. Result[0] = 0.
std::vector<double> estimate_phase_offsets(const std::vector<std::vector<cdouble>> &gains,
                                           const std::vector<std::vector<double>> &band_delays,
                                           const std::vector<double> &carriers_hz);

// Mean over paths of (raw per-band delay - fused delay), per band.
std::vector<double> estimate_sync_errors(const std::vector<std::vector<double>> &band_delays,
                                         const std::vector<double> &fused_delays);

// Same, starting from the roots p_{k,m}.
std::vector<double> estimate_sync_errors(const std::vector<std::vector<cdouble>> &roots,
                                         const std::vector<double> &fused_delays,
                                         const std::vector<double> &spacings_hz);

// Root angle to delay in [0, 1/f_s).
double root_to_delay(cdouble root, double spacing_hz);

struct CoarseOptions
{
    std::optional<std::size_t> model_order;  // skip MDL when set
    std::optional<std::size_t> window;       // correlation window L
    double max_condition = 1e12;
    bool polish_roots = true;
};

struct BandRootMusic
{
    std::size_t window = 0;
    std::size_t model_order = 0;  // MDL result for this band (or the forced order)
    std::vector<double> singular_values;
    RootMusicResult roots;
};

// Hankel -> (MDL) -> noise subspace -> roots for one band.
BandRootMusic band_root_music(const std::vector<cdouble> &samples, double spacing_hz,
                              std::optional<std::size_t> K = std::nullopt,
                              std::optional<std::size_t> window = std::nullopt, bool polish_roots = true);

struct CoarseEstimate
{
    std::size_t num_paths = 0;
    std::vector<double> delays;       // fused tau_k, seconds, ascending
    std::vector<double> amplitudes;   // ||alpha_k||
    std::vector<double> delay_crb_var;  // per path fused CRB variance, s^2

    // per band m
    std::vector<std::vector<cdouble>> roots;        // p_{k,m}
    std::vector<std::vector<double>> band_delays;   // tau_{k,m}
    std::vector<std::vector<cdouble>> gains;        // alpha'_{k,m}
    std::vector<double> phase_offsets;              // phi'_m, [0] == 0
    std::vector<double> sync_errors;                // delta_m
    std::vector<double> band_snr;                   // linear
    std::vector<double> weights;                    // CRB weights used for fusion
    std::vector<std::size_t> band_model_orders;
    std::vector<std::size_t> windows;
};

// SNR of a band from an LS fit: fitted power over residual power per dof.
// Returns nullopt when the residual is degenerate.
std::optional<double> estimate_band_snr(const std::vector<cdouble> &samples, const std::vector<double> &delays,
                                        double spacing_hz);

// Per-path CRB variance of a delay in one band with unknown complex gain.
double delay_crb_variance(double amplitude, double noise_var_per_dim, const Band &band);

CoarseEstimate run_coarse(const CsiMeasurement &measurement, const CoarseOptions &options = {});

// Refined-model parameters implied by a coarse estimate (beta'_k from band-1
// gains, fused magnitudes).
RefinedParams coarse_to_refined(const CoarseEstimate &coarse, const ScenarioConfig &scenario);

} // namespace mbsense

#endif
