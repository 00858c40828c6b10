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

#ifndef MBSENSE_TESTS_FIXTURES_HPP
#define MBSENSE_TESTS_FIXTURES_HPP

#include "mbsense/likelihood.hpp"
#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"
#include "mbsense/spvbi.hpp"

#include <random>
#include <vector>

namespace mbsense::testing
{

// Two bands of n subcarriers at 2.4 / 2.52 GHz keeping 40 MHz per band.
ScenarioConfig two_band_scenario(std::size_t n = 32, double snr_db = 15.0);

// Independent direct evaluation of the original model, long double phases.
MultibandSignal direct_original(const ScenarioConfig &sc, const ChannelParams &p);

// Random truth with K paths inside the unambiguous range.
ChannelParams random_truth(const ScenarioConfig &sc, std::size_t K, std::mt19937_64 &rng, double sync_sigma_s = 0.1e-9);

// Hand-made priors around `center` (SI units): every kind free with the
// requested box half-widths; band phase 1 fixed.
std::vector<CoarsePrior> priors_around(const RefinedParams &center, double delay_half_s, double amp_half,
                                       double phase_half, double sync_sigma_s);

// log p(r | slots) through the model module (SI units), the finite-difference
// oracle's ground truth.
double reference_loglik(const CsiMeasurement &meas, const std::vector<double> &slots, const SlotLayout &layout,
                        double eta);

} // namespace mbsense::testing

#endif
