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

#ifndef MBSENSE_IO_HPP
#define MBSENSE_IO_HPP

// File formats. Configs are JSON; CSI and tables are CSV. Indices in files
// are 0-based, delays in seconds, phases in radians.

#include "mbsense/coarse.hpp"
#include "mbsense/experiment.hpp"
#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"
#include "mbsense/spvbi.hpp"

#include <string>
#include <vector>

namespace mbsense
{

ScenarioConfig load_scenario(const std::string &path);
void save_scenario(const std::string &path, const ScenarioConfig &scenario);

ChannelParams load_truth(const std::string &path);
void save_truth(const std::string &path, const ChannelParams &truth);

void save_refined(const std::string &path, const RefinedParams &params);

std::vector<CoarsePrior> load_priors(const std::string &path);
void save_priors(const std::string &path, const std::vector<CoarsePrior> &priors);

// Missing keys keep their defaults.
SpvbiHyper load_hyper(const std::string &path);
void save_hyper(const std::string &path, const SpvbiHyper &hyper);

ExperimentSpec load_experiment_spec(const std::string &path);

void save_coarse(const std::string &path, const CoarseEstimate &coarse);
CoarseEstimate load_coarse(const std::string &path);

// Columns: band,subcarrier_index,real,imag
void write_csi_csv(const std::string &path, const MultibandSignal &samples);
// Shapes are checked against the scenario.
CsiMeasurement read_csi_csv(const std::string &path, const ScenarioConfig &scenario);

// particles.csv (variable,kind,index,particle,position,weight), estimates.json
// (MAP and MMSE per variable) and trace.csv (iteration,objective_proxy,
// max_block_delta). Positions are written in SI units.
void write_posterior(const std::string &dir, const PosteriorSet &posterior);

} // namespace mbsense

#endif
