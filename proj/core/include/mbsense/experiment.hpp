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

#ifndef MBSENSE_EXPERIMENT_HPP
#define MBSENSE_EXPERIMENT_HPP

// Monte-Carlo sweeps over scenario presets.

#include "mbsense/coarse.hpp"
#include "mbsense/pipeline.hpp"
#include "mbsense/presets.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mbsense
{

enum class Estimator
{
    RMusic,   // root-MUSIC on band 1 only
    WrMusic,  // coarse stage (CRB-weighted fusion)
    Se,       // spectral estimation full-band reconstruction
    Spvbi     // full two-stage pipeline
};

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string &s);

enum class SweepAxis
{
    None,
    SnrDb,
    BandStart,  // start frequency of band 2, Hz
    Particles
};

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string &s);

struct ExperimentSpec
{
    std::string preset = "small-bandwidth";
    bool native_spacing = false;
    double snr_db = 15.0;  // ignored when sweeping SNR
    std::optional<ScenarioPreset> custom;  // overrides preset when set
    std::vector<Estimator> estimators{Estimator::RMusic, Estimator::WrMusic, Estimator::Se, Estimator::Spvbi};
    SweepAxis axis = SweepAxis::None;
    std::vector<double> values;
    std::size_t trials = 50;
    std::uint64_t base_seed = 1;
    std::size_t workers = 0;  // 0: MBSENSE_WORKERS, then hardware concurrency
    // The model order is known (as in the reference experiments) unless unset.
    bool known_model_order = true;
    PipelineOptions pipeline;  // width policy is taken from the preset
    // Each trial draws the same truth and noise at every sweep point.
    bool common_random_numbers = true;

    void validate() const;
};

struct EstimatorResult
{
    Estimator estimator = Estimator::Spvbi;
    bool ok = false;
    std::string error;
    std::vector<double> delay_errors_ns;  // per true path
    double runtime_ms = 0.0;
    std::size_t iterations = 0;           // SPVBI only
    std::optional<double> data_rmse;      // full-band reconstruction error
    std::size_t invariant_checks = 0;
};

struct TrialRecord
{
    std::size_t point = 0;
    double sweep_value = 0.0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::vector<EstimatorResult> results;  // in spec.estimators order
};

struct SummaryRow
{
    std::size_t point = 0;
    double sweep_value = 0.0;
    Estimator estimator = Estimator::Spvbi;
    std::size_t ok = 0;
    std::size_t failed = 0;
    double rmse_ns = 0.0;
    double rmse_se_ns = 0.0;
    double median_ns = 0.0;
    double mean_runtime_ms = 0.0;
    double mean_iterations = 0.0;
    double mean_data_rmse = 0.0;
};

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t point, std::size_t trial);
std::size_t resolve_workers(std::size_t requested);

// Scenario and truth for one sweep point.
ScenarioPreset preset_for_point(const ExperimentSpec &spec, double sweep_value);

// Runs one trial of every estimator on one drawn truth.
TrialRecord run_trial(const ExperimentSpec &spec, std::size_t point, std::size_t trial);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Records ordered by (point, trial), independent of the worker count.
std::vector<TrialRecord> run_experiment(const ExperimentSpec &spec, const ProgressFn &progress = {});

// Delay errors of one estimator at one point, pooled over paths and trials.
std::vector<double> pooled_errors(const std::vector<TrialRecord> &records, std::size_t point, std::size_t estimator_slot);

std::vector<SummaryRow> summarize(const ExperimentSpec &spec, const std::vector<TrialRecord> &records);

void write_records_csv(const std::string &path, const ExperimentSpec &spec, const std::vector<TrialRecord> &records);
void write_summary_csv(const std::string &path, const std::vector<SummaryRow> &rows);
// Empirical CDF of pooled delay errors per point and estimator.
void write_cdf_csv(const std::string &path, const ExperimentSpec &spec, const std::vector<TrialRecord> &records,
                   const std::vector<double> &grid_ns);

} // namespace mbsense

#endif
