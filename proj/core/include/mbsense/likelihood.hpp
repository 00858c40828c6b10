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

#ifndef MBSENSE_LIKELIHOOD_HPP
#define MBSENSE_LIKELIHOOD_HPP

// Refined-model likelihood in stage-2 units: delays and sync errors in ns,
// frequencies in GHz, phases in radians.

#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mbsense
{

inline constexpr double ns_per_s = 1e9;

// Flat parameter vector: [tau_1..K | a_1..K | beta_1..K | phi_1..M | delta_1..M].
// phi_1 is always 0.
struct SlotLayout
{
    std::size_t num_paths = 0;
    std::size_t num_bands = 0;

    std::size_t size() const { return 3 * num_paths + 2 * num_bands; }
    std::size_t slot(const VariableId &id) const;
};

// SI <-> stage-2 units for one variable kind.
double to_scaled(VarKind kind, double si_value);
double from_scaled(VarKind kind, double scaled_value);

std::vector<double> to_slots(const RefinedParams &params, const SlotLayout &layout);
RefinedParams from_slots(const std::vector<double> &slots, const SlotLayout &layout);

class RefinedLikelihood
{
public:
    // noise_std is eta_w, per real dimension; must be > 0.
    RefinedLikelihood(const MultibandSignal &samples, const ScenarioConfig &scenario, std::size_t num_paths,
                      double noise_std);

    const SlotLayout &layout() const { return layout_; }
    double noise_std() const { return eta_; }
    std::size_t total_samples() const { return static_cast<std::size_t>(r_.size()); }
    // N_tot * ln(1 / (sqrt(2 pi) eta))
    double constant() const { return constant_; }

    // Noiseless refined signal, flattened over bands.
    void signal(const std::vector<double> &slots, Eigen::VectorXcd &out) const;
    double log_likelihood(const std::vector<double> &slots) const;

    // Residual terms of one mini-batch realization with variable `var` left
    // free: s(x) = B + D * h(x). Everything the per-particle evaluation needs.
    struct SampleTerms
    {
        double rr = 0.0;     // sum |r - B|^2
        double dd = 0.0;     // sum |D|^2
        cdouble q = 0.0;     // sum conj(r - B) D
        Eigen::VectorXcd qv;   // conj(r - B) D on the variable's sample range (delay / sync only)
        Eigen::VectorXcd qcv;  // qv .* c, the per-sample frequencies
    };

    void sample_terms(const VariableId &var, const std::vector<double> &slots, SampleTerms &out) const;

    // log p(r | ...) and its derivative in x for each (sample, particle).
    void evaluate(const VariableId &var, const std::vector<SampleTerms> &terms, const std::vector<double> &positions,
                  bool with_gradient, Eigen::MatrixXd &loglik, Eigen::MatrixXd &dloglik) const;

    // Diagonal Fisher information of the variable at `slots` (scaled units),
    // ignoring cross-path terms.
    double fisher_diagonal(const VariableId &var, const std::vector<double> &slots) const;

private:
    void add_path(const std::vector<double> &slots, std::size_t k, std::size_t band_begin, std::size_t band_end,
                  Eigen::VectorXcd &acc) const;
    // range and frequencies of the phase ramp for delay / sync variables
    void ramp(const VariableId &var, std::size_t &begin, std::size_t &end, const Eigen::VectorXd *&freq) const;

    SlotLayout layout_;
    Eigen::VectorXcd r_;
    Eigen::VectorXd fprime_;   // f'_m + n f_s, GHz
    Eigen::VectorXd nfs_;      // n f_s, GHz
    std::vector<std::size_t> band_start_;  // flattened offsets, size M + 1
    std::vector<double> carrier_offset_;   // f'_m, GHz
    std::vector<double> spacing_;          // f_s,m, GHz
    double eta_ = 0.0;
    double constant_ = 0.0;
};

} // namespace mbsense

#endif
