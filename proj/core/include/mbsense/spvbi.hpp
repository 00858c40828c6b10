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

#ifndef MBSENSE_SPVBI_HPP
#define MBSENSE_SPVBI_HPP

// Stage 2: particle posterior over the refined parameters, fitted by block
// stochastic successive convex approximation.
//
// Everything in this header works in scaled units (ns, GHz, rad) except the
// RefinedParams outputs and SpvbiHyper::noise_std, which are SI / amplitude.

#include "mbsense/likelihood.hpp"
#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace mbsense
{

// rho(t) = min(1, a / (b + t)^kappa), same form for gamma.
struct StepSchedule
{
    double rho_a = 5.0;
    double rho_b = 5.0;
    double rho_kappa = 0.9;
    double gamma_a = 5.0;
    double gamma_b = 15.0;
    double gamma_kappa = 1.0;
    // rho = gamma = 1 for the first warm_iters iterations, then the decay
    // starts from t = 0.
    std::size_t warm_iters = 300;

    // Throws ConfigError unless 0.5 < rho_kappa < gamma_kappa <= 1 and a, b > 0.
    void validate() const;
    std::pair<double, double> step_sizes(std::size_t t) const;
};

struct SpvbiHyper
{
    std::size_t num_particles = 10;
    std::size_t batch_size = 10;
    double gamma_x = 1.0;
    double gamma_y = 1.0;
    double epsilon = 1e-3;
    StepSchedule schedule;
    std::size_t max_iters = 2000;
    double tolerance = 1e-4;
    std::size_t patience = 20;
    std::uint64_t seed = 0;

    bool update_positions = true;
    bool update_weights = true;
    // Scale Gamma_x per particle by the variable's Fisher information and the
    // tracked particle weight, so the x-step is a Gauss-Newton step.
    bool curvature_scaling = true;
    // Wrap circular variables instead of clipping them to [0, 2 pi].
    bool circular_wrap = true;
    // eta_w; falls back to the measurement's noise std, then to 1e-3 * rms(r).
    std::optional<double> noise_std;
    bool check_invariants = true;

    void validate() const;
};

struct ParticleSet
{
    SlotLayout layout;
    std::vector<double> base;            // slot values; fixed variables live here
    std::vector<CoarsePrior> priors;     // free variables in block order, scaled units
    std::vector<std::vector<double>> x;  // positions per variable
    std::vector<std::vector<double>> y;  // weights per variable

    std::size_t num_vars() const { return priors.size(); }
    std::size_t num_particles() const { return x.empty() ? 0 : x.front().size(); }
    bool is_circular(std::size_t j) const { return priors[j].kind == PriorKind::CircularUniform; }

    // Throws InternalError on a simplex or box violation.
    void check(double epsilon) const;
};

// Prior in scaled units.
CoarsePrior scale_prior(const CoarsePrior &prior);

// Positions drawn from each prior, uniform weights. Fixed priors go to `base`.
ParticleSet init_particles(const std::vector<CoarsePrior> &priors, const SlotLayout &layout, const SpvbiHyper &hyper,
                           std::mt19937_64 &rng);

// picks[b] holds one particle index per variable j' != j, in block order.
struct Minibatch
{
    std::size_t var = 0;
    std::vector<std::vector<std::size_t>> picks;
};

Minibatch sample_minibatch(const ParticleSet &particles, std::size_t j, std::size_t batch_size,
                           std::mt19937_64 &rng);

// Slot vector of one realization; slot j keeps its base value.
std::vector<double> realize(const ParticleSet &particles, std::size_t j, const std::vector<std::size_t> &pick);

double log_prior(const CoarsePrior &prior, double x);
double dlog_prior(const CoarsePrior &prior, double x);

// Per (sample, particle) log-likelihood and derivative for block j.
struct BatchEvaluation
{
    Eigen::MatrixXd loglik;   // B x N_p
    Eigen::MatrixXd dloglik;  // B x N_p, empty unless requested
};

std::vector<RefinedLikelihood::SampleTerms> batch_terms(const ParticleSet &particles, const Minibatch &batch,
                                                        const RefinedLikelihood &lik);
BatchEvaluation evaluate_batch(const ParticleSet &particles, const Minibatch &batch,
                               const std::vector<RefinedLikelihood::SampleTerms> &terms,
                               const RefinedLikelihood &lik, bool with_gradient);

// -y_p (d ln p(x_p) + mean_b d ln p(r | ., x_p))
std::vector<double> grad_position(const ParticleSet &particles, std::size_t j, const BatchEvaluation &eval);
// mean_b (ln y_p - ln p(x_p) - ln p(r | ., x_p) + 1)
std::vector<double> grad_weight(const ParticleSet &particles, std::size_t j, const BatchEvaluation &eval,
                                double epsilon);

// Convenience overloads that draw nothing and evaluate the given batch.
std::vector<double> grad_position(const ParticleSet &particles, std::size_t j, const Minibatch &batch,
                                  const RefinedLikelihood &lik);
std::vector<double> grad_weight(const ParticleSet &particles, std::size_t j, const Minibatch &batch,
                                const RefinedLikelihood &lik, double epsilon);

// (1 - rho) prev + rho * batch_grad
std::vector<double> update_tracked_gradient(const std::vector<double> &prev, const std::vector<double> &batch_grad,
                                            double rho);

// clip(x - f / (2 Gamma), lo, hi)
std::vector<double> solve_position_surrogate(const std::vector<double> &x, const std::vector<double> &f, double gamma,
                                             double lo, double hi);
std::vector<double> solve_position_surrogate(const std::vector<double> &x, const std::vector<double> &f,
                                             const std::vector<double> &gamma, double lo, double hi);
// Same step, wrapped into [0, 2 pi).
std::vector<double> solve_position_surrogate_circular(const std::vector<double> &x, const std::vector<double> &f,
                                                      const std::vector<double> &gamma);

struct WeightSolution
{
    std::vector<double> y;
    double kkt_residual = 0.0;
};

// argmin f^T (y - y_t) + Gamma ||y - y_t||^2 over {sum y = 1, eps <= y <= 1}.
WeightSolution solve_weight_surrogate(const std::vector<double> &y, const std::vector<double> &f, double gamma,
                                      double epsilon);

std::vector<double> smooth_update(const std::vector<double> &current, const std::vector<double> &bar, double gamma);
// Shortest-arc version for circular variables.
std::vector<double> smooth_update_circular(const std::vector<double> &current, const std::vector<double> &bar,
                                           double gamma);

struct TraceRow
{
    std::size_t iteration = 0;
    double objective = 0.0;  // stochastic proxy of the variational objective
    double max_delta = 0.0;
};

struct PosteriorSet
{
    ParticleSet particles;
    std::vector<TraceRow> trace;
    std::vector<double> map_slots;   // scaled
    std::vector<double> mmse_slots;  // scaled
    RefinedParams map;               // SI
    RefinedParams mmse;
    std::size_t iterations = 0;
    bool converged = false;
    double noise_std = 0.0;
    std::size_t invariant_checks = 0;
};

std::vector<double> extract_map(const ParticleSet &particles);
std::vector<double> extract_mmse(const ParticleSet &particles);

// Called after every full sweep over the blocks.
using SpvbiObserver = std::function<void(std::size_t iteration, const ParticleSet &particles)>;

PosteriorSet run_spvbi(const CsiMeasurement &measurement, const std::vector<CoarsePrior> &priors,
                       const SpvbiHyper &hyper, const SpvbiObserver &observer = {});

} // namespace mbsense

#endif
