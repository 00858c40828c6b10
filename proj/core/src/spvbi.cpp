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

#include "mbsense/spvbi.hpp"

#include "mbsense/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mbsense
{

namespace
{

constexpr double simplex_tol = 1e-12;

bool is_time(VarKind k)
{
    return k == VarKind::Delay || k == VarKind::SyncError;
}

double mean(const std::vector<double> &v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_finite(const Eigen::MatrixXd &m, const std::string &what, const VariableId &var)
{
    if (!m.allFinite())
        throw EstimationError("non-finite " + what + " while updating " + variable_label(var) +
                              " (noise std too small or parameters overflowed)");
}

double draw_prior(const CoarsePrior &p, std::mt19937_64 &rng)
{
    switch (p.kind)
    {
    case PriorKind::Uniform:
    case PriorKind::CircularUniform:
        return std::uniform_real_distribution<double>(p.lo, p.hi)(rng);
    case PriorKind::Gaussian: {
        std::normal_distribution<double> nd(p.center, std::sqrt(p.variance));
        for (int i = 0; i < 10000; ++i)
        {
            const double v = nd(rng);
            if (v >= p.lo && v <= p.hi)
                return v;
        }
        throw ConfigError("gaussian prior " + variable_label(p.var) + " has negligible mass inside its box");
    }
    case PriorKind::Fixed:
        return p.center;
    }
    return p.center;
}

double delta_of(const ParticleSet &ps, std::size_t j, const std::vector<double> &a, const std::vector<double> &b)
{
    double d = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        d = std::max(d, ps.is_circular(j) ? circular_distance(a[p], b[p]) : std::abs(a[p] - b[p]));
    return d / ps.priors[j].width();
}

double max_abs_diff(const std::vector<double> &a, const std::vector<double> &b)
{
    double d = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        d = std::max(d, std::abs(a[p] - b[p]));
    return d;
}

double rms(const MultibandSignal &s)
{
    return std::sqrt(mean_power(s));
}

} // namespace

void StepSchedule::validate() const
{
    if (!(rho_a > 0.0) || !(rho_b > 0.0) || !(gamma_a > 0.0) || !(gamma_b > 0.0))
        throw ConfigError("step schedule constants must be positive");
    if (!(rho_kappa > 0.5 && rho_kappa < gamma_kappa && gamma_kappa <= 1.0))
        throw ConfigError("step schedule needs 0.5 < kappa_rho < kappa_gamma <= 1");
}

std::pair<double, double> StepSchedule::step_sizes(std::size_t t) const
{
    if (t < warm_iters)
        return {1.0, 1.0};
    const double s = static_cast<double>(t - warm_iters);
    if (s == 0.0)
        return {1.0, 1.0};
    const double rho = std::min(1.0, rho_a / std::pow(rho_b + s, rho_kappa));
    const double gamma = std::min(1.0, gamma_a / std::pow(gamma_b + s, gamma_kappa));
    return {rho, gamma};
}

void SpvbiHyper::validate() const
{
    if (num_particles < 1)
        throw ConfigError("need at least one particle");
    if (batch_size < 1)
        throw ConfigError("mini-batch size must be >= 1");
    if (!(gamma_x > 0.0) || !(gamma_y > 0.0))
        throw ConfigError("surrogate curvatures must be positive");
    if (!(epsilon > 0.0) || !(epsilon * static_cast<double>(num_particles) < 1.0))
        throw ConfigError("weight floor must satisfy 0 < eps < 1/N_p");
    if (!(tolerance > 0.0))
        throw ConfigError("tolerance must be positive");
    if (noise_std && !(*noise_std > 0.0))
        throw DomainError("noise std must be positive");
    schedule.validate();
}

void ParticleSet::check(double epsilon) const
{
    for (std::size_t j = 0; j < num_vars(); ++j)
    {
        const std::string name = variable_label(priors[j].var);
        double sum = 0.0;
        for (double w : y[j])
        {
            if (!(w >= epsilon * (1.0 - 1e-9)) || !(w <= 1.0 + simplex_tol))
                throw InternalError("weight of " + name + " left [eps, 1]: " + std::to_string(w));
            sum += w;
        }
        if (std::abs(sum - 1.0) > simplex_tol)
            throw InternalError("weights of " + name + " sum to " + std::to_string(sum));
        for (double v : x[j])
            if (!(v >= priors[j].lo && v <= priors[j].hi) || (is_circular(j) && v >= two_pi))
                throw InternalError("particle of " + name + " left its box: " + std::to_string(v));
    }
}

CoarsePrior scale_prior(const CoarsePrior &prior)
{
    CoarsePrior s = prior;
    if (is_time(prior.var.kind))
    {
        s.center = to_scaled(prior.var.kind, prior.center);
        s.lo = to_scaled(prior.var.kind, prior.lo);
        s.hi = to_scaled(prior.var.kind, prior.hi);
        s.variance = prior.variance * ns_per_s * ns_per_s;
    }
    return s;
}

ParticleSet init_particles(const std::vector<CoarsePrior> &priors, const SlotLayout &layout, const SpvbiHyper &hyper,
                           std::mt19937_64 &rng)
{
    hyper.validate();
    ParticleSet ps;
    ps.layout = layout;
    ps.base.assign(layout.size(), 0.0);

    std::vector<bool> seen(layout.size(), false);
    std::vector<CoarsePrior> free;
    for (CoarsePrior raw : priors)
    {
        // A zero-width box pins the variable.
        if (raw.kind != PriorKind::Fixed && raw.kind != PriorKind::CircularUniform && raw.hi == raw.lo)
        {
            raw.kind = PriorKind::Fixed;
            raw.center = raw.lo;
        }
        raw.validate();
        const std::size_t s = layout.slot(raw.var);
        if (seen[s])
            throw ConfigError("duplicate prior for " + variable_label(raw.var));
        seen[s] = true;
        const CoarsePrior p = scale_prior(raw);
        ps.base[s] = p.center;
        if (raw.var.kind == VarKind::BandPhase && raw.var.index == 0)
        {
            if (p.kind != PriorKind::Fixed || p.center != 0.0)
                throw ConfigError("phi_1 is the phase reference and must be fixed at 0");
            continue;
        }
        if (p.kind != PriorKind::Fixed)
            free.push_back(p);
    }
    for (std::size_t k = 0; k < layout.num_paths; ++k)
        if (!seen[layout.slot({VarKind::Amplitude, k})] || !seen[layout.slot({VarKind::Delay, k})])
            throw ConfigError("every path needs delay and amplitude priors");

    std::stable_sort(free.begin(), free.end(), [&](const CoarsePrior &a, const CoarsePrior &b) {
        return layout.slot(a.var) < layout.slot(b.var);
    });

    const std::size_t np = hyper.num_particles;
    for (const CoarsePrior &p : free)
    {
        std::vector<double> xs(np);
        for (double &v : xs)
        {
            v = draw_prior(p, rng);
            if (p.kind == PriorKind::CircularUniform && v >= two_pi)
                v = 0.0;
        }
        ps.priors.push_back(p);
        ps.x.push_back(std::move(xs));
        ps.y.emplace_back(np, 1.0 / static_cast<double>(np));
    }
    return ps;
}

Minibatch sample_minibatch(const ParticleSet &particles, std::size_t j, std::size_t batch_size,
                           std::mt19937_64 &rng)
{
    const std::size_t nv = particles.num_vars();
    if (j >= nv)
        throw ArgumentError("sample_minibatch: block index out of range");
    Minibatch mb;
    mb.var = j;
    mb.picks.resize(batch_size);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (auto &pick : mb.picks)
    {
        pick.reserve(nv - 1);
        for (std::size_t v = 0; v < nv; ++v)
        {
            if (v == j)
                continue;
            const auto &w = particles.y[v];
            const double u = u01(rng);
            double acc = 0.0;
            std::size_t idx = w.size() - 1;
            for (std::size_t p = 0; p < w.size(); ++p)
            {
                acc += w[p];
                if (u < acc)
                {
                    idx = p;
                    break;
                }
            }
            pick.push_back(idx);
        }
    }
    return mb;
}

std::vector<double> realize(const ParticleSet &particles, std::size_t j, const std::vector<std::size_t> &pick)
{
    std::vector<double> slots = particles.base;
    std::size_t i = 0;
    for (std::size_t v = 0; v < particles.num_vars(); ++v)
    {
        if (v == j)
            continue;
        slots[particles.layout.slot(particles.priors[v].var)] = particles.x[v][pick.at(i++)];
    }
    return slots;
}

double log_prior(const CoarsePrior &prior, double x)
{
    switch (prior.kind)
    {
    case PriorKind::Uniform:
        return -std::log(prior.width());
    case PriorKind::CircularUniform:
        return -std::log(two_pi);
    case PriorKind::Gaussian: {
        const double sd = std::sqrt(prior.variance);
        const double z = 0.5 * (std::erfc(-(prior.hi - prior.center) / (sd * std::sqrt(2.0))) -
                                std::erfc(-(prior.lo - prior.center) / (sd * std::sqrt(2.0))));
        const double d = x - prior.center;
        return -d * d / (2.0 * prior.variance) - std::log(std::sqrt(two_pi * prior.variance) * z);
    }
    case PriorKind::Fixed:
        return 0.0;
    }
    return 0.0;
}

double dlog_prior(const CoarsePrior &prior, double x)
{
    return prior.kind == PriorKind::Gaussian ? -(x - prior.center) / prior.variance : 0.0;
}

std::vector<RefinedLikelihood::SampleTerms> batch_terms(const ParticleSet &particles, const Minibatch &batch,
                                                        const RefinedLikelihood &lik)
{
    std::vector<RefinedLikelihood::SampleTerms> terms(batch.picks.size());
    const VariableId var = particles.priors.at(batch.var).var;
    for (std::size_t b = 0; b < batch.picks.size(); ++b)
        lik.sample_terms(var, realize(particles, batch.var, batch.picks[b]), terms[b]);
    return terms;
}

BatchEvaluation evaluate_batch(const ParticleSet &particles, const Minibatch &batch,
                               const std::vector<RefinedLikelihood::SampleTerms> &terms,
                               const RefinedLikelihood &lik, bool with_gradient)
{
    BatchEvaluation ev;
    const VariableId var = particles.priors.at(batch.var).var;
    lik.evaluate(var, terms, particles.x[batch.var], with_gradient, ev.loglik, ev.dloglik);
    require_finite(ev.loglik, "log-likelihood", var);
    if (with_gradient)
        require_finite(ev.dloglik, "likelihood gradient", var);
    return ev;
}

std::vector<double> grad_position(const ParticleSet &particles, std::size_t j, const BatchEvaluation &eval)
{
    if (eval.dloglik.size() == 0)
        throw ArgumentError("grad_position: evaluation lacks derivatives");
    const CoarsePrior &prior = particles.priors[j];
    const Eigen::VectorXd md = eval.dloglik.colwise().mean();
    std::vector<double> g(particles.x[j].size());
    for (std::size_t p = 0; p < g.size(); ++p)
        g[p] = -particles.y[j][p] * (dlog_prior(prior, particles.x[j][p]) + md(static_cast<Eigen::Index>(p)));
    return g;
}

std::vector<double> grad_weight(const ParticleSet &particles, std::size_t j, const BatchEvaluation &eval,
                                double epsilon)
{
    const CoarsePrior &prior = particles.priors[j];
    const Eigen::VectorXd ml = eval.loglik.colwise().mean();
    std::vector<double> g(particles.y[j].size());
    for (std::size_t p = 0; p < g.size(); ++p)
    {
        const double yp = particles.y[j][p];
        if (!(yp >= epsilon * (1.0 - 1e-9)))
            throw InternalError("weight below floor in " + variable_label(prior.var));
        g[p] = std::log(yp) - log_prior(prior, particles.x[j][p]) - ml(static_cast<Eigen::Index>(p)) + 1.0;
    }
    return g;
}

std::vector<double> grad_position(const ParticleSet &particles, std::size_t j, const Minibatch &batch,
                                  const RefinedLikelihood &lik)
{
    if (batch.var != j)
        throw ArgumentError("grad_position: batch drawn for another block");
    const auto terms = batch_terms(particles, batch, lik);
    return grad_position(particles, j, evaluate_batch(particles, batch, terms, lik, true));
}

std::vector<double> grad_weight(const ParticleSet &particles, std::size_t j, const Minibatch &batch,
                                const RefinedLikelihood &lik, double epsilon)
{
    if (batch.var != j)
        throw ArgumentError("grad_weight: batch drawn for another block");
    const auto terms = batch_terms(particles, batch, lik);
    return grad_weight(particles, j, evaluate_batch(particles, batch, terms, lik, false), epsilon);
}

std::vector<double> update_tracked_gradient(const std::vector<double> &prev, const std::vector<double> &batch_grad,
                                            double rho)
{
    if (!(rho > 0.0 && rho <= 1.0))
        throw ArgumentError("tracking step must lie in (0, 1]");
    if (prev.size() != batch_grad.size())
        throw ArgumentError("update_tracked_gradient: size mismatch");
    std::vector<double> out(prev.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = rho == 1.0 ? batch_grad[i] : (1.0 - rho) * prev[i] + rho * batch_grad[i];
    return out;
}

std::vector<double> solve_position_surrogate(const std::vector<double> &x, const std::vector<double> &f, double gamma,
                                             double lo, double hi)
{
    return solve_position_surrogate(x, f, std::vector<double>(x.size(), gamma), lo, hi);
}

std::vector<double> solve_position_surrogate(const std::vector<double> &x, const std::vector<double> &f,
                                             const std::vector<double> &gamma, double lo, double hi)
{
    if (x.size() != f.size() || x.size() != gamma.size())
        throw ArgumentError("solve_position_surrogate: size mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (!(gamma[i] > 0.0))
            throw ArgumentError("surrogate curvature must be positive");
        out[i] = std::clamp(x[i] - f[i] / (2.0 * gamma[i]), lo, hi);
    }
    return out;
}

std::vector<double> solve_position_surrogate_circular(const std::vector<double> &x, const std::vector<double> &f,
                                                      const std::vector<double> &gamma)
{
    if (x.size() != f.size() || x.size() != gamma.size())
        throw ArgumentError("solve_position_surrogate: size mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (!(gamma[i] > 0.0))
            throw ArgumentError("surrogate curvature must be positive");
        out[i] = wrap_phase(x[i] - f[i] / (2.0 * gamma[i]));
    }
    return out;
}

WeightSolution solve_weight_surrogate(const std::vector<double> &y, const std::vector<double> &f, double gamma,
                                      double epsilon)
{
    const std::size_t n = y.size();
    if (n == 0 || f.size() != n)
        throw ArgumentError("solve_weight_surrogate: size mismatch");
    if (!(gamma > 0.0))
        throw ArgumentError("surrogate curvature must be positive");
    if (!(epsilon >= 0.0) || !(epsilon * static_cast<double>(n) < 1.0))
        throw ConfigError("weight floor infeasible: eps * N_p must be < 1");
    if (n == 1)
        return {{1.0}, 0.0};

    // Projection of v onto {sum = 1, eps <= y <= 1}; v may be shifted freely.
    const double fm = mean(f);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = y[i] - (f[i] - fm) / (2.0 * gamma);

    // g(lambda) = sum clip(v - lambda, eps, 1) is non-increasing and piecewise
    // linear with kinks at v_i - 1 and v_i - eps.
    auto g = [&](double lam) {
        double s = 0.0;
        for (double vi : v)
            s += std::clamp(vi - lam, epsilon, 1.0);
        return s;
    };
    std::vector<double> kinks;
    kinks.reserve(2 * n);
    for (double vi : v)
    {
        kinks.push_back(vi - 1.0);
        kinks.push_back(vi - epsilon);
    }
    std::sort(kinks.begin(), kinks.end());
    // g(kinks.front()) >= n * ... >= 1 and g(kinks.back()) = n eps < 1.
    std::size_t lo = 0, hi = kinks.size() - 1;
    while (hi - lo > 1)
    {
        const std::size_t mid = (lo + hi) / 2;
        if (g(kinks[mid]) >= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    // On [kinks[lo], kinks[hi]] the free set is fixed; solve the linear piece.
    const double probe = 0.5 * (kinks[lo] + kinks[hi]);
    double fixed_sum = 0.0, free_sum = 0.0;
    std::size_t free_count = 0;
    for (double vi : v)
    {
        const double t = vi - probe;
        if (t <= epsilon)
            fixed_sum += epsilon;
        else if (t >= 1.0)
            fixed_sum += 1.0;
        else
        {
            free_sum += vi;
            ++free_count;
        }
    }
    double lambda = kinks[lo];
    if (free_count > 0)
        lambda = (free_sum + fixed_sum - 1.0) / static_cast<double>(free_count);

    WeightSolution sol;
    sol.y.resize(n);
    std::vector<bool> is_free(n, false);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double t = v[i] - lambda;
        sol.y[i] = std::clamp(t, epsilon, 1.0);
        is_free[i] = t > epsilon && t < 1.0;
    }
    // Push the rounding error of the sum onto the free coordinates.
    double s = std::accumulate(sol.y.begin(), sol.y.end(), 0.0);
    if (free_count > 0)
    {
        const double c = (1.0 - s) / static_cast<double>(free_count);
        for (std::size_t i = 0; i < n; ++i)
            if (is_free[i])
                sol.y[i] = std::clamp(sol.y[i] + c, epsilon, 1.0);
    }

    // KKT of min Gamma ||y - v||^2: free coordinates share y_i - v_i = -lambda,
    // clipped ones need the right sign of their multiplier.
    double res = std::abs(std::accumulate(sol.y.begin(), sol.y.end(), 0.0) - 1.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double t = v[i] - lambda;
        double r = 0.0;
        if (is_free[i])
            r = std::abs(sol.y[i] - t);
        else if (sol.y[i] <= epsilon)
            r = std::max(0.0, t - epsilon);
        else
            r = std::max(0.0, 1.0 - t);
        res = std::max(res, 2.0 * gamma * r);
    }
    sol.kkt_residual = res;
    return sol;
}

std::vector<double> smooth_update(const std::vector<double> &current, const std::vector<double> &bar, double gamma)
{
    if (current.size() != bar.size())
        throw ArgumentError("smooth_update: size mismatch");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ArgumentError("smoothing step must lie in (0, 1]");
    std::vector<double> out(current.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = gamma == 1.0 ? bar[i] : (1.0 - gamma) * current[i] + gamma * bar[i];
    return out;
}

std::vector<double> smooth_update_circular(const std::vector<double> &current, const std::vector<double> &bar,
                                           double gamma)
{
    if (current.size() != bar.size())
        throw ArgumentError("smooth_update: size mismatch");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ArgumentError("smoothing step must lie in (0, 1]");
    std::vector<double> out(current.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = wrap_phase(current[i] + gamma * wrap_phase_signed(bar[i] - current[i]));
    return out;
}

std::vector<double> extract_map(const ParticleSet &particles)
{
    std::vector<double> slots = particles.base;
    for (std::size_t j = 0; j < particles.num_vars(); ++j)
    {
        const auto &y = particles.y[j];
        const auto best = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
        slots[particles.layout.slot(particles.priors[j].var)] = particles.x[j][best];
    }
    return slots;
}

std::vector<double> extract_mmse(const ParticleSet &particles)
{
    std::vector<double> slots = particles.base;
    for (std::size_t j = 0; j < particles.num_vars(); ++j)
    {
        const auto &x = particles.x[j];
        const auto &y = particles.y[j];
        double est = 0.0;
        if (particles.is_circular(j))
        {
            cdouble acc = 0.0;
            for (std::size_t p = 0; p < x.size(); ++p)
                acc += y[p] * std::polar(1.0, x[p]);
            est = std::abs(acc) > 0.0 ? wrap_phase(std::arg(acc)) : x.front();
        }
        else
        {
            for (std::size_t p = 0; p < x.size(); ++p)
                est += y[p] * x[p];
        }
        slots[particles.layout.slot(particles.priors[j].var)] = est;
    }
    return slots;
}

PosteriorSet run_spvbi(const CsiMeasurement &measurement, const std::vector<CoarsePrior> &priors,
                       const SpvbiHyper &hyper, const SpvbiObserver &observer)
{
    hyper.validate();
    measurement.scenario.validate();

    std::size_t num_paths = 0;
    for (const CoarsePrior &p : priors)
        if (p.var.kind == VarKind::Delay)
            num_paths = std::max(num_paths, p.var.index + 1);
    if (num_paths == 0)
        throw ConfigError("run_spvbi: no delay priors");

    double eta = 0.0;
    if (hyper.noise_std)
        eta = *hyper.noise_std;
    else if (measurement.noise_std > 0.0)
        eta = measurement.noise_std;
    else
        eta = 1e-3 * rms(measurement.samples);
    if (!(eta > 0.0))
        throw DomainError("run_spvbi: cannot determine a positive noise std");

    const RefinedLikelihood lik(measurement.samples, measurement.scenario, num_paths, eta);
    std::mt19937_64 rng(hyper.seed);

    PosteriorSet post;
    post.noise_std = eta;
    post.particles = init_particles(priors, lik.layout(), hyper, rng);
    ParticleSet &ps = post.particles;
    const std::size_t nv = ps.num_vars();
    const std::size_t np = hyper.num_particles;

    // Curvature of each block at the prior centers.
    std::vector<double> kappa(nv, 1.0);
    {
        std::vector<double> centers = ps.base;
        for (std::size_t j = 0; j < nv; ++j)
        {
            const CoarsePrior &p = ps.priors[j];
            double k = lik.fisher_diagonal(p.var, centers);
            if (p.kind == PriorKind::Gaussian)
                k += 1.0 / p.variance;
            kappa[j] = std::max(k, 1.0 / (p.width() * p.width()));
        }
    }

    std::vector<std::vector<double>> fx(nv, std::vector<double>(np, 0.0));
    std::vector<std::vector<double>> fy(nv, std::vector<double>(np, 0.0));
    std::vector<std::vector<double>> ybar(nv, std::vector<double>(np, 0.0));

    if (hyper.check_invariants)
    {
        ps.check(hyper.epsilon);
        ++post.invariant_checks;
    }
    if (nv == 0 || np == 1)
    {
        post.map_slots = post.mmse_slots = ps.base;
        if (nv > 0)
            post.map_slots = extract_map(ps), post.mmse_slots = extract_mmse(ps);
        post.map = from_slots(post.map_slots, lik.layout());
        post.mmse = from_slots(post.mmse_slots, lik.layout());
        post.converged = true;
        return post;
    }

    std::size_t calm = 0;
    for (std::size_t t = 0; t < hyper.max_iters; ++t)
    {
        const auto [rho, gamma] = hyper.schedule.step_sizes(t);
        double max_delta = 0.0;
        double entropy_prior = 0.0;
        double expected_ll = 0.0;

        for (std::size_t j = 0; j < nv; ++j)
        {
            const CoarsePrior &prior = ps.priors[j];
            const Minibatch batch = sample_minibatch(ps, j, hyper.batch_size, rng);
            const auto terms = batch_terms(ps, batch, lik);

            if (hyper.update_positions)
            {
                const BatchEvaluation ev = evaluate_batch(ps, batch, terms, lik, true);
                fx[j] = update_tracked_gradient(fx[j], grad_position(ps, j, ev), rho);
                std::vector<double> curv(np, hyper.gamma_x);
                if (hyper.curvature_scaling)
                    for (std::size_t p = 0; p < np; ++p)
                    {
                        const double w = std::max(ybar[j][p] > 0.0 ? ybar[j][p] : ps.y[j][p], hyper.epsilon);
                        curv[p] = 0.5 * hyper.gamma_x * kappa[j] * w;
                    }
                const bool wrap = hyper.circular_wrap && ps.is_circular(j);
                const std::vector<double> xb = wrap ? solve_position_surrogate_circular(ps.x[j], fx[j], curv)
                                                    : solve_position_surrogate(ps.x[j], fx[j], curv, prior.lo, prior.hi);
                std::vector<double> xn = wrap ? smooth_update_circular(ps.x[j], xb, gamma)
                                              : smooth_update(ps.x[j], xb, gamma);
                for (double &v : xn)
                {
                    v = std::clamp(v, prior.lo, prior.hi);
                    if (ps.is_circular(j) && v >= two_pi)
                        v = std::nextafter(two_pi, 0.0);
                }
                max_delta = std::max(max_delta, delta_of(ps, j, ps.x[j], xn));
                ps.x[j] = std::move(xn);
            }

            const BatchEvaluation ev = evaluate_batch(ps, batch, terms, lik, false);
            if (hyper.update_weights)
            {
                fy[j] = update_tracked_gradient(fy[j], grad_weight(ps, j, ev, hyper.epsilon), rho);
                const WeightSolution ws = solve_weight_surrogate(ps.y[j], fy[j], hyper.gamma_y, hyper.epsilon);
                if (hyper.check_invariants && !(ws.kkt_residual < 1e-8))
                    throw InternalError("weight surrogate KKT residual " + std::to_string(ws.kkt_residual));
                std::vector<double> yn = smooth_update(ps.y[j], ws.y, gamma);
                const double s = std::accumulate(yn.begin(), yn.end(), 0.0);
                for (double &w : yn)
                    w /= s;
                max_delta = std::max(max_delta, max_abs_diff(ps.y[j], yn));
                ps.y[j] = std::move(yn);
            }
            ybar[j] = update_tracked_gradient(ybar[j], ps.y[j], rho);

            const Eigen::VectorXd ml = ev.loglik.colwise().mean();
            for (std::size_t p = 0; p < np; ++p)
            {
                const double yp = ps.y[j][p];
                entropy_prior += yp * (std::log(yp) - log_prior(prior, ps.x[j][p]));
                expected_ll += yp * ml(static_cast<Eigen::Index>(p));
            }

            if (hyper.check_invariants)
            {
                ps.check(hyper.epsilon);
                ++post.invariant_checks;
            }
        }

        const double objective = entropy_prior - expected_ll / static_cast<double>(nv);
        if (!std::isfinite(objective))
            throw EstimationError("variational objective became non-finite at iteration " + std::to_string(t));
        post.trace.push_back({t, objective, max_delta});
        post.iterations = t + 1;
        if (observer)
            observer(t, ps);

        calm = max_delta < hyper.tolerance ? calm + 1 : 0;
        if (calm >= hyper.patience)
        {
            post.converged = true;
            break;
        }
    }

    post.map_slots = extract_map(ps);
    post.mmse_slots = extract_mmse(ps);
    post.map = from_slots(post.map_slots, lik.layout());
    post.mmse = from_slots(post.mmse_slots, lik.layout());
    return post;
}

} // namespace mbsense
