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

#include "criteria.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include "mbsense/baselines.hpp"
#include "mbsense/errors.hpp"
#include "mbsense/experiment.hpp"
#include "mbsense/metrics.hpp"
#include "mbsense/pipeline.hpp"
#include "mbsense/presets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace mbsense::acceptance
{

namespace
{

using clock_type = std::chrono::steady_clock;
using namespace mbsense::testing;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Inline invariant accounting shared by criteria 4-8 and reported by 10.
struct InvariantTally
{
    std::size_t runs = 0;         // SPVBI runs
    std::size_t checks = 0;       // simplex/box checks inside those runs
    std::size_t violations = 0;   // failed checks or failed estimator runs
    std::size_t cdf_checks = 0;
    std::size_t cdf_violations = 0;
    bool fed = false;

    void add(const std::vector<TrialRecord> &records, const ExperimentSpec &spec)
    {
        fed = true;
        const std::size_t points = spec.axis == SweepAxis::None ? 1 : spec.values.size();
        for (const TrialRecord &r : records)
            for (const EstimatorResult &e : r.results)
            {
                if (!e.ok)
                    ++violations;
                if (e.estimator == Estimator::Spvbi)
                {
                    ++runs;
                    checks += e.invariant_checks;
                    if (e.ok && e.invariant_checks == 0)
                        ++violations;
                }
            }
        // CDF monotone, in [0, 1], reaching 1 past the largest error.
        for (std::size_t p = 0; p < points; ++p)
            for (std::size_t s = 0; s < spec.estimators.size(); ++s)
            {
                const std::vector<double> errs = pooled_errors(records, p, s);
                if (errs.empty())
                    continue;
                const double top = *std::max_element(errs.begin(), errs.end());
                std::vector<double> grid;
                for (int i = 0; i <= 200; ++i)
                    grid.push_back(top * 1.01 * i / 200.0);
                const std::vector<double> cdf = metric_cdf(errs, grid);
                ++cdf_checks;
                bool ok = cdf.back() == 1.0 && cdf.front() >= 0.0;
                for (std::size_t i = 1; i < cdf.size(); ++i)
                    ok = ok && cdf[i] >= cdf[i - 1];
                if (!ok)
                    ++cdf_violations;
            }
    }
};

InvariantTally tally;

// Trials of every criterion derive from this seed.
constexpr std::uint64_t acceptance_seed = 20240601;

const SummaryRow &row(const std::vector<SummaryRow> &rows, std::size_t point, Estimator e)
{
    for (const SummaryRow &r : rows)
        if (r.point == point && r.estimator == e)
            return r;
    throw InternalError("missing summary row");
}

std::size_t failures(const std::vector<SummaryRow> &rows)
{
    std::size_t n = 0;
    for (const SummaryRow &r : rows)
        n += r.failed;
    return n;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle()
{
    const auto t0 = clock_type::now();
    const VarKind kinds[] = {VarKind::Delay, VarKind::Amplitude, VarKind::PathPhase, VarKind::BandPhase,
                             VarKind::SyncError};
    double worst = 0.0;
    std::ostringstream os;
    for (VarKind k : kinds)
    {
        const GradientCheck c = check_gradients(k, 20);
        worst = std::max({worst, c.position, c.weight});
        os << to_string(k) << " " << fmt("%.1e", std::max(c.position, c.weight)) << "; ";
    }
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = worst < 1e-5 && secs < 10.0;
    out.detail = "worst relative error " + fmt("%.2e", worst) + " (limit 1e-5) over 5 kinds x 20 configs [" +
                 os.str() + "runtime " + fmt("%.1f", secs) + " s < 10 s]";
    return out;
}

Outcome surrogate_oracle()
{
    const auto t0 = clock_type::now();
    std::mt19937_64 rng_x(11), rng_y(23);
    double pos_gap = 0.0, pos_kkt = 0.0, w_gap = 0.0, w_kkt = 0.0, w_excess = 0.0;
    for (int i = 0; i < 100; ++i)
    {
        const PositionInstance pi = position_instance(rng_x, i);
        const auto sol = solve_position_surrogate(pi.x, pi.f, pi.gamma, pi.lo, pi.hi);
        pos_kkt = std::max(pos_kkt, position_kkt_residual(sol, pi));
        for (std::size_t p = 0; p < sol.size(); ++p)
            pos_gap = std::max(pos_gap, std::abs(sol[p] - grid_position_minimizer(pi.x[p], pi.f[p], pi.gamma, pi.lo, pi.hi)));

        const WeightInstance wi = weight_instance(rng_y, i);
        const WeightSolution ws = solve_weight_surrogate(wi.y, wi.f, wi.gamma, wi.epsilon);
        const std::vector<double> g = grid_weight_minimizer(wi.y, wi.f, wi.gamma, wi.epsilon);
        w_kkt = std::max(w_kkt, ws.kkt_residual);
        double d = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p)
            d = std::max(d, std::abs(ws.y[p] - g[p]));
        // distance in units of the grid step times the dimension
        w_gap = std::max(w_gap, d / static_cast<double>(g.size()));
        w_excess = std::max(w_excess, weight_surrogate_value(ws.y, wi.y, wi.f, wi.gamma) -
                                          weight_surrogate_value(g, wi.y, wi.f, wi.gamma));
    }
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = pos_gap <= 1e-4 && w_gap <= 1e-4 && w_excess <= 1e-12 && pos_kkt < 1e-10 && w_kkt < 1e-10 &&
               secs < 30.0;
    out.detail = "position |x - grid| " + fmt("%.1e", pos_gap) + ", weight |y - grid|/N " + fmt("%.1e", w_gap) +
                 " (grid 1e-4), QP minus grid objective " + fmt("%.1e", w_excess) + ", KKT position " +
                 fmt("%.1e", pos_kkt) + " / weight " + fmt("%.1e", w_kkt) + " (< 1e-10), 100 instances, " +
                 fmt("%.1f", secs) + " s";
    return out;
}

Outcome pvbi_equivalence()
{
    const auto t0 = clock_type::now();
    double worst_w = 0.0, worst_full = -INFINITY, worst_shifted = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const TinyInstance ti = tiny_instance(seed);
        SpvbiHyper h;
        h.num_particles = 3;
        h.seed = seed;
        const PosteriorSet full = run_spvbi(ti.measurement, ti.priors, h);
        h.update_positions = false;
        const PosteriorSet wonly = run_spvbi(ti.measurement, ti.priors, h);

        const RefinedLikelihood lik(ti.measurement.samples, ti.measurement.scenario, 1, full.noise_std);
        const PvbiOracle oracle(lik);
        std::mt19937_64 rng(seed);
        ParticleSet ref = init_particles(ti.priors, lik.layout(), h, rng);
        if (ref.num_vars() != 2 || ref.x != wonly.particles.x)
            throw InternalError("PVBI reference does not share the SPVBI particle positions");
        oracle.optimize_weights(ref, h.epsilon);

        const double l_pvbi = oracle.objective(ref);
        const double l_w = oracle.objective(wonly.particles);
        const double l_full = oracle.objective(full.particles);
        worst_w = std::max(worst_w, std::abs(l_w - l_pvbi) / std::abs(l_pvbi));
        worst_full = std::max(worst_full, (l_full - l_pvbi) / std::abs(l_pvbi));
        // Same comparison with the likelihood constant removed.
        const double c = lik.constant();
        worst_shifted = std::max(worst_shifted, std::abs(l_w - l_pvbi) / std::abs(l_pvbi + c));
    }
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = worst_w <= 0.01 && worst_full <= 0.01 && secs < 120.0;
    out.detail = "weight-only SPVBI vs PVBI max |dL|/|L| " + fmt("%.2e", worst_w) +
                 ", full SPVBI max (L - L_pvbi)/|L_pvbi| " + fmt("%.2e", worst_full) + " (limit 1%), 10 instances; " +
                 "without the likelihood constant " + fmt("%.2e", worst_shifted) + "; " + fmt("%.1f", secs) + " s";
    return out;
}

// Noiseless, delta = 0, known model order, constant steps.
Outcome noiseless_recovery()
{
    const auto t0 = clock_type::now();
    ScenarioPreset pre = make_preset("small-bandwidth");
    pre.sync_sigma_s = 0.0;
    pre.width.sync_sigma_s = 0.0;
    pre.scenario.snr_db.reset();
    pre.scenario.noise_std = 0.0;
    const FullBandGrid grid = make_fullband_grid(pre.scenario);

    double worst_coarse = 0.0, worst_data = 0.0;
    std::size_t local_checks = 0, local_violations = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        std::mt19937_64 rng(acceptance_seed + seed);
        const ChannelParams truth = draw_truth(pre, rng);
        const CsiMeasurement meas = synthesize_csi(pre.scenario, truth, rng());
        PipelineOptions po;
        po.width = pre.width;
        po.coarse.model_order = truth.paths.size();
        po.hyper.seed = rng();
        po.hyper.max_iters = 1500;
        po.hyper.schedule.warm_iters = 1500;
        po.hyper.tolerance = 1e-12;
        const PipelineResult res = run_pipeline(meas, po, [&](std::size_t, const ParticleSet &ps) {
            for (std::size_t j = 0; j < ps.num_vars(); ++j)
            {
                ++local_checks;
                double s = 0.0;
                bool ok = true;
                for (std::size_t p = 0; p < ps.num_particles(); ++p)
                {
                    s += ps.y[j][p];
                    ok = ok && ps.y[j][p] >= po.hyper.epsilon * (1.0 - 1e-12) && ps.x[j][p] >= ps.priors[j].lo &&
                         ps.x[j][p] <= ps.priors[j].hi;
                }
                if (!ok || std::abs(s - 1.0) > 1e-9)
                    ++local_violations;
            }
        });
        for (std::size_t k = 0; k < truth.paths.size(); ++k)
            worst_coarse = std::max(worst_coarse, std::abs(res.coarse.delays[k] - truth.paths[k].delay) * 1e9);
        const auto t_full = reconstruct_fullband(to_refined(truth, pre.scenario), grid, pre.scenario);
        const auto e_full = reconstruct_fullband(res.posterior.map, grid, pre.scenario);
        worst_data = std::max(worst_data, metric_data_rmse(t_full, e_full));
        tally.runs += 1;
        tally.checks += res.posterior.invariant_checks + local_checks;
        tally.violations += local_violations;
        local_checks = 0;
    }
    tally.fed = true;
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = worst_coarse < 1e-3 && worst_data < 1e-6 && local_violations == 0 && secs < 60.0;
    out.detail = "coarse worst delay error " + fmt("%.2e", worst_coarse) + " ns (< 1e-3), pipeline worst full-band RMSE_data " +
                 fmt("%.2e", worst_data) + " (< 1e-6), 20 seeds, " + fmt("%.1f", secs) + " s";
    return out;
}

ExperimentSpec base_spec(const std::string &preset, std::vector<Estimator> est, std::size_t trials)
{
    ExperimentSpec s;
    s.preset = preset;
    s.estimators = std::move(est);
    s.trials = trials;
    s.base_seed = acceptance_seed;
    return s;
}

Outcome simplified_case(std::size_t trials = 100)
{
    const auto t0 = clock_type::now();
    ExperimentSpec spec = base_spec("simplified", {Estimator::RMusic, Estimator::Spvbi}, trials);
    spec.snr_db = 12.0;
    const auto records = run_experiment(spec);
    tally.add(records, spec);
    const auto rows = summarize(spec, records);
    const double m_r = row(rows, 0, Estimator::RMusic).median_ns;
    const double m_s = row(rows, 0, Estimator::Spvbi).median_ns;
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = failures(rows) == 0 && 2.0 * m_s <= m_r && secs < 600.0;
    out.detail = "median |tau err| SPVBI " + fmt("%.4f", m_s) + " ns vs R-MUSIC " + fmt("%.4f", m_r) + " ns, ratio " +
                 fmt("%.1f", m_r / m_s) + " (need >= 2), " + std::to_string(trials) + " seeds, " +
                 std::to_string(failures(rows)) + " failed runs";
    return out;
}

// Non-increasing in SNR with at most one inversion inside one standard error.
bool trend_ok(const std::vector<double> &rmse, const std::vector<double> &se, std::string &note)
{
    std::size_t inversions = 0;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < rmse.size(); ++i)
        if (rmse[i + 1] > rmse[i])
        {
            ++inversions;
            const double allow = std::max(se[i], se[i + 1]);
            note += " inversion at " + std::to_string(i + 1) + " by " + fmt("%.4f", rmse[i + 1] - rmse[i]) +
                    " (1 SE " + fmt("%.4f", allow) + ")";
            ok = ok && rmse[i + 1] - rmse[i] <= allow;
        }
    return ok && inversions <= 1;
}

Outcome snr_trend(std::size_t trials = 50)
{
    const auto t0 = clock_type::now();
    ExperimentSpec spec = base_spec("small-bandwidth", {Estimator::WrMusic, Estimator::Spvbi}, trials);
    spec.axis = SweepAxis::SnrDb;
    spec.values = {5.0, 10.0, 15.0, 20.0};
    const auto records = run_experiment(spec);
    tally.add(records, spec);
    const auto rows = summarize(spec, records);

    std::vector<double> rw, rs, sew, ses;
    bool below = true;
    std::ostringstream os;
    for (std::size_t p = 0; p < spec.values.size(); ++p)
    {
        const SummaryRow &w = row(rows, p, Estimator::WrMusic);
        const SummaryRow &s = row(rows, p, Estimator::Spvbi);
        rw.push_back(w.rmse_ns);
        sew.push_back(w.rmse_se_ns);
        rs.push_back(s.rmse_ns);
        ses.push_back(s.rmse_se_ns);
        below = below && s.rmse_ns <= w.rmse_ns;
        os << fmt("%.0f dB: ", spec.values[p]) << fmt("%.4f", s.rmse_ns) << "/" << fmt("%.4f", w.rmse_ns) << "; ";
    }
    std::string note;
    const bool tw = trend_ok(rw, sew, note);
    const bool ts = trend_ok(rs, ses, note);
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = failures(rows) == 0 && below && tw && ts && secs < 1200.0;
    out.detail = "RMSE ns SPVBI/WR-MUSIC " + os.str() + "SPVBI <= WR " + (below ? "yes" : "no") + ", trends " +
                 (ts ? "ok" : "broken") + "/" + (tw ? "ok" : "broken") + note + ", " + std::to_string(trials) +
                 " trials per point";
    return out;
}

Outcome band_gap_trend(std::size_t trials = 50)
{
    ExperimentSpec spec = base_spec("small-bandwidth", {Estimator::WrMusic, Estimator::Spvbi}, trials);
    spec.axis = SweepAxis::BandStart;
    spec.values = {2.44e9, 2.48e9, 2.52e9};
    const auto records = run_experiment(spec);
    tally.add(records, spec);
    const auto rows = summarize(spec, records);
    std::vector<double> med;
    std::ostringstream os;
    for (std::size_t p = 0; p < spec.values.size(); ++p)
    {
        med.push_back(row(rows, p, Estimator::Spvbi).median_ns);
        os << fmt("%.2f GHz: ", spec.values[p] / 1e9) << fmt("%.4f", med.back()) << " ns (WR "
           << fmt("%.4f", row(rows, p, Estimator::WrMusic).median_ns) << "); ";
    }
    bool mono = true;
    for (std::size_t i = 0; i + 1 < med.size(); ++i)
        mono = mono && med[i + 1] <= med[i];
    Outcome out;
    out.pass = failures(rows) == 0 && mono;
    out.detail = "SPVBI median delay error " + os.str() + "non-increasing " + (mono ? "yes" : "no") + ", " +
                 std::to_string(trials) + " trials per point";
    return out;
}

Outcome particle_claim(std::size_t trials = 50)
{
    ExperimentSpec spec = base_spec("small-bandwidth", {Estimator::Spvbi}, trials);
    spec.axis = SweepAxis::Particles;
    spec.values = {5.0, 20.0};
    const auto records = run_experiment(spec);
    tally.add(records, spec);
    const auto rows = summarize(spec, records);

    ExperimentSpec wspec = base_spec("small-bandwidth", {Estimator::Spvbi}, trials);
    wspec.pipeline.hyper.num_particles = 5;
    wspec.pipeline.hyper.update_positions = false;
    const auto wrecords = run_experiment(wspec);
    tally.add(wrecords, wspec);
    const auto wrows = summarize(wspec, wrecords);

    const double m5 = row(rows, 0, Estimator::Spvbi).median_ns;
    const double m20 = row(rows, 1, Estimator::Spvbi).median_ns;
    const double mw = row(wrows, 0, Estimator::Spvbi).median_ns;
    const double spread = std::max(m5, m20) / std::min(m5, m20);
    Outcome out;
    out.pass = failures(rows) == 0 && failures(wrows) == 0 && spread <= 1.25 && mw >= 1.5 * m5;
    out.detail = "median error N_p=5 " + fmt("%.4f", m5) + " ns, N_p=20 " + fmt("%.4f", m20) + " ns (ratio " +
                 fmt("%.3f", spread) + ", need <= 1.25); weight-only N_p=5 " + fmt("%.4f", mw) + " ns (" +
                 fmt("%.2f", mw / m5) + "x, need >= 1.5x), " + std::to_string(trials) + " seeds";
    return out;
}

// Per-iteration wall time of SPVBI on one small-bandwidth measurement: the
// difference of a long and a short run, so setup cost cancels.
double spvbi_iteration_ms(const CsiMeasurement &meas, const std::vector<CoarsePrior> &priors, std::size_t np,
                          std::size_t batch)
{
    SpvbiHyper h;
    h.num_particles = np;
    h.batch_size = batch;
    h.tolerance = 1e-300;
    h.seed = 3;
    auto best_ms = [&](std::size_t iters) {
        h.max_iters = iters;
        double best = INFINITY;
        for (int rep = 0; rep < 5; ++rep)
        {
            const auto t0 = clock_type::now();
            const PosteriorSet post = run_spvbi(meas, priors, h);
            if (post.iterations != iters)
                throw InternalError("timing run stopped early");
            best = std::min(best, 1e3 * seconds_since(t0));
        }
        return best;
    };
    const std::size_t short_run = 20, long_run = 80;
    return (best_ms(long_run) - best_ms(short_run)) / static_cast<double>(long_run - short_run);
}

double pvbi_iteration_ms(std::size_t np)
{
    TinyOptions opts;
    opts.num_free = 3;
    const TinyInstance ti = tiny_instance(4, opts);
    const RefinedLikelihood lik(ti.measurement.samples, ti.measurement.scenario, 1, ti.measurement.noise_std);
    SpvbiHyper h;
    h.num_particles = np;
    std::mt19937_64 rng(4);
    ParticleSet ps = init_particles(ti.priors, lik.layout(), h, rng);
    const PvbiOracle oracle(lik);
    double best = INFINITY;
    double sink = 0.0;
    for (int rep = 0; rep < 3; ++rep)
    {
        const auto t0 = clock_type::now();
        const int iters = 200;
        for (int it = 0; it < iters; ++it)
            for (std::size_t j = 0; j < ps.num_vars(); ++j)
            {
                sink += oracle.position_gradient(ps, j).front();
                oracle.update_weights(ps, j, h.epsilon);
            }
        best = std::min(best, 1e3 * seconds_since(t0) / iters);
    }
    if (!std::isfinite(sink))
        throw InternalError("non-finite PVBI gradient");
    return best;
}

Outcome complexity()
{
    const ScenarioPreset pre = make_preset("small-bandwidth");
    std::mt19937_64 rng(acceptance_seed);
    const ChannelParams truth = draw_truth(pre, rng);
    const CsiMeasurement meas = synthesize_csi(pre.scenario, truth, rng());
    CoarseOptions copt;
    copt.model_order = truth.paths.size();
    const auto priors = build_priors(run_coarse(meas, copt), pre.scenario, pre.width);

    const std::size_t sizes[] = {5, 10, 20};
    std::vector<double> tb, tn;
    for (std::size_t b : sizes)
        tb.push_back(spvbi_iteration_ms(meas, priors, 10, b));
    for (std::size_t n : sizes)
        tn.push_back(spvbi_iteration_ms(meas, priors, n, 10));
    const double p3 = pvbi_iteration_ms(3), p4 = pvbi_iteration_ms(4);

    // Linear scaling doubles the time per doubling; within 2x means each ratio
    // lies in [ideal / 2, ideal * 2].
    auto linear_ok = [](const std::vector<double> &t) {
        const double r1 = t[1] / t[0], r2 = t[2] / t[1], r = t[2] / t[0];
        return r1 >= 1.0 && r1 <= 4.0 && r2 >= 1.0 && r2 <= 4.0 && r >= 2.0 && r <= 8.0;
    };
    const double target = (4.0 / 3.0) * (4.0 / 3.0);
    const double pr = p4 / p3;
    const bool ok_b = linear_ok(tb), ok_n = linear_ok(tn);
    const bool ok_p = pr >= target / 2.0 && pr <= target * 2.0;
    Outcome out;
    out.pass = ok_b && ok_n && ok_p;
    out.detail = "SPVBI ms/iter B=5,10,20: " + fmt("%.3f", tb[0]) + ", " + fmt("%.3f", tb[1]) + ", " +
                 fmt("%.3f", tb[2]) + " (x" + fmt("%.2f", tb[2] / tb[0]) + " for 4x B); N_p=5,10,20: " +
                 fmt("%.3f", tn[0]) + ", " + fmt("%.3f", tn[1]) + ", " + fmt("%.3f", tn[2]) + " (x" +
                 fmt("%.2f", tn[2] / tn[0]) + " for 4x N_p); PVBI J=3 N_p 4 vs 3: x" + fmt("%.2f", pr) +
                 " (target " + fmt("%.2f", target) + ", window [" + fmt("%.2f", target / 2) + ", " +
                 fmt("%.2f", target * 2) + "]); linear ratios must lie in [2, 8]";
    // Least-squares t = a + b N over the N_p sweep, to show where the time goes.
    const double nbar = (5.0 + 10.0 + 20.0) / 3.0, tbar = (tn[0] + tn[1] + tn[2]) / 3.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
    {
        sxy += (static_cast<double>(sizes[i]) - nbar) * (tn[i] - tbar);
        sxx += (static_cast<double>(sizes[i]) - nbar) * (static_cast<double>(sizes[i]) - nbar);
    }
    const double slope = sxy / sxx;
    out.detail += "; N_p fit " + fmt("%.3f", tbar - slope * nbar) + " ms fixed + " + fmt("%.4f", slope) +
                  " ms per particle";
    return out;
}

Outcome invariants()
{
    std::string source = "criteria 4-8";
    if (!tally.fed)
    {
        // Reduced replays when run on its own.
        source = "reduced replays of criteria 4-8";
        noiseless_recovery();
        simplified_case(20);
        snr_trend(8);
        band_gap_trend(8);
        particle_claim(8);
    }
    // Seeded determinism: identical records for one and three workers.
    ExperimentSpec spec = base_spec("small-bandwidth", {Estimator::RMusic, Estimator::WrMusic, Estimator::Se,
                                                        Estimator::Spvbi}, 3);
    spec.axis = SweepAxis::SnrDb;
    spec.values = {10.0, 20.0};
    spec.workers = 1;
    const auto a = run_experiment(spec);
    spec.workers = 3;
    const auto b = run_experiment(spec);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
        for (std::size_t e = 0; e < a[i].results.size(); ++e)
        {
            same = same && a[i].seed == b[i].seed && a[i].results[e].ok == b[i].results[e].ok &&
                   a[i].results[e].delay_errors_ns == b[i].results[e].delay_errors_ns &&
                   a[i].results[e].iterations == b[i].results[e].iterations;
        }
    tally.add(a, spec);

    Outcome out;
    out.pass = tally.violations == 0 && tally.cdf_violations == 0 && tally.runs > 0 && tally.checks > 0 && same;
    out.detail = "from " + source + ": " + std::to_string(tally.runs) + " SPVBI runs, " + std::to_string(tally.checks) +
                 " simplex/box checks, " + std::to_string(tally.violations) + " violations; " +
                 std::to_string(tally.cdf_checks) + " CDFs, " + std::to_string(tally.cdf_violations) +
                 " non-monotone; determinism across worker counts " + (same ? "ok" : "BROKEN");
    return out;
}

} // namespace

Outcome run_criterion(int n)
{
    switch (n)
    {
    case 1:
        return gradient_oracle();
    case 2:
        return surrogate_oracle();
    case 3:
        return pvbi_equivalence();
    case 4:
        return noiseless_recovery();
    case 5:
        return simplified_case();
    case 6:
        return snr_trend();
    case 7:
        return band_gap_trend();
    case 8:
        return particle_claim();
    case 9:
        return complexity();
    case 10:
        return invariants();
    default:
        throw ArgumentError("unknown criterion " + std::to_string(n));
    }
}

} // namespace mbsense::acceptance
