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

#include "mbsense/experiment.hpp"

#include "mbsense/baselines.hpp"
#include "mbsense/errors.hpp"
#include "mbsense/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace mbsense
{

namespace
{

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point t0)
{
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

// |est - truth| per true path; nearest estimate when the counts differ.
std::vector<double> delay_errors_ns(std::vector<double> est, const ChannelParams &truth)
{
    if (est.empty())
        throw EstimationError("estimator returned no delays");
    std::sort(est.begin(), est.end());
    std::vector<double> out;
    for (std::size_t k = 0; k < truth.paths.size(); ++k)
    {
        const double t = truth.paths[k].delay;
        double e = 0.0;
        if (est.size() == truth.paths.size())
        {
            e = std::abs(est[k] - t);
        }
        else
        {
            e = std::abs(est.front() - t);
            for (double d : est)
                e = std::min(e, std::abs(d - t));
        }
        out.push_back(e * 1e9);
    }
    return out;
}

std::vector<double> refined_delays(const RefinedParams &p)
{
    std::vector<double> d;
    for (const auto &path : p.paths)
        d.push_back(path.delay);
    return d;
}

std::ofstream open_out(const std::string &path)
{
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << std::setprecision(12);
    return f;
}

} // namespace

std::string to_string(Estimator e)
{
    switch (e)
    {
    case Estimator::RMusic:
        return "r_music";
    case Estimator::WrMusic:
        return "wr_music";
    case Estimator::Se:
        return "se";
    case Estimator::Spvbi:
        return "spvbi";
    }
    return "?";
}

Estimator estimator_from_string(const std::string &s)
{
    for (Estimator e : {Estimator::RMusic, Estimator::WrMusic, Estimator::Se, Estimator::Spvbi})
        if (to_string(e) == s)
            return e;
    throw ConfigError("unknown estimator '" + s + "'");
}

std::string to_string(SweepAxis a)
{
    switch (a)
    {
    case SweepAxis::None:
        return "none";
    case SweepAxis::SnrDb:
        return "snr_db";
    case SweepAxis::BandStart:
        return "band_start";
    case SweepAxis::Particles:
        return "particles";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string &s)
{
    for (SweepAxis a : {SweepAxis::None, SweepAxis::SnrDb, SweepAxis::BandStart, SweepAxis::Particles})
        if (to_string(a) == s)
            return a;
    throw ConfigError("unknown sweep axis '" + s + "'");
}

void ExperimentSpec::validate() const
{
    if (trials < 1)
        throw ConfigError("experiment needs at least one trial");
    if (estimators.empty())
        throw ConfigError("experiment needs at least one estimator");
    if (axis != SweepAxis::None && values.empty())
        throw ConfigError("sweep axis set but no sweep values given");
    pipeline.hyper.validate();
    // Building every point validates the scenario, including aliasing of the
    // nominal delays.
    const std::vector<double> pts = axis == SweepAxis::None ? std::vector<double>{0.0} : values;
    for (double v : pts)
    {
        if (axis == SweepAxis::Particles && (v < 1.0 || v != std::floor(v)))
            throw ConfigError("particle counts must be positive integers");
        const ScenarioPreset p = preset_for_point(*this, v);
        check_aliasing(p.scenario, p.nominal);
    }
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t point, std::size_t trial)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(point), static_cast<std::uint32_t>(trial),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial) >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::size_t resolve_workers(std::size_t requested)
{
    if (requested > 0)
        return requested;
    if (const char *env = std::getenv("MBSENSE_WORKERS"))
    {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ScenarioPreset preset_for_point(const ExperimentSpec &spec, double sweep_value)
{
    const double snr = spec.axis == SweepAxis::SnrDb ? sweep_value : spec.snr_db;
    ScenarioPreset p = spec.custom ? *spec.custom : make_preset(spec.preset, spec.native_spacing, snr);
    if (spec.axis == SweepAxis::SnrDb)
    {
        p.scenario.noise_std.reset();
        p.scenario.snr_db = snr;
    }
    if (spec.axis == SweepAxis::BandStart)
        set_band_start(p, 1, sweep_value);
    p.scenario.validate();
    return p;
}

TrialRecord run_trial(const ExperimentSpec &spec, std::size_t point, std::size_t trial)
{
    const double value = spec.axis == SweepAxis::None ? 0.0 : spec.values.at(point);
    const ScenarioPreset preset = preset_for_point(spec, value);
    TrialRecord rec;
    rec.point = point;
    rec.sweep_value = value;
    rec.trial = trial;
    rec.seed = derive_seed(spec.base_seed, spec.common_random_numbers ? 0 : point, trial);

    std::mt19937_64 rng(rec.seed);
    const ChannelParams truth = draw_truth(preset, rng);
    const std::uint64_t noise_seed = rng();
    const std::uint64_t spvbi_seed = rng();
    const CsiMeasurement meas = synthesize_csi(preset.scenario, truth, noise_seed);
    const std::size_t k = truth.paths.size();

    std::optional<FullBandGrid> grid;
    std::vector<cdouble> truth_full;
    try
    {
        grid = make_fullband_grid(preset.scenario);
        truth_full = reconstruct_fullband(to_refined(truth, preset.scenario), *grid, preset.scenario);
    }
    catch (const ConfigError &)
    {
        grid.reset();
    }

    CoarseOptions copt = spec.pipeline.coarse;
    if (spec.known_model_order)
        copt.model_order = k;

    for (Estimator e : spec.estimators)
    {
        EstimatorResult r;
        r.estimator = e;
        const auto t0 = clock_type::now();
        try
        {
            switch (e)
            {
            case Estimator::RMusic: {
                const auto d = single_band_root_music(meas.samples.front(), preset.scenario.bands.front().spacing_hz,
                                                      copt.model_order ? *copt.model_order : k, copt.polish_roots);
                r.runtime_ms = elapsed_ms(t0);
                r.delay_errors_ns = delay_errors_ns(d, truth);
                break;
            }
            case Estimator::WrMusic: {
                const CoarseEstimate c = run_coarse(meas, copt);
                r.runtime_ms = elapsed_ms(t0);
                r.delay_errors_ns = delay_errors_ns(c.delays, truth);
                if (grid)
                    r.data_rmse = metric_data_rmse(
                        truth_full, reconstruct_fullband(coarse_to_refined(c, preset.scenario), *grid, preset.scenario));
                break;
            }
            case Estimator::Se: {
                const SeEstimate se = se_estimate(meas, copt.model_order ? *copt.model_order : k, copt);
                r.runtime_ms = elapsed_ms(t0);
                r.delay_errors_ns = delay_errors_ns(se.delays, truth);
                if (grid)
                    r.data_rmse = metric_data_rmse(truth_full, reconstruct_fullband(se, *grid));
                break;
            }
            case Estimator::Spvbi: {
                PipelineOptions po = spec.pipeline;
                po.coarse = copt;
                po.width = preset.width;
                po.width.delay_width_s = spec.pipeline.width.delay_width_s;
                po.width.delay_multiplier = spec.pipeline.width.delay_multiplier;
                po.hyper.seed = spvbi_seed;
                if (spec.axis == SweepAxis::Particles)
                    po.hyper.num_particles = static_cast<std::size_t>(value);
                const PipelineResult pr = run_pipeline(meas, po);
                r.runtime_ms = elapsed_ms(t0);
                r.iterations = pr.posterior.iterations;
                r.invariant_checks = pr.posterior.invariant_checks;
                r.delay_errors_ns = delay_errors_ns(refined_delays(pr.posterior.map), truth);
                if (grid)
                    r.data_rmse =
                        metric_data_rmse(truth_full, reconstruct_fullband(pr.posterior.map, *grid, preset.scenario));
                break;
            }
            }
            r.ok = std::all_of(r.delay_errors_ns.begin(), r.delay_errors_ns.end(),
                               [](double v) { return std::isfinite(v); });
            if (!r.ok)
                r.error = "non-finite delay error";
        }
        catch (const std::exception &ex)
        {
            r.ok = false;
            r.error = ex.what();
            r.runtime_ms = elapsed_ms(t0);
        }
        rec.results.push_back(std::move(r));
    }
    return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec &spec, const ProgressFn &progress)
{
    spec.validate();
    const std::size_t points = spec.axis == SweepAxis::None ? 1 : spec.values.size();
    const std::size_t total = points * spec.trials;
    std::vector<TrialRecord> records(total);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&]() {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= total)
                return;
            records[i] = run_trial(spec, i / spec.trials, i % spec.trials);
            const std::size_t d = ++done;
            if (progress)
            {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(d, total);
            }
        }
    };

    const std::size_t nw = std::min(resolve_workers(spec.workers), total);
    if (nw <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nw; ++w)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
    }
    return records;
}

std::vector<double> pooled_errors(const std::vector<TrialRecord> &records, std::size_t point, std::size_t estimator_slot)
{
    std::vector<double> out;
    for (const auto &rec : records)
    {
        if (rec.point != point)
            continue;
        const EstimatorResult &r = rec.results.at(estimator_slot);
        if (r.ok)
            out.insert(out.end(), r.delay_errors_ns.begin(), r.delay_errors_ns.end());
    }
    return out;
}

std::vector<SummaryRow> summarize(const ExperimentSpec &spec, const std::vector<TrialRecord> &records)
{
    const std::size_t points = spec.axis == SweepAxis::None ? 1 : spec.values.size();
    std::vector<SummaryRow> rows;
    for (std::size_t pt = 0; pt < points; ++pt)
    {
        for (std::size_t s = 0; s < spec.estimators.size(); ++s)
        {
            SummaryRow row;
            row.point = pt;
            row.sweep_value = spec.axis == SweepAxis::None ? 0.0 : spec.values[pt];
            row.estimator = spec.estimators[s];
            double rt = 0.0, it = 0.0, dr = 0.0;
            std::size_t ndr = 0;
            for (const auto &rec : records)
            {
                if (rec.point != pt)
                    continue;
                const EstimatorResult &r = rec.results.at(s);
                if (!r.ok)
                {
                    ++row.failed;
                    continue;
                }
                ++row.ok;
                rt += r.runtime_ms;
                it += static_cast<double>(r.iterations);
                if (r.data_rmse)
                {
                    dr += *r.data_rmse;
                    ++ndr;
                }
            }
            const std::vector<double> errs = pooled_errors(records, pt, s);
            if (!errs.empty())
            {
                row.rmse_ns = metric_rmse(errs);
                row.rmse_se_ns = rmse_standard_error(errs);
                row.median_ns = median(errs);
            }
            else
            {
                row.rmse_ns = row.rmse_se_ns = row.median_ns = std::numeric_limits<double>::quiet_NaN();
            }
            if (row.ok > 0)
            {
                row.mean_runtime_ms = rt / static_cast<double>(row.ok);
                row.mean_iterations = it / static_cast<double>(row.ok);
            }
            row.mean_data_rmse = ndr > 0 ? dr / static_cast<double>(ndr) : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
        }
    }
    return rows;
}

void write_records_csv(const std::string &path, const ExperimentSpec &spec, const std::vector<TrialRecord> &records)
{
    auto f = open_out(path);
    f << "point,sweep_value,trial,seed,estimator,ok,path,delay_error_ns,runtime_ms,iterations,data_rmse,error\n";
    for (const auto &rec : records)
        for (std::size_t s = 0; s < rec.results.size(); ++s)
        {
            const EstimatorResult &r = rec.results[s];
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            const std::size_t rows = std::max<std::size_t>(1, r.delay_errors_ns.size());
            for (std::size_t k = 0; k < rows; ++k)
            {
                f << rec.point << ',' << rec.sweep_value << ',' << rec.trial << ',' << rec.seed << ','
                  << to_string(spec.estimators.at(s)) << ',' << (r.ok ? 1 : 0) << ',' << k + 1 << ',';
                if (k < r.delay_errors_ns.size())
                    f << r.delay_errors_ns[k];
                else
                    f << "nan";
                f << ',' << r.runtime_ms << ',' << r.iterations << ',';
                if (r.data_rmse)
                    f << *r.data_rmse;
                f << ',' << msg << '\n';
            }
        }
}

void write_summary_csv(const std::string &path, const std::vector<SummaryRow> &rows)
{
    auto f = open_out(path);
    f << "point,sweep_value,estimator,ok,failed,rmse_ns,rmse_se_ns,median_ns,mean_runtime_ms,mean_iterations,"
         "mean_data_rmse\n";
    for (const auto &r : rows)
        f << r.point << ',' << r.sweep_value << ',' << to_string(r.estimator) << ',' << r.ok << ',' << r.failed << ','
          << r.rmse_ns << ',' << r.rmse_se_ns << ',' << r.median_ns << ',' << r.mean_runtime_ms << ','
          << r.mean_iterations << ',' << r.mean_data_rmse << '\n';
}

void write_cdf_csv(const std::string &path, const ExperimentSpec &spec, const std::vector<TrialRecord> &records,
                   const std::vector<double> &grid_ns)
{
    auto f = open_out(path);
    f << "point,sweep_value,estimator,error_ns,cdf\n";
    const std::size_t points = spec.axis == SweepAxis::None ? 1 : spec.values.size();
    for (std::size_t pt = 0; pt < points; ++pt)
        for (std::size_t s = 0; s < spec.estimators.size(); ++s)
        {
            const std::vector<double> errs = pooled_errors(records, pt, s);
            if (errs.empty())
                continue;
            const std::vector<double> c = metric_cdf(errs, grid_ns);
            for (std::size_t g = 0; g < grid_ns.size(); ++g)
                f << pt << ',' << (spec.axis == SweepAxis::None ? 0.0 : spec.values[pt]) << ','
                  << to_string(spec.estimators[s]) << ',' << grid_ns[g] << ',' << c[g] << '\n';
        }
}

} // namespace mbsense
