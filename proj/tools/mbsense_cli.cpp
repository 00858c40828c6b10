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

// mbsense command line: synthesize CSI, run either stage, the baselines, or a
// Monte-Carlo experiment. Every subcommand writes its results under --out.

#include "mbsense/baselines.hpp"
#include "mbsense/coarse.hpp"
#include "mbsense/errors.hpp"
#include "mbsense/experiment.hpp"
#include "mbsense/io.hpp"
#include "mbsense/pipeline.hpp"
#include "mbsense/presets.hpp"
#include "mbsense/priors.hpp"
#include "mbsense/spvbi.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mbsense;
using json = nlohmann::json;

namespace
{

struct Common
{
    std::string preset;
    std::string scenario_path;
    std::optional<double> snr_db;
    bool native_spacing = false;
};

// Scenario from a file, else from a preset.
ScenarioConfig resolve_scenario(const Common &c)
{
    if (!c.scenario_path.empty())
    {
        ScenarioConfig sc = load_scenario(c.scenario_path);
        if (c.snr_db)
        {
            sc.snr_db = c.snr_db;
            sc.noise_std.reset();
        }
        return sc;
    }
    if (c.preset.empty())
        throw ConfigError("give --scenario or --preset");
    return make_preset(c.preset, c.native_spacing, c.snr_db.value_or(15.0)).scenario;
}

void add_scenario_options(CLI::App *cmd, Common &c)
{
    cmd->add_option("--scenario", c.scenario_path, "scenario JSON");
    cmd->add_option("--preset", c.preset, "small-bandwidth, large-bandwidth or simplified");
    cmd->add_option("--snr", c.snr_db, "SNR in dB (overrides the scenario)");
    cmd->add_flag("--native-spacing", c.native_spacing, "keep the 78.125 kHz preset spacing");
}

std::string out_file(const std::string &dir, const std::string &name)
{
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

void write_json_file(const std::string &path, const json &j)
{
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << j.dump(2) << '\n';
}

json delays_json(const std::vector<double> &delays)
{
    return json{{"delays_s", delays}};
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"multiband delay estimation: root-MUSIC coarse stage and particle VBI refinement"};
    app.require_subcommand(1);

    // synth
    Common synth_c;
    std::string synth_truth, synth_out = "synth_out";
    std::uint64_t synth_seed = 1;
    auto *synth = app.add_subcommand("synth", "synthesize multiband CSI");
    add_scenario_options(synth, synth_c);
    synth->add_option("--truth", synth_truth, "truth JSON; drawn from the preset when omitted");
    synth->add_option("--seed", synth_seed, "seed for truth draw and noise");
    synth->add_option("--out", synth_out, "output directory");

    // coarse
    Common coarse_c;
    std::string coarse_csi, coarse_out = "coarse_out";
    std::optional<std::size_t> coarse_k;
    std::optional<double> coarse_sync_sigma;
    auto *coarse = app.add_subcommand("coarse", "stage 1: weighted root-MUSIC and priors");
    add_scenario_options(coarse, coarse_c);
    coarse->add_option("--csi", coarse_csi, "CSI CSV")->required();
    coarse->add_option("--model-order", coarse_k, "number of paths (MDL when omitted)");
    coarse->add_option("--sync-sigma", coarse_sync_sigma, "sync error prior std in seconds");
    coarse->add_option("--out", coarse_out, "output directory");

    // spvbi run
    Common sp_c;
    std::string sp_csi, sp_priors, sp_hyper, sp_coarse_in, sp_out = "spvbi_out";
    std::optional<std::uint64_t> sp_seed;
    auto *spvbi = app.add_subcommand("spvbi", "stage 2");
    spvbi->require_subcommand(1);
    auto *sp_run = spvbi->add_subcommand("run", "particle VBI from stage-1 priors");
    add_scenario_options(sp_run, sp_c);
    sp_run->add_option("--csi", sp_csi, "CSI CSV")->required();
    auto *prior_opt = sp_run->add_option("--priors", sp_priors, "priors JSON");
    sp_run->add_option("--coarse-in", sp_coarse_in, "coarse estimate JSON; priors are built from it")
        ->excludes(prior_opt);
    sp_run->add_option("--hyper", sp_hyper, "hyperparameter JSON");
    sp_run->add_option("--seed", sp_seed, "SPVBI seed (overrides the hyper file)");
    sp_run->add_option("--out", sp_out, "output directory");

    // baseline
    Common bl_c;
    std::string bl_csi, bl_method = "wr_music", bl_out = "baseline_out";
    std::optional<std::size_t> bl_k;
    auto *baseline = app.add_subcommand("baseline", "reference estimators");
    add_scenario_options(baseline, bl_c);
    baseline->add_option("--csi", bl_csi, "CSI CSV")->required();
    baseline->add_option("--method", bl_method, "r_music, wr_music or se")
        ->check(CLI::IsMember({"r_music", "wr_music", "se"}));
    baseline->add_option("--model-order", bl_k, "number of paths (MDL when omitted)");
    baseline->add_option("--out", bl_out, "output directory");

    // experiment
    std::string ex_spec, ex_preset, ex_axis, ex_out = "experiment_out";
    std::vector<double> ex_values;
    std::vector<std::string> ex_estimators;
    std::optional<std::size_t> ex_trials, ex_workers;
    std::optional<std::uint64_t> ex_seed;
    std::optional<double> ex_snr;
    auto *experiment = app.add_subcommand("experiment", "Monte-Carlo sweep");
    experiment->add_option("--spec", ex_spec, "experiment JSON");
    experiment->add_option("--preset", ex_preset, "scenario preset");
    experiment->add_option("--snr", ex_snr, "SNR in dB when not sweeping SNR");
    experiment->add_option("--axis", ex_axis, "none, snr_db, band_start or particles");
    experiment->add_option("--values", ex_values, "sweep values");
    experiment->add_option("--estimators", ex_estimators, "subset of r_music wr_music se spvbi");
    experiment->add_option("--trials", ex_trials, "trials per sweep point");
    experiment->add_option("--seed", ex_seed, "base seed");
    experiment->add_option("--workers", ex_workers, "worker threads (MBSENSE_WORKERS when omitted)");
    experiment->add_option("--out", ex_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*synth)
        {
            std::mt19937_64 rng(synth_seed);
            ScenarioConfig sc;
            ChannelParams truth;
            if (!synth_truth.empty())
            {
                sc = resolve_scenario(synth_c);
                truth = load_truth(synth_truth);
            }
            else
            {
                if (synth_c.preset.empty())
                    throw ConfigError("synth needs --truth or --preset");
                ScenarioPreset pre = make_preset(synth_c.preset, synth_c.native_spacing, synth_c.snr_db.value_or(15.0));
                if (!synth_c.scenario_path.empty())
                    pre.scenario = resolve_scenario(synth_c);
                sc = pre.scenario;
                truth = draw_truth(pre, rng);
            }
            const CsiMeasurement m = synthesize_csi(sc, truth, rng());
            write_csi_csv(out_file(synth_out, "csi.csv"), m.samples);
            save_scenario(out_file(synth_out, "scenario.json"), sc);
            save_truth(out_file(synth_out, "truth.json"), truth);
            save_refined(out_file(synth_out, "truth_refined.json"), to_refined(truth, sc));
            std::printf("wrote %s (noise std %.6g)\n", synth_out.c_str(), m.noise_std);
            return 0;
        }

        if (*coarse)
        {
            const ScenarioConfig sc = resolve_scenario(coarse_c);
            const CsiMeasurement m = read_csi_csv(coarse_csi, sc);
            CoarseOptions opt;
            opt.model_order = coarse_k;
            const CoarseEstimate est = run_coarse(m, opt);
            WidthPolicy w;
            if (!coarse_c.preset.empty())
                w = make_preset(coarse_c.preset).width;
            if (coarse_sync_sigma)
                w.sync_sigma_s = *coarse_sync_sigma;
            save_coarse(out_file(coarse_out, "coarse.json"), est);
            save_priors(out_file(coarse_out, "priors.json"), build_priors(est, sc, w));
            std::printf("K = %zu, delays (ns):", est.num_paths);
            for (double d : est.delays)
                std::printf(" %.4f", d * 1e9);
            std::printf("\n");
            return 0;
        }

        if (*sp_run)
        {
            const ScenarioConfig sc = resolve_scenario(sp_c);
            const CsiMeasurement m = read_csi_csv(sp_csi, sc);
            std::vector<CoarsePrior> priors;
            if (!sp_priors.empty())
            {
                priors = load_priors(sp_priors);
            }
            else if (!sp_coarse_in.empty())
            {
                WidthPolicy w;
                if (!sp_c.preset.empty())
                    w = make_preset(sp_c.preset).width;
                priors = build_priors(load_coarse(sp_coarse_in), sc, w);
            }
            else
            {
                throw ConfigError("spvbi run needs --priors or --coarse-in");
            }
            SpvbiHyper h = sp_hyper.empty() ? SpvbiHyper{} : load_hyper(sp_hyper);
            if (sp_seed)
                h.seed = *sp_seed;
            const PosteriorSet post = run_spvbi(m, priors, h);
            write_posterior(sp_out, post);
            std::printf("%zu iterations, %s; MAP delays (ns):", post.iterations,
                        post.converged ? "converged" : "iteration cap reached");
            for (const PathParams &p : post.map.paths)
                std::printf(" %.4f", p.delay * 1e9);
            std::printf("\n");
            return 0;
        }

        if (*baseline)
        {
            const ScenarioConfig sc = resolve_scenario(bl_c);
            const CsiMeasurement m = read_csi_csv(bl_csi, sc);
            CoarseOptions opt;
            opt.model_order = bl_k;
            json j;
            if (bl_method == "r_music")
            {
                const std::size_t k = bl_k ? *bl_k
                                           : band_root_music(m.samples.front(), sc.bands.front().spacing_hz).model_order;
                j = delays_json(single_band_root_music(m.samples.front(), sc.bands.front().spacing_hz, k));
            }
            else if (bl_method == "wr_music")
            {
                const CoarseEstimate est = run_coarse(m, opt);
                j = delays_json(est.delays);
                save_coarse(out_file(bl_out, "coarse.json"), est);
            }
            else
            {
                const std::size_t k = bl_k ? *bl_k : run_coarse(m, opt).num_paths;
                const SeEstimate se = se_estimate(m, k, opt);
                j = delays_json(se.delays);
                json fb = json::array();
                const FullBandGrid grid = make_fullband_grid(sc);
                for (const cdouble &v : reconstruct_fullband(se, grid))
                    fb.push_back({v.real(), v.imag()});
                j["fullband"] = {{"start_freq_hz", grid.start_freq_hz}, {"spacing_hz", grid.spacing_hz}, {"samples", fb}};
            }
            j["method"] = bl_method;
            write_json_file(out_file(bl_out, "baseline.json"), j);
            std::printf("%s delays (ns):", bl_method.c_str());
            for (double d : j["delays_s"])
                std::printf(" %.4f", d * 1e9);
            std::printf("\n");
            return 0;
        }

        if (*experiment)
        {
            ExperimentSpec spec = ex_spec.empty() ? ExperimentSpec{} : load_experiment_spec(ex_spec);
            if (!ex_preset.empty())
                spec.preset = ex_preset;
            if (ex_snr)
                spec.snr_db = *ex_snr;
            if (!ex_axis.empty())
                spec.axis = sweep_axis_from_string(ex_axis);
            if (!ex_values.empty())
                spec.values = ex_values;
            if (!ex_estimators.empty())
            {
                spec.estimators.clear();
                for (const auto &e : ex_estimators)
                    spec.estimators.push_back(estimator_from_string(e));
            }
            if (ex_trials)
                spec.trials = *ex_trials;
            if (ex_seed)
                spec.base_seed = *ex_seed;
            if (ex_workers)
                spec.workers = *ex_workers;
            spec.validate();

            const std::size_t points = spec.axis == SweepAxis::None ? 1 : spec.values.size();
            const std::size_t expected = points * spec.trials;
            const auto records = run_experiment(spec, [](std::size_t done, std::size_t total) {
                std::fprintf(stderr, "\r%zu/%zu trials", done, total);
            });
            std::fprintf(stderr, "\n");
            const auto rows = summarize(spec, records);
            write_records_csv(out_file(ex_out, "records.csv"), spec, records);
            write_summary_csv(out_file(ex_out, "summary.csv"), rows);
            std::vector<double> grid;
            for (int i = 0; i <= 400; ++i)
                grid.push_back(0.005 * i);
            write_cdf_csv(out_file(ex_out, "cdf.csv"), spec, records, grid);

            std::size_t failed = 0;
            for (const SummaryRow &r : rows)
            {
                failed += r.failed;
                std::printf("%-10s %-9s value %-10g rmse %.4f ns  median %.4f ns  ok %zu failed %zu\n",
                            to_string(spec.axis).c_str(), to_string(r.estimator).c_str(), r.sweep_value, r.rmse_ns,
                            r.median_ns, r.ok, r.failed);
            }
            if (failed > 0)
                std::fprintf(stderr, "%zu estimator runs failed; see records.csv\n", failed);
            return records.size() == expected ? 0 : 2;
        }
    }
    catch (const std::exception &ex)
    {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
