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

#include "mbsense/io.hpp"

#include "mbsense/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mbsense
{

using nlohmann::json;

namespace
{

json read_json(const std::string &path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open '" + path + "'");
    try
    {
        return json::parse(f);
    }
    catch (const json::exception &e)
    {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

void write_json(const std::string &path, const json &j)
{
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << std::setw(2) << j << '\n';
}

template <class T>
T get_or(const json &j, const char *key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

// Wraps json type errors into ConfigError with the file name.
template <class F>
auto parse_guard(const std::string &path, F &&fn)
{
    try
    {
        return fn(read_json(path));
    }
    catch (const json::exception &e)
    {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

json scenario_json(const ScenarioConfig &sc)
{
    json j;
    j["bands"] = json::array();
    for (const Band &b : sc.bands)
        j["bands"].push_back(
            {{"start_freq_hz", b.start_freq_hz}, {"spacing_hz", b.spacing_hz}, {"num_subcarriers", b.num_subcarriers}});
    if (sc.noise_std)
        j["noise_std"] = *sc.noise_std;
    if (sc.snr_db)
        j["snr_db"] = *sc.snr_db;
    return j;
}

ScenarioConfig scenario_from(const json &j)
{
    ScenarioConfig sc;
    for (const auto &b : j.at("bands"))
        sc.bands.push_back({b.at("start_freq_hz").get<double>(), b.at("spacing_hz").get<double>(),
                            b.at("num_subcarriers").get<std::size_t>()});
    if (j.contains("noise_std"))
        sc.noise_std = j.at("noise_std").get<double>();
    if (j.contains("snr_db"))
        sc.snr_db = j.at("snr_db").get<double>();
    sc.validate();
    return sc;
}

json paths_json(const std::vector<PathParams> &paths)
{
    json a = json::array();
    for (const auto &p : paths)
        a.push_back({{"amplitude", p.amplitude}, {"phase", p.phase}, {"delay_s", p.delay}});
    return a;
}

std::vector<PathParams> paths_from(const json &a)
{
    std::vector<PathParams> out;
    for (const auto &p : a)
        out.push_back({p.at("amplitude").get<double>(), get_or(p, "phase", 0.0), p.at("delay_s").get<double>()});
    return out;
}

json prior_json(const CoarsePrior &p)
{
    json j{{"variable", to_string(p.var.kind)}, {"index", p.var.index}, {"kind", to_string(p.kind)},
           {"center", p.center}, {"lo", p.lo}, {"hi", p.hi}};
    if (p.kind == PriorKind::Gaussian)
        j["variance"] = p.variance;
    return j;
}

json hyper_json(const SpvbiHyper &h)
{
    json j{{"num_particles", h.num_particles},
           {"batch_size", h.batch_size},
           {"gamma_x", h.gamma_x},
           {"gamma_y", h.gamma_y},
           {"epsilon", h.epsilon},
           {"max_iters", h.max_iters},
           {"tolerance", h.tolerance},
           {"patience", h.patience},
           {"seed", h.seed},
           {"update_positions", h.update_positions},
           {"update_weights", h.update_weights},
           {"curvature_scaling", h.curvature_scaling},
           {"circular_wrap", h.circular_wrap},
           {"check_invariants", h.check_invariants},
           {"schedule",
            {{"rho_a", h.schedule.rho_a},
             {"rho_b", h.schedule.rho_b},
             {"rho_kappa", h.schedule.rho_kappa},
             {"gamma_a", h.schedule.gamma_a},
             {"gamma_b", h.schedule.gamma_b},
             {"gamma_kappa", h.schedule.gamma_kappa},
             {"warm_iters", h.schedule.warm_iters}}}};
    if (h.noise_std)
        j["noise_std"] = *h.noise_std;
    return j;
}

SpvbiHyper hyper_from(const json &j)
{
    SpvbiHyper h;
    h.num_particles = get_or(j, "num_particles", h.num_particles);
    h.batch_size = get_or(j, "batch_size", h.batch_size);
    h.gamma_x = get_or(j, "gamma_x", h.gamma_x);
    h.gamma_y = get_or(j, "gamma_y", h.gamma_y);
    h.epsilon = get_or(j, "epsilon", h.epsilon);
    h.max_iters = get_or(j, "max_iters", h.max_iters);
    h.tolerance = get_or(j, "tolerance", h.tolerance);
    h.patience = get_or(j, "patience", h.patience);
    h.seed = get_or(j, "seed", h.seed);
    h.update_positions = get_or(j, "update_positions", h.update_positions);
    h.update_weights = get_or(j, "update_weights", h.update_weights);
    h.curvature_scaling = get_or(j, "curvature_scaling", h.curvature_scaling);
    h.circular_wrap = get_or(j, "circular_wrap", h.circular_wrap);
    h.check_invariants = get_or(j, "check_invariants", h.check_invariants);
    if (j.contains("noise_std"))
        h.noise_std = j.at("noise_std").get<double>();
    if (j.contains("schedule"))
    {
        const json &s = j.at("schedule");
        StepSchedule &sc = h.schedule;
        sc.rho_a = get_or(s, "rho_a", sc.rho_a);
        sc.rho_b = get_or(s, "rho_b", sc.rho_b);
        sc.rho_kappa = get_or(s, "rho_kappa", sc.rho_kappa);
        sc.gamma_a = get_or(s, "gamma_a", sc.gamma_a);
        sc.gamma_b = get_or(s, "gamma_b", sc.gamma_b);
        sc.gamma_kappa = get_or(s, "gamma_kappa", sc.gamma_kappa);
        sc.warm_iters = get_or(s, "warm_iters", sc.warm_iters);
    }
    h.validate();
    return h;
}

json estimates_json(const std::vector<double> &slots, const SlotLayout &layout)
{
    json j = json::object();
    const VarKind kinds[] = {VarKind::Delay, VarKind::Amplitude, VarKind::PathPhase, VarKind::BandPhase,
                             VarKind::SyncError};
    for (VarKind k : kinds)
    {
        const bool per_path = k == VarKind::Delay || k == VarKind::Amplitude || k == VarKind::PathPhase;
        const std::size_t n = per_path ? layout.num_paths : layout.num_bands;
        for (std::size_t i = 0; i < n; ++i)
        {
            const VariableId id{k, i};
            j[variable_label(id)] = from_scaled(k, slots[layout.slot(id)]);
        }
    }
    return j;
}

} // namespace

ScenarioConfig load_scenario(const std::string &path)
{
    return parse_guard(path, [](const json &j) { return scenario_from(j); });
}

void save_scenario(const std::string &path, const ScenarioConfig &scenario)
{
    write_json(path, scenario_json(scenario));
}

ChannelParams load_truth(const std::string &path)
{
    return parse_guard(path, [](const json &j) {
        ChannelParams t;
        t.paths = paths_from(j.at("paths"));
        t.band_phase = j.at("band_phase").get<std::vector<double>>();
        t.sync_error = j.at("sync_error_s").get<std::vector<double>>();
        return t;
    });
}

void save_truth(const std::string &path, const ChannelParams &truth)
{
    write_json(path, {{"paths", paths_json(truth.paths)},
                      {"band_phase", truth.band_phase},
                      {"sync_error_s", truth.sync_error}});
}

void save_refined(const std::string &path, const RefinedParams &params)
{
    write_json(path, {{"paths", paths_json(params.paths)},
                      {"phase_offset", params.phase_offset},
                      {"sync_error_s", params.sync_error}});
}

std::vector<CoarsePrior> load_priors(const std::string &path)
{
    return parse_guard(path, [](const json &j) {
        std::vector<CoarsePrior> out;
        for (const auto &e : j.at("priors"))
        {
            CoarsePrior p;
            p.var = {var_kind_from_string(e.at("variable").get<std::string>()), e.at("index").get<std::size_t>()};
            p.kind = prior_kind_from_string(e.at("kind").get<std::string>());
            p.center = e.at("center").get<double>();
            p.lo = get_or(e, "lo", p.center);
            p.hi = get_or(e, "hi", p.center);
            p.variance = get_or(e, "variance", 0.0);
            p.validate();
            out.push_back(p);
        }
        return out;
    });
}

void save_priors(const std::string &path, const std::vector<CoarsePrior> &priors)
{
    json a = json::array();
    for (const auto &p : priors)
        a.push_back(prior_json(p));
    write_json(path, {{"priors", a}});
}

SpvbiHyper load_hyper(const std::string &path)
{
    return parse_guard(path, [](const json &j) { return hyper_from(j); });
}

void save_hyper(const std::string &path, const SpvbiHyper &hyper)
{
    write_json(path, hyper_json(hyper));
}

ExperimentSpec load_experiment_spec(const std::string &path)
{
    return parse_guard(path, [](const json &j) {
        ExperimentSpec s;
        s.preset = get_or(j, "preset", s.preset);
        s.native_spacing = get_or(j, "native_spacing", s.native_spacing);
        s.snr_db = get_or(j, "snr_db", s.snr_db);
        if (j.contains("estimators"))
        {
            s.estimators.clear();
            for (const auto &e : j.at("estimators"))
                s.estimators.push_back(estimator_from_string(e.get<std::string>()));
        }
        s.axis = sweep_axis_from_string(get_or(j, "axis", std::string("none")));
        s.values = get_or(j, "values", s.values);
        s.trials = get_or(j, "trials", s.trials);
        s.base_seed = get_or(j, "base_seed", s.base_seed);
        s.workers = get_or(j, "workers", s.workers);
        s.known_model_order = get_or(j, "known_model_order", s.known_model_order);
        s.common_random_numbers = get_or(j, "common_random_numbers", s.common_random_numbers);
        if (j.contains("hyper"))
            s.pipeline.hyper = hyper_from(j.at("hyper"));
        s.pipeline.noise_from_residual = get_or(j, "noise_from_residual", s.pipeline.noise_from_residual);
        if (j.contains("delay_width_s"))
            s.pipeline.width.delay_width_s = j.at("delay_width_s").get<double>();
        s.pipeline.width.delay_multiplier = get_or(j, "delay_multiplier", s.pipeline.width.delay_multiplier);
        if (j.contains("scenario"))
        {
            // custom scenario: nominal truth and imperfection model in the file
            ScenarioPreset p;
            p.name = "custom";
            p.scenario = scenario_from(j.at("scenario"));
            const json &t = j.at("truth");
            p.nominal.paths = paths_from(t.at("paths"));
            p.nominal.band_phase.assign(p.scenario.num_bands(), 0.0);
            p.nominal.sync_error.assign(p.scenario.num_bands(), 0.0);
            p.sync_sigma_s = get_or(t, "sync_sigma_s", 0.0);
            p.random_phases = get_or(t, "random_phases", true);
            p.width.sync_sigma_s = p.sync_sigma_s;
            p.width.band_phases = p.random_phases;
            p.nominal.validate(p.scenario);
            s.custom = p;
        }
        s.validate();
        return s;
    });
}

void save_coarse(const std::string &path, const CoarseEstimate &c)
{
    json bands = json::array();
    for (std::size_t m = 0; m < c.band_delays.size(); ++m)
    {
        json gains = json::array();
        for (const cdouble &g : c.gains[m])
            gains.push_back({g.real(), g.imag()});
        json roots = json::array();
        if (m < c.roots.size())
            for (const cdouble &z : c.roots[m])
                roots.push_back({z.real(), z.imag()});
        bands.push_back({{"delays_s", c.band_delays[m]},
                         {"gains", gains},
                         {"roots", roots},
                         {"phase_offset", c.phase_offsets[m]},
                         {"sync_error_s", c.sync_errors[m]},
                         {"snr", c.band_snr[m]},
                         {"weight", c.weights[m]},
                         {"model_order", c.band_model_orders[m]},
                         {"window", c.windows[m]}});
    }
    write_json(path, {{"num_paths", c.num_paths},
                      {"delays_s", c.delays},
                      {"amplitudes", c.amplitudes},
                      {"delay_crb_var_s2", c.delay_crb_var},
                      {"bands", bands}});
}

CoarseEstimate load_coarse(const std::string &path)
{
    return parse_guard(path, [](const json &j) {
        CoarseEstimate c;
        c.num_paths = j.at("num_paths").get<std::size_t>();
        c.delays = j.at("delays_s").get<std::vector<double>>();
        c.amplitudes = j.at("amplitudes").get<std::vector<double>>();
        c.delay_crb_var = get_or(j, "delay_crb_var_s2", std::vector<double>(c.num_paths, 0.0));
        for (const auto &b : j.at("bands"))
        {
            c.band_delays.push_back(b.at("delays_s").get<std::vector<double>>());
            std::vector<cdouble> gains;
            for (const auto &g : b.at("gains"))
                gains.emplace_back(g.at(0).get<double>(), g.at(1).get<double>());
            c.gains.push_back(std::move(gains));
            std::vector<cdouble> roots;
            if (b.contains("roots"))
                for (const auto &z : b.at("roots"))
                    roots.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
            c.roots.push_back(std::move(roots));
            c.phase_offsets.push_back(b.at("phase_offset").get<double>());
            c.sync_errors.push_back(b.at("sync_error_s").get<double>());
            c.band_snr.push_back(get_or(b, "snr", 1.0));
            c.weights.push_back(get_or(b, "weight", 1.0));
            c.band_model_orders.push_back(get_or(b, "model_order", c.num_paths));
            c.windows.push_back(get_or(b, "window", std::size_t{0}));
        }
        if (c.delays.size() != c.num_paths || c.amplitudes.size() != c.num_paths || c.gains.empty())
            throw ConfigError("coarse estimate: inconsistent path counts");
        for (const auto &g : c.gains)
            if (g.size() != c.num_paths)
                throw ConfigError("coarse estimate: inconsistent gain counts");
        return c;
    });
}

void write_csi_csv(const std::string &path, const MultibandSignal &samples)
{
    std::ofstream f(path);
    if (!f)
        throw ConfigError("cannot write '" + path + "'");
    f << std::setprecision(17) << "band,subcarrier_index,real,imag\n";
    for (std::size_t m = 0; m < samples.size(); ++m)
        for (std::size_t n = 0; n < samples[m].size(); ++n)
            f << m << ',' << n << ',' << samples[m][n].real() << ',' << samples[m][n].imag() << '\n';
}

CsiMeasurement read_csi_csv(const std::string &path, const ScenarioConfig &scenario)
{
    scenario.validate();
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line) || line.rfind("band,subcarrier_index,real,imag", 0) != 0)
        throw ConfigError("'" + path + "': expected header band,subcarrier_index,real,imag");
    CsiMeasurement meas;
    meas.scenario = scenario;
    meas.samples.resize(scenario.num_bands());
    std::vector<std::vector<bool>> seen(scenario.num_bands());
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        meas.samples[m].assign(scenario.bands[m].num_subcarriers, 0.0);
        seen[m].assign(scenario.bands[m].num_subcarriers, false);
    }
    std::size_t lineno = 1;
    while (std::getline(f, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string a, b, c, d;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') || !std::getline(ss, d))
            throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": expected 4 columns");
        std::size_t m = 0, n = 0;
        double re = 0.0, im = 0.0;
        try
        {
            m = std::stoul(a);
            n = std::stoul(b);
            re = std::stod(c);
            im = std::stod(d);
        }
        catch (const std::exception &)
        {
            throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": bad number");
        }
        if (m >= scenario.num_bands() || n >= scenario.bands[m].num_subcarriers)
            throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": index outside the scenario");
        if (!std::isfinite(re) || !std::isfinite(im))
            throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": non-finite sample");
        meas.samples[m][n] = {re, im};
        seen[m][n] = true;
    }
    for (std::size_t m = 0; m < seen.size(); ++m)
        for (std::size_t n = 0; n < seen[m].size(); ++n)
            if (!seen[m][n])
                throw ConfigError("'" + path + "': missing sample band " + std::to_string(m) + " subcarrier " +
                                  std::to_string(n));
    if (scenario.noise_std)
        meas.noise_std = *scenario.noise_std;
    return meas;
}

void write_posterior(const std::string &dir, const PosteriorSet &post)
{
    std::filesystem::create_directories(dir);
    const ParticleSet &ps = post.particles;
    {
        std::ofstream f(dir + "/particles.csv");
        if (!f)
            throw ConfigError("cannot write into '" + dir + "'");
        f << std::setprecision(17) << "variable,kind,index,particle,position,weight\n";
        for (std::size_t j = 0; j < ps.num_vars(); ++j)
        {
            const VariableId id = ps.priors[j].var;
            for (std::size_t p = 0; p < ps.x[j].size(); ++p)
                f << variable_label(id) << ',' << to_string(id.kind) << ',' << id.index << ',' << p << ','
                  << from_scaled(id.kind, ps.x[j][p]) << ',' << ps.y[j][p] << '\n';
        }
    }
    {
        std::ofstream f(dir + "/trace.csv");
        f << std::setprecision(17) << "iteration,objective_proxy,max_block_delta\n";
        for (const TraceRow &r : post.trace)
            f << r.iteration << ',' << r.objective << ',' << r.max_delta << '\n';
    }
    write_json(dir + "/estimates.json", {{"map", estimates_json(post.map_slots, ps.layout)},
                                         {"mmse", estimates_json(post.mmse_slots, ps.layout)},
                                         {"iterations", post.iterations},
                                         {"converged", post.converged},
                                         {"noise_std", post.noise_std}});
}

} // namespace mbsense
