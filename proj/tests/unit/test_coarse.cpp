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

#include "fixtures.hpp"

#include "mbsense/coarse.hpp"
#include "mbsense/errors.hpp"
#include "mbsense/model.hpp"
#include "mbsense/priors.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace mbsense;

namespace
{

std::vector<cdouble> exponentials(const std::vector<cdouble> &gains, const std::vector<double> &delays, double fs,
                                  std::size_t n)
{
    std::vector<cdouble> out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < gains.size(); ++k)
            out[i] += gains[k] * std::polar(1.0, -two_pi * std::fmod(fs * delays[k] * static_cast<double>(i), 1.0));
    return out;
}

void add_noise(std::vector<cdouble> &x, double snr_db, std::mt19937_64 &rng)
{
    double p = 0.0;
    for (auto v : x)
        p += std::norm(v);
    p /= static_cast<double>(x.size());
    const double eta = std::sqrt(p / (2.0 * std::pow(10.0, snr_db / 10.0)));
    std::normal_distribution<double> g(0.0, eta);
    for (auto &v : x)
        v += cdouble(g(rng), g(rng));
}

Eigen::VectorXcd steering(double delay, double fs, std::size_t L)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(L));
    for (std::size_t l = 0; l < L; ++l)
        v(static_cast<Eigen::Index>(l)) = std::polar(1.0, -two_pi * fs * delay * static_cast<double>(l));
    return v;
}

ScenarioConfig noiseless_two_band(std::size_t n)
{
    ScenarioConfig sc = testing::two_band_scenario(n);
    sc.snr_db.reset();
    sc.noise_std = 0.0;
    return sc;
}

} // namespace

TEST_CASE("Hankel layout", "[coarse]")
{
    const std::vector<cdouble> s = {1.0, 2.0, 3.0, 4.0};
    const Eigen::MatrixXcd h = build_hankel(s, 2);
    REQUIRE(h.rows() == 3);
    REQUIRE(h.cols() == 2);
    CHECK(h(0, 0) == 1.0);
    CHECK(h(0, 1) == 2.0);
    CHECK(h(1, 0) == 2.0);
    CHECK(h(1, 1) == 3.0);
    CHECK(h(2, 0) == 3.0);
    CHECK(h(2, 1) == 4.0);
    CHECK_THROWS_AS(build_hankel(s, 0), ArgumentError);
    CHECK_THROWS_AS(build_hankel(s, 5), ArgumentError);
}

TEST_CASE("Hankel rank of structured inputs", "[coarse]")
{
    const std::vector<cdouble> c(40, cdouble(0.7, -0.2));
    const Eigen::VectorXd sv = hankel_singular_values(build_hankel(c, 13));
    for (Eigen::Index i = 1; i < sv.size(); ++i)
        CHECK(sv(i) < 1e-12 * sv(0));

    const auto e = exponentials({cdouble(1.0, 0.5)}, {73e-9}, 312.5e3, 128);
    const Eigen::VectorXd sv2 = hankel_singular_values(build_hankel(e, 43));
    CHECK(sv2(1) / sv2(0) < 1e-10);
    for (Eigen::Index i = 1; i < sv2.size(); ++i)
        CHECK(sv2(i - 1) >= sv2(i));
}

TEST_CASE("MDL on exact ranks", "[coarse]")
{
    const double fs = 312.5e3;
    const auto one = exponentials({1.0}, {100e-9}, fs, 64);
    const auto two = exponentials({1.0, 0.5}, {100e-9, 900e-9}, fs, 64);
    const std::size_t L = default_window(64, 2);
    auto order = [&](const std::vector<cdouble> &x) {
        const Eigen::VectorXd sv = hankel_singular_values(build_hankel(x, L));
        return estimate_model_order(std::vector<double>(sv.data(), sv.data() + sv.size()), 64 - L + 1);
    };
    CHECK(order(one) == 1);
    CHECK(order(two) == 2);
    CHECK_THROWS_AS(estimate_model_order({1.0}, 10), ArgumentError);
}

TEST_CASE("MDL picks two paths at 20 dB in at least 95% of trials", "[coarse]")
{
    const double fs = 312.5e3;
    std::mt19937_64 rng(1234);
    int hits = 0;
    const std::size_t L = default_window(128, 2);
    for (int t = 0; t < 200; ++t)
    {
        auto x = exponentials({1.0, std::polar(0.5, 1.0)}, {25e-9, 500e-9}, fs, 128);
        add_noise(x, 20.0, rng);
        const Eigen::VectorXd sv = hankel_singular_values(build_hankel(x, L));
        hits += estimate_model_order(std::vector<double>(sv.data(), sv.data() + sv.size()), 128 - L + 1) == 2;
    }
    CHECK(hits >= 190);
}

TEST_CASE("noise subspace orthogonality and orthonormality", "[coarse]")
{
    const double fs = 312.5e3;
    const std::vector<double> delays = {120e-9, 1400e-9};
    const auto x = exponentials({1.0, cdouble(0.3, 0.4)}, delays, fs, 96);
    const std::size_t L = 32;
    const Eigen::MatrixXcd s = noise_subspace(build_hankel(x, L), 2);
    REQUIRE(s.rows() == static_cast<Eigen::Index>(L));
    REQUIRE(s.cols() == static_cast<Eigen::Index>(L - 2));
    const Eigen::MatrixXcd gram = s.adjoint() * s;
    CHECK((gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).norm() < 1e-12);
    for (double d : delays)
        CHECK((s.adjoint() * steering(d, fs, L)).norm() < 1e-8);
    CHECK_THROWS_AS(noise_subspace(build_hankel(x, L), L), ArgumentError);
}

TEST_CASE("noise subspace is stable under 30 dB noise and tightens with SNR", "[coarse]")
{
    const double fs = 312.5e3;
    const std::vector<double> delays = {25e-9, 500e-9};
    const auto clean = exponentials({1.0, std::polar(0.5, 0.7)}, delays, fs, 128);
    const std::size_t L = default_window(128, 2);
    const Eigen::MatrixXcd s0 = noise_subspace(build_hankel(clean, L), 2);
    const Eigen::MatrixXcd p0 = s0 * s0.adjoint();

    std::vector<double> leak;
    for (double snr : {20.0, 30.0, 40.0})
    {
        std::mt19937_64 rng(5);  // same draw scaled down
        auto x = clean;
        add_noise(x, snr, rng);
        const Eigen::MatrixXcd s = noise_subspace(build_hankel(x, L), 2);
        if (snr == 30.0)
        {
            const Eigen::MatrixXcd d = s * s.adjoint() - p0;
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(d);
            CHECK(svd.singularValues()(0) < 0.1);
        }
        double l = 0.0;
        for (double dl : delays)
            l += (s.adjoint() * steering(dl, fs, L)).norm();
        leak.push_back(l);
    }
    CHECK(leak[1] < leak[0]);
    CHECK(leak[2] < leak[1]);
}

TEST_CASE("root-MUSIC on exact exponentials", "[coarse]")
{
    const double fs = 312.5e3;
    SECTION("single path at 100 ns")
    {
        const auto x = exponentials({cdouble(0.8, -0.1)}, {100e-9}, fs, 64);
        const auto r = root_music_delays(noise_subspace(build_hankel(x, 21), 1), fs, 1);
        REQUIRE(r.delays.size() == 1);
        CHECK(std::abs(r.delays[0] - 100e-9) < 1e-4 * 1e-9);
        // signal roots are double roots on the circle: magnitude good to ~sqrt(eps)
        CHECK(std::abs(std::abs(r.roots[0]) - 1.0) < 1e-6);
    }
    SECTION("zero delay roots at z = 1")
    {
        const auto x = exponentials({1.0}, {0.0}, fs, 32);
        const auto r = root_music_delays(noise_subspace(build_hankel(x, 11), 1), fs, 1);
        CHECK(std::abs(r.roots[0] - cdouble(1.0, 0.0)) < 1e-6);
        const double period = 1.0 / fs;
        CHECK(std::min(r.delays[0], period - r.delays[0]) < 1e-15);
    }
    SECTION("two separated paths")
    {
        const auto x = exponentials({1.0, std::polar(0.5, 2.0)}, {40e-9, 700e-9}, fs, 128);
        const auto r = root_music_delays(noise_subspace(build_hankel(x, 43), 2), fs, 2);
        REQUIRE(r.delays.size() == 2);
        CHECK(std::abs(r.delays[0] - 40e-9) < 1e-12);
        CHECK(std::abs(r.delays[1] - 700e-9) < 1e-12);
    }
}

TEST_CASE("window and weights", "[coarse]")
{
    CHECK(default_window(128, 2) == 43);
    CHECK(default_window(4, 1) == 2);
    CHECK(default_window(6, 2) == 3);
    CHECK_THROWS_AS(default_window(3, 2), ArgumentError);
    CHECK(crb_weight(2.0, 40e6, 2.4e9) == Catch::Approx(2.0 * 40e6 * (2.4e9 * 2.4e9 + 40e6 * 40e6 / 12.0)));
}

TEST_CASE("CRB-weighted combining", "[coarse]")
{
    BandDelayEstimate a{{10e-9}, 1.0, 40e6, 2.4e9};
    BandDelayEstimate b = a;
    b.delays = {14e-9};
    CHECK(crb_weighted_combine({a, b})[0] == Catch::Approx(12e-9));
    CHECK(crb_weighted_combine({a})[0] == 10e-9);

    // w1 = 3 w2 through the SNR factor
    a.snr = 3.0;
    CHECK(crb_weighted_combine({a, b})[0] == Catch::Approx(11e-9).epsilon(1e-12));

    // equal weights reduce to the plain mean exactly
    BandDelayEstimate c{{3e-9, 9e-9}, 2.0, 20e6, 5e9};
    BandDelayEstimate d{{7e-9, 1e-9}, 2.0, 20e6, 5e9};
    const auto f = crb_weighted_combine({c, d});
    CHECK(f[0] == (1e-9 + 3e-9) / 2.0);
    CHECK(f[1] == (9e-9 + 7e-9) / 2.0);
    CHECK_THROWS_AS(crb_weighted_combine({}), ArgumentError);
}

TEST_CASE("least-squares gains", "[coarse]")
{
    const double fs = 312.5e3;
    const cdouble g(0.3, -0.9);
    const auto x = exponentials({g}, {55e-9}, fs, 16);
    CHECK(std::abs(ls_amplitudes(x, {55e-9}, fs)[0] - g) < 1e-10);

    // K = N interpolates
    const std::vector<cdouble> y = {1.0, cdouble(0.0, 2.0), -1.0};
    const std::vector<double> d = {0.0, 1e-6, 2e-6};
    const auto a = ls_amplitudes(y, d, fs);
    for (std::size_t n = 0; n < 3; ++n)
    {
        cdouble fit = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
            fit += a[k] * std::polar(1.0, -two_pi * fs * d[k] * static_cast<double>(n));
        CHECK(std::abs(fit - y[n]) < 1e-10);
    }

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t)
    {
        const std::vector<double> dl = {(50 + 100 * u(rng)) * 1e-9, (900 + 500 * u(rng)) * 1e-9};
        const std::vector<cdouble> gl = {std::polar(1.0, two_pi * u(rng)), std::polar(0.4, two_pi * u(rng))};
        const auto z = exponentials(gl, dl, fs, 64);
        const auto est = ls_amplitudes(z, dl, fs);
        double res = 0.0, norm = 0.0;
        for (std::size_t n = 0; n < z.size(); ++n)
        {
            cdouble fit = 0.0;
            for (std::size_t k = 0; k < 2; ++k)
                fit += est[k] * std::polar(1.0, -two_pi * fs * dl[k] * static_cast<double>(n));
            res += std::norm(z[n] - fit);
            norm += std::norm(z[n]);
        }
        CHECK(std::sqrt(res) < 1e-8 * std::sqrt(norm));
    }

    try
    {
        ls_amplitudes(x, {55e-9, 55e-9}, fs);
        FAIL("expected an ill-conditioned error");
    }
    catch (const IllConditionedError &e)
    {
        CHECK(e.condition_number() > 1e12);
    }
}

TEST_CASE("phase offsets and sync errors", "[coarse]")
{
    // m = 1 is always 0; K = 1 is a single-term difference.
    const std::vector<std::vector<cdouble>> gains = {{std::polar(1.0, 0.2)}, {std::polar(1.0, 1.0)}};
    const std::vector<std::vector<double>> delays = {{10e-9}, {10e-9}};
    const auto phi = estimate_phase_offsets(gains, delays, {2.4e9, 2.5e9});
    CHECK(phi[0] == 0.0);
    const double expect = wrap_phase(1.0 - 0.2 - two_pi * 2.4e9 * 10e-9 + two_pi * 2.5e9 * 10e-9);
    CHECK(circular_distance(phi[1], expect) < 1e-9);

    const auto d1 = estimate_sync_errors(std::vector<std::vector<double>>{{5e-9, 9e-9}}, {5e-9, 9e-9});
    CHECK(d1 == std::vector<double>{0.0});
    const auto d2 = estimate_sync_errors(std::vector<std::vector<double>>{{5e-9, 9e-9}, {5.2e-9, 9.4e-9}},
                                         {5.1e-9, 9.1e-9});
    CHECK(d2[0] == Catch::Approx(-0.1e-9));
    CHECK(d2[1] == Catch::Approx(0.2e-9));

    // root form agrees with the delay form
    const double fs = 1e6;
    std::vector<std::vector<cdouble>> roots = {{std::polar(1.0, -two_pi * fs * 5e-9)}};
    CHECK(estimate_sync_errors(roots, {4e-9}, {fs})[0] == Catch::Approx(1e-9));
}

TEST_CASE("coarse stage: exact recovery without imperfections", "[coarse]")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScenarioConfig sc = noiseless_two_band(128);  // f_s = 312.5 kHz, range 3.2 us
    for (int t = 0; t < 50; ++t)
    {
        ChannelParams p;
        const double t1 = (10.0 + 400.0 * u(rng)) * 1e-9;
        const double t2 = t1 + (200.0 + 1000.0 * u(rng)) * 1e-9;
        p.paths = {{0.5 + u(rng), two_pi * u(rng), t1}, {0.5 + u(rng), two_pi * u(rng), t2}};
        p.band_phase = {0.0, 0.0};
        p.sync_error = {0.0, 0.0};
        const CoarseEstimate est = run_coarse(synthesize_csi(sc, p, 1));
        REQUIRE(est.num_paths == 2);
        CHECK(std::abs(est.delays[0] - t1) < 1e-12);
        CHECK(std::abs(est.delays[1] - t2) < 1e-12);
        CHECK(est.delays[0] < est.delays[1]);
        for (const auto &band : est.roots)
            for (const auto &z : band)
                CHECK((std::abs(z) > 0.0 && std::abs(z) < 2.0));
    }
}

TEST_CASE("coarse stage calibrates phase offsets and sync errors", "[coarse]")
{
    const ScenarioConfig sc = noiseless_two_band(128);
    ChannelParams p;
    p.paths = {{1.0, 0.4, 25e-9}, {0.5, 2.2, 500e-9}};
    p.band_phase = {1.1, 4.0};

    SECTION("delta = 0: offsets match the refined truth and delta-hat vanishes")
    {
        p.sync_error = {0.0, 0.0};
        const CoarseEstimate est = run_coarse(synthesize_csi(sc, p, 1));
        const RefinedParams r = to_refined(p, sc);
        CHECK(circular_distance(est.phase_offsets[1], r.phase_offset[1]) < 1e-6);
        CHECK(circular_distance(coarse_to_refined(est, sc).phase_offset[1], r.phase_offset[1]) < 1e-6);
        for (double d : est.sync_errors)
            CHECK(std::abs(d) < 1e-6 * 1e-9);
    }
    SECTION("injected delta_2 = 0.1 ns")
    {
        p.sync_error = {0.0, 0.1e-9};
        const CoarseEstimate est = run_coarse(synthesize_csi(sc, p, 1));
        const double shift = est.sync_errors[1] - est.sync_errors[0];
        CHECK(std::abs(shift - 0.1e-9) < 1e-3 * 1e-9);
    }
    SECTION("single band has zero sync error by construction")
    {
        ScenarioConfig one = sc;
        one.bands.pop_back();
        ChannelParams q = p;
        q.band_phase = {1.1};
        q.sync_error = {0.3e-9};
        const CoarseEstimate est = run_coarse(synthesize_csi(one, q, 1));
        CHECK(est.sync_errors == std::vector<double>{0.0});
    }
}

TEST_CASE("coarse stage is a fixed point on its own reconstruction", "[coarse]")
{
    ScenarioConfig sc = testing::two_band_scenario(128, 15.0);
    ChannelParams p;
    p.paths = {{1.0, 0.4, 25e-9}, {0.5, 2.2, 500e-9}};
    p.band_phase = {1.1, 4.0};
    p.sync_error = {0.0, 0.0};
    const CoarseEstimate first = run_coarse(synthesize_csi(sc, p, 8));
    RefinedParams r = coarse_to_refined(first, sc);

    CsiMeasurement again;
    again.scenario = sc;
    again.samples = reconstruct_refined(r, sc);
    CoarseOptions opts;
    opts.model_order = first.num_paths;
    const CoarseEstimate second = run_coarse(again, opts);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t k = 0; k < 2; ++k)
        {
            const double expect = first.delays[k] + first.sync_errors[m];
            CHECK(std::abs(second.band_delays[m][k] - expect) < 1e-6 * expect);
        }
    // The refined reconstruction carries one fused magnitude per path.
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(std::abs(second.amplitudes[k] - first.amplitudes[k]) < 1e-6 * first.amplitudes[k]);
    // A common shift between the fused delays and the sync errors is absorbed
    // by the phases, so compare the signal rather than the split.
    const MultibandSignal s1 = reconstruct_refined(r, sc);
    const MultibandSignal s2 = reconstruct_refined(coarse_to_refined(second, sc), sc);
    double err = 0.0;
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t n = 0; n < s1[m].size(); ++n)
            err = std::max(err, std::abs(s1[m][n] - s2[m][n]));
    CHECK(err < 1e-6 * std::sqrt(mean_power(s1)));
}

TEST_CASE("prior construction", "[priors]")
{
    CoarseEstimate est;
    est.num_paths = 1;
    est.delays = {25e-9};
    est.amplitudes = {0.8};
    est.delay_crb_var = {1e-24};
    est.gains = {{std::polar(0.8, 0.3)}, {std::polar(0.8, 1.3)}};
    est.sync_errors = {0.0, 0.0};
    est.weights = {1.0, 1.0};
    const ScenarioConfig sc = testing::two_band_scenario(128);

    WidthPolicy w;
    w.delay_width_s = 2e-9;
    const auto pri = build_priors(est, sc, w);
    // delays, amplitudes, path phases, band offsets (m >= 2), sync errors
    REQUIRE(pri.size() == 1 + 1 + 1 + 1 + 2);
    CHECK(pri[0].var == VariableId{VarKind::Delay, 0});
    CHECK(pri[0].lo == Catch::Approx(24e-9));
    CHECK(pri[0].hi == Catch::Approx(26e-9));
    CHECK(pri[1].kind == PriorKind::Uniform);
    CHECK(pri[1].lo >= 0.0);
    CHECK(pri[2].kind == PriorKind::CircularUniform);
    CHECK(pri[3].var == VariableId{VarKind::BandPhase, 1});
    CHECK(pri[3].kind == PriorKind::CircularUniform);
    CHECK(pri[3].lo == 0.0);
    CHECK(pri[3].hi == two_pi);
    CHECK(pri[4].kind == PriorKind::Gaussian);
    CHECK(pri[4].variance * 1e18 == Catch::Approx(0.01));
    CHECK(pri[4].hi == Catch::Approx(0.4e-9));
    CHECK(count_free(pri) == 6);

    WidthPolicy pinned;
    pinned.sync_sigma_s = 0.0;
    pinned.band_phases = false;
    const auto q = build_priors(est, sc, pinned);
    CHECK(q[3].kind == PriorKind::Fixed);
    CHECK(q[4].kind == PriorKind::Fixed);
    CHECK(count_free(q) == 3);
    // floor applies when the CRB is tiny
    CHECK(q[0].width() == Catch::Approx(pinned.delay_floor_s));
}

TEST_CASE("prior validation rejects malformed boxes", "[priors]")
{
    CoarsePrior p;
    p.var = {VarKind::Delay, 0};
    p.kind = PriorKind::Uniform;
    p.center = 1e-9;
    p.lo = 2e-9;
    p.hi = 1e-9;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.lo = -1e-9;
    p.hi = 3e-9;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.var = {VarKind::PathPhase, 0};
    p.kind = PriorKind::CircularUniform;
    p.lo = 0.0;
    p.hi = 3.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.kind = PriorKind::Gaussian;
    p.var = {VarKind::SyncError, 0};
    p.lo = -1.0;
    p.hi = 1.0;
    p.variance = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK(variable_label({VarKind::SyncError, 1}) == "delta_2");
    CHECK(var_kind_from_string("band_phase") == VarKind::BandPhase);
    CHECK(prior_kind_from_string(to_string(PriorKind::CircularUniform)) == PriorKind::CircularUniform);
    CHECK_THROWS_AS(prior_kind_from_string("laplace"), ConfigError);
}
