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

#include "mbsense/coarse.hpp"

#include "mbsense/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mbsense
{

namespace
{

constexpr long double two_pi_l = 6.283185307179586476925286766559L;

// Radius window for candidate roots. Exact double roots on the unit circle
// split to 1 +- O(sqrt(eps)), so the outer twin must still be admitted.
constexpr double inside_tol = 1e-6;
constexpr double same_modulus_tol = 1e-6;
constexpr double duplicate_root_tol = 1e-4;
constexpr double polish_band = 1e-6;

double wrapped_frac(long double cycles)
{
    return static_cast<double>(cycles - std::floor(cycles));
}

// Mean of angles taken as wrapped differences from the first one, in [0, 2pi).
double wrapped_mean(const std::vector<double> &angles)
{
    const double ref = wrap_phase_signed(angles.front());
    double acc = 0.0;
    for (double a : angles)
        acc += wrap_phase_signed(a - ref);
    return wrap_phase(ref + acc / static_cast<double>(angles.size()));
}

// Null spectrum P(theta) = sum_d c_d e^{j (d - D) theta}, with derivatives.
struct NullSpectrum
{
    const std::vector<cdouble> &coeffs;  // ascending powers, length 2D + 1
    std::ptrdiff_t offset;

    void eval(double theta, double &d1, double &d2) const
    {
        cdouble a1 = 0.0, a2 = 0.0;
        for (std::size_t i = 0; i < coeffs.size(); ++i)
        {
            const double d = static_cast<double>(static_cast<std::ptrdiff_t>(i) - offset);
            const cdouble e = std::polar(1.0, d * theta);
            a1 += cdouble(0.0, d) * coeffs[i] * e;
            a2 += -d * d * coeffs[i] * e;
        }
        d1 = a1.real();
        d2 = a2.real();
    }
};

double polish_angle(const NullSpectrum &spec, double theta)
{
    for (int it = 0; it < 20; ++it)
    {
        double d1 = 0.0, d2 = 0.0;
        spec.eval(theta, d1, d2);
        if (!(d2 > 0.0))
            break;
        const double step = d1 / d2;
        if (!std::isfinite(step) || std::abs(step) > 1e-3)
            break;
        theta -= step;
        if (std::abs(step) < 1e-16)
            break;
    }
    return theta;
}

struct BandFit
{
    double signal_power = 0.0;  // mean |X a|^2
    double noise_var = 0.0;     // per real dimension
    bool degenerate = true;
};

BandFit fit_band(const std::vector<cdouble> &samples, const std::vector<double> &delays, double spacing_hz)
{
    BandFit out;
    const std::size_t n = samples.size();
    const std::size_t k = delays.size();
    const std::vector<cdouble> gains = ls_amplitudes(samples, delays, spacing_hz, std::numeric_limits<double>::max());
    double fitted = 0.0, resid = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        cdouble s = 0.0;
        for (std::size_t p = 0; p < k; ++p)
            s += gains[p] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(i) * spacing_hz * delays[p]);
        fitted += std::norm(s);
        resid += std::norm(samples[i] - s);
    }
    out.signal_power = fitted / static_cast<double>(n);
    if (n > k && resid > 1e-20 * fitted)
    {
        out.noise_var = resid / (2.0 * static_cast<double>(n - k));
        out.degenerate = false;
    }
    return out;
}

double configured_snr(const ScenarioConfig &scenario, const MultibandSignal &samples)
{
    if (scenario.snr_db)
        return std::pow(10.0, *scenario.snr_db / 10.0);
    if (scenario.noise_std && *scenario.noise_std > 0.0)
        return mean_power(samples) / (2.0 * *scenario.noise_std * *scenario.noise_std);
    return 1.0;
}

} // namespace

Eigen::MatrixXcd build_hankel(const std::vector<cdouble> &samples, std::size_t L)
{
    const std::size_t n = samples.size();
    if (L < 1 || L > n)
        throw ArgumentError("build_hankel: window L=" + std::to_string(L) + " outside [1, " + std::to_string(n) + "]");
    const std::size_t rows = n - L + 1;
    Eigen::MatrixXcd h(rows, L);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t l = 0; l < L; ++l)
            h(i, l) = samples[i + l];
    return h;
}

Eigen::VectorXd hankel_singular_values(const Eigen::MatrixXcd &hankel)
{
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(hankel);
    return svd.singularValues();
}

std::size_t estimate_model_order(const std::vector<double> &singular_values, std::size_t snapshot_count)
{
    const std::size_t len = singular_values.size();
    if (len < 2)
        throw ArgumentError("estimate_model_order: need at least 2 singular values");
    if (snapshot_count < 1)
        throw ArgumentError("estimate_model_order: snapshot_count must be positive");

    std::vector<double> lam(len);
    for (std::size_t i = 0; i < len; ++i)
        lam[i] = singular_values[i] * singular_values[i];
    std::sort(lam.begin(), lam.end(), std::greater<>());
    const double floor = std::max(lam.front() * 1e-20, std::numeric_limits<double>::min());
    for (auto &v : lam)
        v = std::max(v, floor);

    const double w = static_cast<double>(snapshot_count);
    std::size_t best = 1;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < len; ++k)
    {
        const std::size_t tail = len - k;
        double log_gm = 0.0, am = 0.0;
        for (std::size_t i = k; i < len; ++i)
        {
            log_gm += std::log(lam[i]);
            am += lam[i];
        }
        log_gm /= static_cast<double>(tail);
        am /= static_cast<double>(tail);
        const double kk = static_cast<double>(k);
        const double mdl = -static_cast<double>(tail) * w * (log_gm - std::log(am)) +
                           0.5 * kk * (2.0 * static_cast<double>(len) - kk) * std::log(w);
        if (mdl < best_val)
        {
            best_val = mdl;
            best = k;
        }
    }
    return best;
}

Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd &hankel, std::size_t K)
{
    const auto L = static_cast<std::size_t>(hankel.cols());
    const std::size_t min_dim = std::min<std::size_t>(hankel.rows(), L);
    if (K < 1 || K >= min_dim)
        throw ArgumentError("noise_subspace: K=" + std::to_string(K) + " must lie in [1, " +
                            std::to_string(min_dim - 1) + "]");
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(hankel, Eigen::ComputeFullV);
    // Rows of H live in span{conj(v_i)}; p(z_k) is orthogonal to conj(V_noise).
    return svd.matrixV().rightCols(static_cast<Eigen::Index>(L - K)).conjugate();
}

double root_to_delay(cdouble root, double spacing_hz)
{
    const long double cycles = -static_cast<long double>(std::arg(root)) / two_pi_l;
    double frac = wrapped_frac(cycles);
    if (frac > 1.0 - 1e-9)
        frac = 0.0;
    return frac / spacing_hz;
}

RootMusicResult root_music_delays(const Eigen::MatrixXcd &noise_basis, double spacing_hz, std::size_t K, bool polish)
{
    if (K < 1)
        throw ArgumentError("root_music_delays: K must be >= 1");
    if (!(spacing_hz > 0.0))
        throw ArgumentError("root_music_delays: spacing must be positive");
    const auto L = static_cast<std::ptrdiff_t>(noise_basis.rows());
    if (L < 2)
        throw ArgumentError("root_music_delays: steering length must be >= 2");

    const Eigen::MatrixXcd c = noise_basis * noise_basis.adjoint();
    // f(z) z^(L-1): coefficient of z^(d + L - 1) is the sum of C(a, b) with b - a = d.
    std::vector<cdouble> coeffs(static_cast<std::size_t>(2 * L - 1), 0.0);
    for (std::ptrdiff_t a = 0; a < L; ++a)
        for (std::ptrdiff_t b = 0; b < L; ++b)
            coeffs[static_cast<std::size_t>(b - a + L - 1)] += c(a, b);

    double cmax = 0.0;
    for (const auto &v : coeffs)
        cmax = std::max(cmax, std::abs(v));
    if (cmax == 0.0)
        throw EstimationError("root_music_delays: noise projector is zero");
    std::size_t lo = 0, hi = coeffs.size() - 1;
    while (hi > 0 && std::abs(coeffs[hi]) <= 1e-14 * cmax)
        --hi;
    while (lo < hi && std::abs(coeffs[lo]) <= 1e-14 * cmax)
        ++lo;
    const std::size_t degree = hi - lo;

    std::vector<cdouble> roots;
    if (degree > 0)
    {
        Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(degree), static_cast<Eigen::Index>(degree));
        for (std::size_t i = 1; i < degree; ++i)
            comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
        for (std::size_t i = 0; i < degree; ++i)
            comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(degree - 1)) = -coeffs[lo + i] / coeffs[hi];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
        if (es.info() != Eigen::Success)
            throw EstimationError("root_music_delays: companion eigen-solver did not converge");
        const auto &ev = es.eigenvalues();
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            roots.push_back(ev(i));
    }

    struct Candidate
    {
        cdouble z;
        double modulus;
        double delay;
    };
    std::vector<Candidate> cand;
    for (const auto &z : roots)
    {
        const double r = std::abs(z);
        if (r > 0.0 && r < 1.0 + inside_tol)
            cand.push_back({z, r, root_to_delay(z, spacing_hz)});
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate &a, const Candidate &b) {
        if (std::abs(a.modulus - b.modulus) > same_modulus_tol)
            return a.modulus > b.modulus;
        return a.delay < b.delay;
    });

    std::vector<Candidate> chosen;
    for (const auto &c1 : cand)
    {
        bool dup = false;
        for (const auto &c2 : chosen)
            if (std::abs(c1.z - c2.z) < duplicate_root_tol)
                dup = true;
        if (dup)
            continue;
        chosen.push_back(c1);
        if (chosen.size() == K)
            break;
    }
    if (chosen.size() < K)
        throw EstimationError("root_music_delays: only " + std::to_string(chosen.size()) +
                              " roots inside the unit circle, need " + std::to_string(K));

    NullSpectrum spec{coeffs, L - 1};
    for (auto &c1 : chosen)
    {
        if (polish && std::abs(c1.modulus - 1.0) < polish_band)
        {
            const double theta = polish_angle(spec, std::arg(c1.z));
            c1.z = std::polar(c1.modulus, theta);
            c1.delay = root_to_delay(c1.z, spacing_hz);
        }
    }
    std::sort(chosen.begin(), chosen.end(), [](const Candidate &a, const Candidate &b) { return a.delay < b.delay; });

    RootMusicResult out;
    for (const auto &c1 : chosen)
    {
        out.roots.push_back(c1.z);
        out.delays.push_back(c1.delay);
    }
    return out;
}

std::size_t default_window(std::size_t num_subcarriers, std::size_t K)
{
    const auto n = static_cast<double>(num_subcarriers);
    auto L = static_cast<std::size_t>(std::lround(n / 3.0));
    const std::size_t lo = K + 1;
    const std::size_t hi = num_subcarriers > K ? num_subcarriers - K : 1;
    if (lo > hi)
        throw ArgumentError("default_window: " + std::to_string(K) + " paths do not fit in " +
                            std::to_string(num_subcarriers) + " subcarriers");
    return std::clamp(L, lo, hi);
}

double crb_weight(double snr, double bandwidth_hz, double carrier_hz)
{
    return snr * bandwidth_hz * (carrier_hz * carrier_hz + bandwidth_hz * bandwidth_hz / 12.0);
}

std::vector<double> crb_weighted_combine(const std::vector<BandDelayEstimate> &per_band)
{
    if (per_band.empty())
        throw ArgumentError("crb_weighted_combine: no bands");
    const std::size_t k = per_band.front().delays.size();
    std::vector<std::vector<double>> sorted;
    std::vector<double> w;
    for (const auto &b : per_band)
    {
        if (b.delays.size() != k)
            throw ArgumentError("crb_weighted_combine: bands disagree on path count");
        auto d = b.delays;
        std::sort(d.begin(), d.end());
        sorted.push_back(std::move(d));
        w.push_back(crb_weight(b.snr, b.bandwidth_hz, b.carrier_hz));
    }
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(wsum > 0.0) || !std::isfinite(wsum))
        throw ArgumentError("crb_weighted_combine: weights must have a positive finite sum");
    const bool equal = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });

    std::vector<double> out(k, 0.0);
    for (std::size_t p = 0; p < k; ++p)
    {
        double acc = 0.0;
        for (std::size_t m = 0; m < sorted.size(); ++m)
            acc += equal ? sorted[m][p] : w[m] * sorted[m][p];
        out[p] = equal ? acc / static_cast<double>(sorted.size()) : acc / wsum;
    }
    return out;
}

std::vector<cdouble> ls_amplitudes(const std::vector<cdouble> &samples, const std::vector<double> &delays,
                                   double spacing_hz, double max_condition)
{
    const std::size_t n = samples.size();
    const std::size_t k = delays.size();
    if (k == 0 || n < k)
        throw ArgumentError("ls_amplitudes: need 1 <= K <= N");
    Eigen::MatrixXcd x(n, k);
    Eigen::VectorXcd y(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        y(static_cast<Eigen::Index>(i)) = samples[i];
        for (std::size_t p = 0; p < k; ++p)
        {
            const long double cyc = static_cast<long double>(i) * spacing_hz * delays[p];
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
                std::polar(1.0, -static_cast<double>(two_pi_l * (cyc - std::floor(cyc))));
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition))
        throw IllConditionedError("ls_amplitudes: steering matrix is rank deficient", cond);
    const Eigen::VectorXcd a = svd.solve(y);
    return std::vector<cdouble>(a.data(), a.data() + a.size());
}

std::vector<double> estimate_phase_offsets(const std::vector<std::vector<cdouble>> &gains,
                                           const std::vector<std::vector<double>> &band_delays,
                                           const std::vector<double> &carriers_hz)
{
    const std::size_t m_count = gains.size();
    if (m_count == 0 || band_delays.size() != m_count || carriers_hz.size() != m_count)
        throw ArgumentError("estimate_phase_offsets: inconsistent band counts");
    const std::size_t k = gains.front().size();
    std::vector<double> out(m_count, 0.0);
    for (std::size_t m = 1; m < m_count; ++m)
    {
        if (gains[m].size() != k || band_delays[m].size() != k || band_delays[0].size() != k)
            throw ArgumentError("estimate_phase_offsets: inconsistent path counts");
        std::vector<double> terms;
        for (std::size_t p = 0; p < k; ++p)
        {
            const long double cyc = static_cast<long double>(carriers_hz[m]) * band_delays[m][p] -
                                    static_cast<long double>(carriers_hz[0]) * band_delays[0][p];
            const double carrier_term = two_pi * wrapped_frac(cyc);
            terms.push_back(wrap_phase_signed(std::arg(gains[m][p]) - std::arg(gains[0][p]) + carrier_term));
        }
        out[m] = wrapped_mean(terms);
    }
    return out;
}

std::vector<double> estimate_sync_errors(const std::vector<std::vector<double>> &band_delays,
                                         const std::vector<double> &fused_delays)
{
    std::vector<double> out;
    const std::size_t k = fused_delays.size();
    if (k == 0)
        throw ArgumentError("estimate_sync_errors: no paths");
    for (const auto &bd : band_delays)
    {
        if (bd.size() != k)
            throw ArgumentError("estimate_sync_errors: path count mismatch");
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p)
            acc += bd[p] - fused_delays[p];
        out.push_back(acc / static_cast<double>(k));
    }
    return out;
}

std::vector<double> estimate_sync_errors(const std::vector<std::vector<cdouble>> &roots,
                                         const std::vector<double> &fused_delays,
                                         const std::vector<double> &spacings_hz)
{
    if (roots.size() != spacings_hz.size())
        throw ArgumentError("estimate_sync_errors: band count mismatch");
    std::vector<std::vector<double>> bd(roots.size());
    for (std::size_t m = 0; m < roots.size(); ++m)
        for (const auto &z : roots[m])
            bd[m].push_back(root_to_delay(z, spacings_hz[m]));
    return estimate_sync_errors(bd, fused_delays);
}

BandRootMusic band_root_music(const std::vector<cdouble> &samples, double spacing_hz, std::optional<std::size_t> K,
                              std::optional<std::size_t> window, bool polish_roots)
{
    const std::size_t n = samples.size();
    if (n < 3)
        throw ArgumentError("band_root_music: need at least 3 subcarriers");
    BandRootMusic out;

    std::size_t order = 0;
    if (K)
    {
        order = *K;
    }
    else
    {
        const std::size_t l0 = window ? *window : std::clamp<std::size_t>(std::lround(static_cast<double>(n) / 3.0), 2, n - 1);
        const Eigen::MatrixXcd h0 = build_hankel(samples, l0);
        const Eigen::VectorXd sv = hankel_singular_values(h0);
        out.singular_values.assign(sv.data(), sv.data() + sv.size());
        order = estimate_model_order(out.singular_values, n - l0 + 1);
    }
    out.model_order = order;
    out.window = window ? *window : default_window(n, order);

    const Eigen::MatrixXcd h = build_hankel(samples, out.window);
    if (out.singular_values.empty())
    {
        const Eigen::VectorXd sv = hankel_singular_values(h);
        out.singular_values.assign(sv.data(), sv.data() + sv.size());
    }
    const Eigen::MatrixXcd s = noise_subspace(h, order);
    out.roots = root_music_delays(s, spacing_hz, order, polish_roots);
    return out;
}

std::optional<double> estimate_band_snr(const std::vector<cdouble> &samples, const std::vector<double> &delays,
                                        double spacing_hz)
{
    const BandFit fit = fit_band(samples, delays, spacing_hz);
    if (fit.degenerate)
        return std::nullopt;
    return fit.signal_power / (2.0 * fit.noise_var);
}

double delay_crb_variance(double amplitude, double noise_var_per_dim, const Band &band)
{
    if (noise_var_per_dim <= 0.0)
        return 0.0;
    if (!(amplitude > 0.0))
        return std::numeric_limits<double>::infinity();
    const auto n = static_cast<double>(band.num_subcarriers);
    const double spread = band.spacing_hz * band.spacing_hz * n * (n * n - 1.0) / 12.0;
    return noise_var_per_dim / (amplitude * amplitude * 4.0 * M_PI * M_PI * spread);
}

CoarseEstimate run_coarse(const CsiMeasurement &measurement, const CoarseOptions &options)
{
    const ScenarioConfig &sc = measurement.scenario;
    const std::size_t m_count = sc.num_bands();
    if (measurement.samples.size() != m_count)
        throw ArgumentError("run_coarse: measurement band count does not match scenario");
    for (std::size_t m = 0; m < m_count; ++m)
        if (measurement.samples[m].size() != sc.bands[m].num_subcarriers)
            throw ArgumentError("run_coarse: sample count mismatch in band " + std::to_string(m));

    CoarseEstimate est;
    std::size_t k = 0;
    if (options.model_order)
    {
        k = *options.model_order;
        est.band_model_orders.assign(m_count, k);
    }
    else
    {
        for (std::size_t m = 0; m < m_count; ++m)
        {
            const auto br = band_root_music(measurement.samples[m], sc.bands[m].spacing_hz, std::nullopt, options.window,
                                            options.polish_roots);
            est.band_model_orders.push_back(br.model_order);
            k = std::max(k, br.model_order);
        }
    }
    est.num_paths = k;

    std::vector<BandDelayEstimate> per_band;
    std::vector<double> noise_var(m_count, 0.0);
    const double cfg_snr = configured_snr(sc, measurement.samples);
    for (std::size_t m = 0; m < m_count; ++m)
    {
        const Band &band = sc.bands[m];
        const auto br = band_root_music(measurement.samples[m], band.spacing_hz, k, options.window, options.polish_roots);
        est.windows.push_back(br.window);
        est.roots.push_back(br.roots.roots);
        est.band_delays.push_back(br.roots.delays);

        const BandFit fit = fit_band(measurement.samples[m], br.roots.delays, band.spacing_hz);
        double snr = cfg_snr;
        if (!fit.degenerate)
        {
            snr = fit.signal_power / (2.0 * fit.noise_var);
            noise_var[m] = fit.noise_var;
        }
        else if (sc.noise_std)
        {
            noise_var[m] = *sc.noise_std * *sc.noise_std;
        }
        else if (sc.snr_db && cfg_snr > 0.0)
        {
            noise_var[m] = fit.signal_power / (2.0 * cfg_snr);
        }
        est.band_snr.push_back(snr);
        per_band.push_back({br.roots.delays, snr, band.bandwidth(), band.start_freq_hz});
        est.weights.push_back(crb_weight(snr, band.bandwidth(), band.start_freq_hz));
    }

    est.delays = crb_weighted_combine(per_band);
    est.sync_errors = estimate_sync_errors(est.band_delays, est.delays);

    for (std::size_t m = 0; m < m_count; ++m)
    {
        std::vector<double> d(k);
        for (std::size_t p = 0; p < k; ++p)
            d[p] = est.delays[p] + est.sync_errors[m];
        est.gains.push_back(ls_amplitudes(measurement.samples[m], d, sc.bands[m].spacing_hz, options.max_condition));
    }

    std::vector<double> carriers;
    for (const auto &b : sc.bands)
        carriers.push_back(b.start_freq_hz);
    est.phase_offsets = estimate_phase_offsets(est.gains, est.band_delays, carriers);

    const double wsum = std::accumulate(est.weights.begin(), est.weights.end(), 0.0);
    const bool equal = std::all_of(est.weights.begin(), est.weights.end(), [&](double v) { return v == est.weights.front(); });
    est.amplitudes.assign(k, 0.0);
    est.delay_crb_var.assign(k, 0.0);
    for (std::size_t p = 0; p < k; ++p)
    {
        double acc = 0.0, info = 0.0;
        bool exact = false;
        for (std::size_t m = 0; m < m_count; ++m)
        {
            const double mag = std::abs(est.gains[m][p]);
            acc += equal ? mag : est.weights[m] * mag;
            const double v = delay_crb_variance(mag, noise_var[m], sc.bands[m]);
            if (v == 0.0)
                exact = true;
            else if (std::isfinite(v))
                info += 1.0 / v;
        }
        est.amplitudes[p] = equal ? acc / static_cast<double>(m_count) : acc / wsum;
        est.delay_crb_var[p] = exact ? 0.0 : (info > 0.0 ? 1.0 / info : std::numeric_limits<double>::infinity());
    }
    return est;
}

RefinedParams coarse_to_refined(const CoarseEstimate &coarse, const ScenarioConfig &scenario)
{
    const std::size_t m_count = scenario.num_bands();
    const std::size_t k = coarse.num_paths;
    RefinedParams out;
    for (std::size_t p = 0; p < k; ++p)
        out.paths.push_back({coarse.amplitudes[p], wrap_phase(std::arg(coarse.gains[0][p])), coarse.delays[p]});
    // Offsets consistent with the refined model: band-m gains carry
    // e^{j phi'_m} e^{-j 2 pi f'_m tau_k} relative to band 1.
    out.phase_offset.assign(m_count, 0.0);
    for (std::size_t m = 1; m < m_count; ++m)
    {
        const double fprime = carrier_offset(scenario, m);
        std::vector<double> terms;
        for (std::size_t p = 0; p < k; ++p)
        {
            const long double cyc = static_cast<long double>(fprime) * coarse.delays[p];
            terms.push_back(std::arg(coarse.gains[m][p]) - std::arg(coarse.gains[0][p]) + two_pi * wrapped_frac(cyc));
        }
        out.phase_offset[m] = wrapped_mean(terms);
    }
    out.sync_error = coarse.sync_errors;
    return out;
}

} // namespace mbsense
