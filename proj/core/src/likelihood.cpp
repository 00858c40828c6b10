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

#include "mbsense/likelihood.hpp"

#include "mbsense/errors.hpp"

#include <cmath>

namespace mbsense
{

namespace
{

constexpr std::size_t resync_every = 32;

cdouble unit(double cycles)
{
    const double frac = cycles - std::floor(cycles);
    const double a = -two_pi * frac;
    return {std::cos(a), std::sin(a)};
}

// out[i] = exp(-j 2 pi (c0 + i * step) x) for i in [0, n), by recurrence.
void fill_ramp(double c0, double step, double x, std::size_t n, cdouble *out)
{
    const cdouble w = unit(step * x);
    cdouble z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (i % resync_every == 0)
            z = unit((c0 + static_cast<double>(i) * step) * x);
        out[i] = z;
        z *= w;
    }
}

} // namespace

std::size_t SlotLayout::slot(const VariableId &id) const
{
    const std::size_t k = num_paths, m = num_bands;
    switch (id.kind)
    {
    case VarKind::Delay:
        if (id.index < k)
            return id.index;
        break;
    case VarKind::Amplitude:
        if (id.index < k)
            return k + id.index;
        break;
    case VarKind::PathPhase:
        if (id.index < k)
            return 2 * k + id.index;
        break;
    case VarKind::BandPhase:
        if (id.index < m)
            return 3 * k + id.index;
        break;
    case VarKind::SyncError:
        if (id.index < m)
            return 3 * k + m + id.index;
        break;
    }
    throw ArgumentError("variable " + variable_label(id) + " out of range for K=" + std::to_string(k) +
                        ", M=" + std::to_string(m));
}

double to_scaled(VarKind kind, double si_value)
{
    return (kind == VarKind::Delay || kind == VarKind::SyncError) ? si_value * ns_per_s : si_value;
}

double from_scaled(VarKind kind, double scaled_value)
{
    return (kind == VarKind::Delay || kind == VarKind::SyncError) ? scaled_value / ns_per_s : scaled_value;
}

std::vector<double> to_slots(const RefinedParams &params, const SlotLayout &layout)
{
    if (params.paths.size() != layout.num_paths || params.phase_offset.size() != layout.num_bands ||
        params.sync_error.size() != layout.num_bands)
        throw ArgumentError("to_slots: parameter sizes do not match the layout");
    std::vector<double> s(layout.size(), 0.0);
    for (std::size_t k = 0; k < layout.num_paths; ++k)
    {
        s[layout.slot({VarKind::Delay, k})] = params.paths[k].delay * ns_per_s;
        s[layout.slot({VarKind::Amplitude, k})] = params.paths[k].amplitude;
        s[layout.slot({VarKind::PathPhase, k})] = params.paths[k].phase;
    }
    for (std::size_t m = 0; m < layout.num_bands; ++m)
    {
        s[layout.slot({VarKind::BandPhase, m})] = params.phase_offset[m];
        s[layout.slot({VarKind::SyncError, m})] = params.sync_error[m] * ns_per_s;
    }
    return s;
}

RefinedParams from_slots(const std::vector<double> &slots, const SlotLayout &layout)
{
    if (slots.size() != layout.size())
        throw ArgumentError("from_slots: slot vector has the wrong size");
    RefinedParams p;
    for (std::size_t k = 0; k < layout.num_paths; ++k)
        p.paths.push_back({slots[layout.slot({VarKind::Amplitude, k})],
                           wrap_phase(slots[layout.slot({VarKind::PathPhase, k})]),
                           slots[layout.slot({VarKind::Delay, k})] / ns_per_s});
    for (std::size_t m = 0; m < layout.num_bands; ++m)
    {
        p.phase_offset.push_back(m == 0 ? 0.0 : wrap_phase(slots[layout.slot({VarKind::BandPhase, m})]));
        p.sync_error.push_back(slots[layout.slot({VarKind::SyncError, m})] / ns_per_s);
    }
    return p;
}

RefinedLikelihood::RefinedLikelihood(const MultibandSignal &samples, const ScenarioConfig &scenario,
                                     std::size_t num_paths, double noise_std)
{
    if (!(noise_std > 0.0) || !std::isfinite(noise_std))
        throw DomainError("refined likelihood needs a positive noise std");
    if (num_paths == 0)
        throw ArgumentError("refined likelihood needs at least one path");
    if (samples.size() != scenario.num_bands())
        throw ArgumentError("refined likelihood: band count mismatch");
    layout_ = {num_paths, scenario.num_bands()};
    eta_ = noise_std;

    const std::size_t total = scenario.total_samples();
    r_.resize(static_cast<Eigen::Index>(total));
    fprime_.resize(static_cast<Eigen::Index>(total));
    nfs_.resize(static_cast<Eigen::Index>(total));
    std::size_t i = 0;
    band_start_.push_back(0);
    for (std::size_t m = 0; m < scenario.num_bands(); ++m)
    {
        const Band &b = scenario.bands[m];
        if (samples[m].size() != b.num_subcarriers)
            throw ArgumentError("refined likelihood: sample count mismatch in band " + std::to_string(m));
        const double fo = carrier_offset(scenario, m) / ns_per_s;
        const double fs = b.spacing_hz / ns_per_s;
        carrier_offset_.push_back(fo);
        spacing_.push_back(fs);
        for (std::size_t n = 0; n < b.num_subcarriers; ++n, ++i)
        {
            const auto ii = static_cast<Eigen::Index>(i);
            r_(ii) = samples[m][n];
            nfs_(ii) = static_cast<double>(n) * fs;
            fprime_(ii) = fo + nfs_(ii);
        }
        band_start_.push_back(i);
    }
    constant_ = static_cast<double>(total) * std::log(1.0 / (std::sqrt(two_pi) * eta_));
}

void RefinedLikelihood::add_path(const std::vector<double> &slots, std::size_t k, std::size_t band_begin,
                                 std::size_t band_end, Eigen::VectorXcd &acc) const
{
    const SlotLayout &L = layout_;
    const double tau = slots[L.slot({VarKind::Delay, k})];
    const double a = slots[L.slot({VarKind::Amplitude, k})];
    const double beta = slots[L.slot({VarKind::PathPhase, k})];
    for (std::size_t m = band_begin; m < band_end; ++m)
    {
        const double phi = m == 0 ? 0.0 : slots[L.slot({VarKind::BandPhase, m})];
        const double delta = slots[L.slot({VarKind::SyncError, m})];
        const double lag = tau + delta;
        const double fs = spacing_[m];
        // exp(j(beta + phi)) * exp(-j 2 pi f'_m tau) * exp(-j 2 pi n f_s (tau + delta))
        const cdouble g = std::polar(a, beta + phi) * unit(carrier_offset_[m] * tau);
        const cdouble w = unit(fs * lag);
        const std::size_t b0 = band_start_[m], n = band_start_[m + 1] - b0;
        cdouble z = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (i % resync_every == 0)
                z = g * unit(static_cast<double>(i) * fs * lag);
            acc(static_cast<Eigen::Index>(b0 + i)) += z;
            z *= w;
        }
    }
}

void RefinedLikelihood::signal(const std::vector<double> &slots, Eigen::VectorXcd &out) const
{
    if (slots.size() != layout_.size())
        throw ArgumentError("signal: slot vector has the wrong size");
    out.setZero(r_.size());
    for (std::size_t k = 0; k < layout_.num_paths; ++k)
        add_path(slots, k, 0, layout_.num_bands, out);
}

double RefinedLikelihood::log_likelihood(const std::vector<double> &slots) const
{
    Eigen::VectorXcd s;
    signal(slots, s);
    return constant_ - (r_ - s).squaredNorm() / (2.0 * eta_ * eta_);
}

void RefinedLikelihood::ramp(const VariableId &var, std::size_t &begin, std::size_t &end,
                             const Eigen::VectorXd *&freq) const
{
    if (var.kind == VarKind::Delay)
    {
        begin = 0;
        end = static_cast<std::size_t>(r_.size());
        freq = &fprime_;
    }
    else
    {
        begin = band_start_[var.index];
        end = band_start_[var.index + 1];
        freq = &nfs_;
    }
}

void RefinedLikelihood::sample_terms(const VariableId &var, const std::vector<double> &slots, SampleTerms &out) const
{
    const SlotLayout &L = layout_;
    const std::size_t js = L.slot(var);
    std::vector<double> ns = slots;
    const auto total = r_.size();
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(total);
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(total);

    switch (var.kind)
    {
    case VarKind::Delay:
    case VarKind::Amplitude:
    case VarKind::PathPhase:
        ns[js] = var.kind == VarKind::Amplitude ? 1.0 : 0.0;
        for (std::size_t k = 0; k < L.num_paths; ++k)
            add_path(ns, k, 0, L.num_bands, k == var.index ? d : b);
        break;
    case VarKind::BandPhase:
    case VarKind::SyncError: {
        if (var.kind == VarKind::BandPhase && var.index == 0)
            throw ArgumentError("phi_1 is pinned and cannot be a free variable");
        ns[js] = 0.0;
        const std::size_t m = var.index;
        for (std::size_t k = 0; k < L.num_paths; ++k)
        {
            add_path(ns, k, 0, m, b);
            add_path(ns, k, m, m + 1, d);
            add_path(ns, k, m + 1, L.num_bands, b);
        }
        break;
    }
    }

    const Eigen::VectorXcd res = r_ - b;
    out.rr = res.squaredNorm();
    out.dd = d.squaredNorm();
    if (var.kind == VarKind::Delay || var.kind == VarKind::SyncError)
    {
        std::size_t i0 = 0, i1 = 0;
        const Eigen::VectorXd *freq = nullptr;
        ramp(var, i0, i1, freq);
        const auto n = static_cast<Eigen::Index>(i1 - i0);
        const auto s0 = static_cast<Eigen::Index>(i0);
        out.qv = res.segment(s0, n).conjugate().cwiseProduct(d.segment(s0, n));
        out.qcv = out.qv.cwiseProduct(freq->segment(s0, n).cast<cdouble>());
        out.q = out.qv.sum();
    }
    else
    {
        out.q = res.conjugate().cwiseProduct(d).sum();
        out.qv.resize(0);
        out.qcv.resize(0);
    }
}

void RefinedLikelihood::evaluate(const VariableId &var, const std::vector<SampleTerms> &terms,
                                 const std::vector<double> &positions, bool with_gradient, Eigen::MatrixXd &loglik,
                                 Eigen::MatrixXd &dloglik) const
{
    const auto nb = static_cast<Eigen::Index>(terms.size());
    const auto np = static_cast<Eigen::Index>(positions.size());
    loglik.resize(nb, np);
    if (with_gradient)
        dloglik.resize(nb, np);
    const double inv2 = 1.0 / (2.0 * eta_ * eta_);
    const double inv1 = 1.0 / (eta_ * eta_);

    if (var.kind == VarKind::Delay || var.kind == VarKind::SyncError)
    {
        std::size_t i0 = 0, i1 = 0;
        const Eigen::VectorXd *freq = nullptr;
        ramp(var, i0, i1, freq);
        const std::size_t n = i1 - i0;
        Eigen::VectorXcd e(static_cast<Eigen::Index>(n));
        for (Eigen::Index p = 0; p < np; ++p)
        {
            const double x = positions[static_cast<std::size_t>(p)];
            if (var.kind == VarKind::Delay)
            {
                for (std::size_t m = 0; m < layout_.num_bands; ++m)
                {
                    const std::size_t b0 = band_start_[m];
                    fill_ramp(carrier_offset_[m], spacing_[m], x, band_start_[m + 1] - b0, e.data() + b0);
                }
            }
            else
            {
                fill_ramp(0.0, spacing_[var.index], x, n, e.data());
            }
            for (Eigen::Index b = 0; b < nb; ++b)
            {
                const SampleTerms &t = terms[static_cast<std::size_t>(b)];
                const cdouble s = t.qv.transpose() * e;
                loglik(b, p) = constant_ - (t.rr - 2.0 * s.real() + t.dd) * inv2;
                if (with_gradient)
                {
                    // dS/dx = -j 2 pi sum q c e
                    const cdouble ds = cdouble(0.0, -two_pi) * cdouble(t.qcv.transpose() * e);
                    dloglik(b, p) = ds.real() * inv1;
                }
            }
        }
        return;
    }

    for (Eigen::Index p = 0; p < np; ++p)
    {
        const double x = positions[static_cast<std::size_t>(p)];
        const cdouble ejx = std::polar(1.0, x);
        for (Eigen::Index b = 0; b < nb; ++b)
        {
            const SampleTerms &t = terms[static_cast<std::size_t>(b)];
            double sse = 0.0, dsse = 0.0;
            if (var.kind == VarKind::Amplitude)
            {
                sse = t.rr - 2.0 * x * t.q.real() + x * x * t.dd;
                dsse = -2.0 * t.q.real() + 2.0 * x * t.dd;
            }
            else
            {
                const cdouble eq = ejx * t.q;
                sse = t.rr - 2.0 * eq.real() + t.dd;
                dsse = 2.0 * eq.imag();
            }
            loglik(b, p) = constant_ - sse * inv2;
            if (with_gradient)
                dloglik(b, p) = -dsse * inv2;
        }
    }
}

double RefinedLikelihood::fisher_diagonal(const VariableId &var, const std::vector<double> &slots) const
{
    const SlotLayout &L = layout_;
    const double inv = 1.0 / (eta_ * eta_);
    double amp2 = 0.0;
    for (std::size_t k = 0; k < L.num_paths; ++k)
    {
        const double a = slots[L.slot({VarKind::Amplitude, k})];
        amp2 += a * a;
    }
    switch (var.kind)
    {
    case VarKind::Delay: {
        const double a = slots[L.slot({VarKind::Amplitude, var.index})];
        return inv * a * a * (two_pi * two_pi) * fprime_.squaredNorm();
    }
    case VarKind::Amplitude:
        return inv * static_cast<double>(r_.size());
    case VarKind::PathPhase: {
        const double a = slots[L.slot({VarKind::Amplitude, var.index})];
        return inv * a * a * static_cast<double>(r_.size());
    }
    case VarKind::BandPhase:
        return inv * amp2 * static_cast<double>(band_start_[var.index + 1] - band_start_[var.index]);
    case VarKind::SyncError: {
        const std::size_t b0 = band_start_[var.index], b1 = band_start_[var.index + 1];
        const double sum = nfs_.segment(static_cast<Eigen::Index>(b0), static_cast<Eigen::Index>(b1 - b0)).squaredNorm();
        return inv * amp2 * (two_pi * two_pi) * sum;
    }
    }
    return inv;
}

} // namespace mbsense
