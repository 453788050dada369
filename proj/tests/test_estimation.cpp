// SPDX-License-Identifier: Apache-2.0
//
// pmimo - principal-modes MIMO simulation for multimode fibre links
// Copyright (C) 2026 The pmimo Authors
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


#include "oracles.hpp"

#include <pmimo/channel.hpp>
#include <pmimo/estimation.hpp>
#include <pmimo/experiments.hpp>

#include <gtest/gtest.h>

using namespace pmimo;

namespace
{
    FrequencyGrid grid(std::size_t n)
    {
        FrequencyGrid g;
        g.n_bins = n;
        return g;
    }

    SignalFrame ts_frame(const TrainingSequenceSet &ts, std::size_t prefix = 0)
    {
        TrainingSequenceSet t = ts;
        t.prefix_len = prefix;
        SignalFrame empty;
        empty.samples.resize(0, static_cast<Eigen::Index>(ts.m));
        return assemble_frame(t, empty);
    }

    // Receives the TS region through h (circular) without noise.
    ChannelEstimate noiseless_estimate(const ChannelSpectrum &h, const TrainingSequenceSet &ts)
    {
        return ls_estimate(apply_spectrum(h, ts_frame(ts)), ts, h.grid);
    }

    double pilot_error_power(const ChannelEstimate &e, const ChannelSpectrum &h)
    {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < h.n_bins(); ++k)
            for (Eigen::Index j = 0; j < h.cols(); ++j)
                if (e.at(k, j) == Provenance::measured)
                {
                    acc += (e.spectrum[k].col(j) - h[k].col(j)).squaredNorm();
                    count += static_cast<std::size_t>(h.rows());
                }
        return acc / static_cast<double>(count);
    }
} // namespace

TEST(TrainingSet, CombSupportsFromDefinition)
{
    const auto ts = generate_training_set(2, 8, 0, 1);
    for (std::size_t k = 0; k < 8; ++k)
    {
        const auto p = static_cast<Eigen::Index>(k % 2);
        EXPECT_EQ(std::abs(ts.freq_domain(static_cast<Eigen::Index>(k), p)), 1.0);
        EXPECT_EQ(std::abs(ts.freq_domain(static_cast<Eigen::Index>(k), 1 - p)), 0.0);
    }
    EXPECT_EQ(ts.pilot_bins(0), (std::vector<std::size_t>{0, 2, 4, 6}));
    EXPECT_EQ(ts.pilot_bins(1), (std::vector<std::size_t>{1, 3, 5, 7}));
}

TEST(TrainingSet, ExactOrthogonalityAndBpsk)
{
    const auto ts = generate_training_set(12, 4096, 0, 5);
    const CMatrix gram = ts.freq_domain.adjoint() * ts.freq_domain;
    for (Eigen::Index p = 0; p < 12; ++p)
        for (Eigen::Index q = 0; q < 12; ++q)
            if (p != q)
                EXPECT_EQ(gram(p, q), Complex(0.0, 0.0));
    for (Eigen::Index k = 0; k < 4096; ++k)
    {
        const Complex v = ts.freq_domain(k, k % 12);
        EXPECT_TRUE(v == Complex(1.0, 0.0) || v == Complex(-1.0, 0.0));
    }
}

TEST(TrainingSet, PilotCountsForTwelveTributaries)
{
    const auto ts = generate_training_set(12, 4096, 0, 1);
    std::size_t total = 0;
    for (std::size_t p = 0; p < 12; ++p)
    {
        // 4096 = 12 * 341 + 4
        const std::size_t expected = p < 4 ? 342 : 341;
        EXPECT_EQ(ts.pilot_bins(p).size(), expected);
        total += ts.pilot_bins(p).size();
    }
    EXPECT_EQ(total, 4096u);
}

TEST(TrainingSet, TimeDomainIsScaledIdftOfCombs)
{
    const auto ts = generate_training_set(3, 64, 0, 9);
    for (Eigen::Index p = 0; p < 3; ++p)
    {
        std::vector<Complex> x(64);
        for (Eigen::Index i = 0; i < 64; ++i)
            x[static_cast<std::size_t>(i)] = ts.time_domain(i, p);
        const auto spec = oracle::naive_dft(x);
        const double scale = 64.0 * ts.tx_scale[static_cast<std::size_t>(p)];
        for (Eigen::Index k = 0; k < 64; ++k)
            EXPECT_LT(std::abs(spec[static_cast<std::size_t>(k)] - scale * ts.freq_domain(k, p)), 1e-10);
        EXPECT_NEAR(ts.time_domain.col(p).squaredNorm() / 64.0, 1.0, 1e-12);
    }
}

TEST(TrainingSet, DeterministicAndErrors)
{
    const auto a = generate_training_set(4, 64, 0, 3), b = generate_training_set(4, 64, 0, 3);
    EXPECT_TRUE((a.freq_domain.array() == b.freq_domain.array()).all());
    EXPECT_THROW(generate_training_set(0, 64, 0, 1), config_error);
    EXPECT_THROW(generate_training_set(8, 4, 0, 1), config_error);
    EXPECT_THROW(generate_training_set(2, 64, 64, 1), config_error);
}

TEST(Frame, LayoutWithPrefix)
{
    const auto ts = generate_training_set(2, 4096, 16, 1);
    SignalFrame payload = SignalFrame::from_samples(CMatrix::Ones(10, 2));
    const auto f = assemble_frame(ts, payload);
    EXPECT_EQ(f.layout.ts_offset, 16u);
    EXPECT_EQ(f.layout.ts_length, 4096u);
    EXPECT_EQ(f.layout.payload_offset, 4096u + 32u);
    EXPECT_EQ(f.length(), 4096 + 32 + 10);
    EXPECT_TRUE(f.samples.middleRows(16, 4096).isApprox(ts.time_domain));
    EXPECT_TRUE(f.samples.topRows(16).isApprox(ts.time_domain.bottomRows(16)));
    EXPECT_TRUE(f.samples.middleRows(4112, 16).isApprox(ts.time_domain.topRows(16)));
    EXPECT_TRUE(f.samples.bottomRows(10).isApprox(payload.samples));
}

TEST(Frame, ZeroPrefixAndErrors)
{
    const auto ts = generate_training_set(2, 64, 0, 1);
    const auto f = assemble_frame(ts, SignalFrame::from_samples(CMatrix::Zero(5, 2)));
    EXPECT_EQ(f.layout.ts_offset, 0u);
    EXPECT_EQ(f.layout.payload_offset, 64u);
    EXPECT_THROW(assemble_frame(ts, SignalFrame::from_samples(CMatrix::Zero(5, 3))), config_error);
}

TEST(LsEstimate, IdentityChannelThroughFrame)
{
    const FrequencyGrid g = grid(4096);
    const auto ts = generate_training_set(2, 4096, 16, 1);
    const auto f = assemble_frame(ts, SignalFrame::from_samples(CMatrix::Zero(8, 2)));
    const auto e = ls_estimate(f, ts, g);
    for (std::size_t k = 0; k < g.n_bins; ++k)
        for (Eigen::Index j = 0; j < 2; ++j)
            if (e.at(k, j) == Provenance::measured)
                EXPECT_LT((e.spectrum[k].col(j) - CMatrix::Identity(2, 2).col(j)).norm(), 1e-12);
            else
                EXPECT_EQ(e.at(k, j), Provenance::unmeasured);
}

TEST(LsEstimate, DiagonalChannel)
{
    const FrequencyGrid g = grid(256);
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = iu;
    const auto ts = generate_training_set(2, 256, 0, 4);
    const auto e = noiseless_estimate(ChannelSpectrum::constant(g, d), ts);
    for (std::size_t k = 0; k < 256; ++k)
        for (Eigen::Index j = 0; j < 2; ++j)
            if (e.at(k, j) == Provenance::measured)
                EXPECT_LT((e.spectrum[k].col(j) - d.col(j)).norm(), 1e-12);
}

TEST(LsEstimate, NoiseVarianceAndAveraging)
{
    const FrequencyGrid g = grid(1024);
    const auto ts = generate_training_set(2, 1024, 0, 4);
    const auto h = ChannelSpectrum::identity(g, 2);
    const double sigma2 = 0.01;  // 20 dB
    const double pilots = 512.0;
    // Per-entry error variance = sigma2 * n / |n * tx_scale|^2 = sigma2 * pilots / n.
    const double expected = sigma2 * pilots / 1024.0;
    auto one = [&](std::uint64_t seed) {
        return ls_estimate(add_noise(ts_frame(ts), sigma2, seed), ts, g);
    };
    double single = 0.0, pair = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t)
    {
        single += pilot_error_power(one(100 + t), h) / trials;
        std::vector<ChannelEstimate> two{one(1000 + 2 * t), one(1001 + 2 * t)};
        pair += pilot_error_power(average_estimates(two), h) / trials;
    }
    EXPECT_NEAR(single / expected, 1.0, 0.05);
    EXPECT_NEAR(pair / single, 0.5, 0.05);
}

TEST(LsEstimate, LengthMismatch)
{
    const auto ts = generate_training_set(2, 64, 0, 1);
    EXPECT_THROW(ls_estimate(ts_frame(ts), ts, grid(128)), config_error);
}

TEST(Interpolation, ConstantChannelStaysConstant)
{
    const FrequencyGrid g = grid(512);
    Rng rng(1);
    const CMatrix c = oracle::random_matrix(rng, 3, 3);
    const auto ts = generate_training_set(3, 512, 0, 2);
    const auto full = interpolate_extrapolate(noiseless_estimate(ChannelSpectrum::constant(g, c), ts));
    EXPECT_TRUE(full.complete());
    for (std::size_t k = 0; k < 512; ++k)
        EXPECT_LT((full.spectrum[k] - c).norm(), 1e-12);
}

TEST(Interpolation, LinearPhaseErrorBound)
{
    const FrequencyGrid g = grid(4096);
    std::vector<CMatrix> bins;
    for (std::size_t k = 0; k < g.n_bins; ++k)
        bins.push_back(CMatrix::Constant(1, 1, std::exp(-iu * g.omega(k) * 1.0)));
    const ChannelSpectrum h(g, bins);
    // One tributary with pilots every 12 bins.
    ChannelEstimate partial;
    partial.spectrum = ChannelSpectrum(g, std::vector<CMatrix>(4096, CMatrix::Zero(1, 1)));
    partial.provenance.assign(4096, Provenance::unmeasured);
    for (std::size_t k = 0; k < 4096; k += 12)
    {
        partial.spectrum[k] = h[k];
        partial.provenance[k] = Provenance::measured;
    }
    const auto full = interpolate_extrapolate(partial);
    double worst = 0.0;
    for (std::size_t k = 0; k <= 4092; ++k)
        worst = std::max(worst, std::abs(full.spectrum[k](0, 0) - h[k](0, 0)));
    EXPECT_LT(worst, 0.002);
    EXPECT_EQ(full.provenance[4095], Provenance::extrapolated);
    EXPECT_EQ(full.provenance[5], Provenance::interpolated);
}

TEST(Interpolation, ExactForChannelsLinearBetweenPilots)
{
    const FrequencyGrid g = grid(1024);
    Rng rng(3);
    const CMatrix a = oracle::random_matrix(rng, 4, 4), b = oracle::random_matrix(rng, 4, 4);
    std::vector<CMatrix> bins;
    for (std::size_t k = 0; k < g.n_bins; ++k)
        bins.push_back(a + b * (static_cast<double>(k) / 1024.0));
    const ChannelSpectrum h(g, bins);
    const auto ts = generate_training_set(4, 1024, 0, 1);
    const auto full = interpolate_extrapolate(noiseless_estimate(h, ts));
    for (std::size_t k = 0; k < g.n_bins; ++k)
        for (Eigen::Index j = 0; j < 4; ++j)
            if (full.at(k, j) != Provenance::extrapolated)
                EXPECT_LT((full.spectrum[k].col(j) - h[k].col(j)).norm(), 1e-9);
}

TEST(Interpolation, FullyMeasuredIsNoOpAndErrors)
{
    const FrequencyGrid g = grid(64);
    const auto ts = generate_training_set(1, 64, 0, 1);
    const auto e = noiseless_estimate(ChannelSpectrum::identity(g, 1), ts);
    const auto full = interpolate_extrapolate(e);
    EXPECT_EQ(full.provenance, e.provenance);
    for (std::size_t k = 0; k < 64; ++k)
        EXPECT_EQ(full.spectrum[k](0, 0), e.spectrum[k](0, 0));

    ChannelEstimate sparse;
    sparse.spectrum = ChannelSpectrum(g, std::vector<CMatrix>(64, CMatrix::Zero(1, 1)));
    sparse.provenance.assign(64, Provenance::unmeasured);
    sparse.provenance[3] = Provenance::measured;
    EXPECT_THROW(interpolate_extrapolate(sparse), numerical_error);
}

TEST(Averaging, CopiesAndCancellation)
{
    const FrequencyGrid g = grid(64);
    const auto ts = generate_training_set(2, 64, 0, 1);
    Rng rng(4);
    const CMatrix base = oracle::random_matrix(rng, 2, 2), err = oracle::random_matrix(rng, 2, 2);
    const auto e0 = noiseless_estimate(ChannelSpectrum::constant(g, base), ts);
    std::vector<ChannelEstimate> copies(5, e0);
    const auto same = average_estimates(copies);
    for (std::size_t k = 0; k < 64; ++k)
        EXPECT_LT((same.spectrum[k] - e0.spectrum[k]).norm(), 1e-15);

    auto plus = e0, minus = e0;
    for (std::size_t k = 0; k < 64; ++k)
    {
        plus.spectrum[k] += err;
        minus.spectrum[k] -= err;
    }
    std::vector<ChannelEstimate> pm{plus, minus};
    const auto back = average_estimates(pm);
    for (std::size_t k = 0; k < 64; ++k)
        EXPECT_LT((back.spectrum[k] - e0.spectrum[k]).norm(), 1e-14);
}

TEST(Averaging, Errors)
{
    EXPECT_THROW(average_estimates(std::vector<ChannelEstimate>{}), config_error);
    const auto a = noiseless_estimate(ChannelSpectrum::identity(grid(64), 2), generate_training_set(2, 64, 0, 1));
    const auto b = noiseless_estimate(ChannelSpectrum::identity(grid(64), 1), generate_training_set(1, 64, 0, 1));
    std::vector<ChannelEstimate> mixed{a, b};
    EXPECT_THROW(average_estimates(mixed), config_error);
}

TEST(Averaging, EightEstimatesReduceErrorEightfold)
{
    const FrequencyGrid g = grid(256);
    const auto ts = generate_training_set(2, 256, 0, 4);
    const auto h = ChannelSpectrum::identity(g, 2);
    double single = 0.0, eight = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t)
    {
        std::vector<ChannelEstimate> es;
        for (int r = 0; r < 8; ++r)
            es.push_back(ls_estimate(add_noise(ts_frame(ts), 0.01, derive_seed(t, r)), ts, g));
        single += pilot_error_power(es.front(), h);
        eight += pilot_error_power(average_estimates(es), h);
    }
    EXPECT_NEAR(eight / single, 1.0 / 8.0, 0.3 / 8.0);
}

TEST(Averaging, VarianceLawOverManyTrials)
{
    const FrequencyGrid g = grid(64);
    const auto ts = generate_training_set(2, 64, 0, 4);
    const auto h = ChannelSpectrum::identity(g, 2);
    std::vector<double> mean_err;
    for (std::size_t n : {1u, 2u, 4u, 8u})
    {
        double acc = 0.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t)
        {
            std::vector<ChannelEstimate> es;
            for (std::size_t r = 0; r < n; ++r)
                es.push_back(ls_estimate(add_noise(ts_frame(ts), 0.05, derive_seed(77, t, r)), ts, g));
            acc += pilot_error_power(average_estimates(es), h) / trials;
        }
        mean_err.push_back(acc * static_cast<double>(n));
    }
    for (double e : mean_err)
        EXPECT_NEAR(e / mean_err.front(), 1.0, 0.3);
}

TEST(Estimation, ProvenanceCompleteAfterInterpolation)
{
    const FrequencyGrid g = grid(4096);
    const auto ts = generate_training_set(12, 4096, 0, 1);
    const auto h = build_fiber_channel(FiberSpec{}, g, 1);
    const auto full = interpolate_extrapolate(noiseless_estimate(h, ts));
    EXPECT_TRUE(full.complete());
    for (auto p : full.provenance)
        EXPECT_NE(p, Provenance::unmeasured);
}
