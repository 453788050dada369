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

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmimo
{
    using Complex = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using RVector = Eigen::VectorXd;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr Complex iu{0.0, 1.0}; // imaginary unit

    // Error categories map onto CLI exit codes: config errors -> 1, numerical failures -> 2.
    class config_error : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    class numerical_error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

    // ---- Seeding ---------------------------------------------------------------------------

    // splitmix64 finalizer; used to derive independent sub-stream seeds from a master seed.
    inline std::uint64_t mix_seed(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Seed for sub-stream `stream`, item `index` of a run with master seed `master`.
    /// Counter scheme: mix(mix(mix(master) ^ stream) ^ index).
    inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0)
    {
        return mix_seed(mix_seed(mix_seed(master) ^ stream) ^ index);
    }

    using Rng = std::mt19937_64;

    // Circular complex Gaussian sample with E|z|^2 = variance.
    inline Complex complex_gaussian(Rng &rng, double variance)
    {
        std::normal_distribution<double> n(0.0, 1.0);
        double s = std::sqrt(variance / 2.0);
        double re = n(rng);
        double im = n(rng);
        return {s * re, s * im};
    }

    // ---- FFT helpers -----------------------------------------------------------------------

    // Thin wrapper over Eigen's kissfft backend. fwd is unscaled, inv scales by 1/n.
    class Fft
    {
    public:
        std::vector<Complex> forward(const std::vector<Complex> &x)
        {
            std::vector<Complex> out;
            fft_.fwd(out, x);
            return out;
        }

        std::vector<Complex> inverse(const std::vector<Complex> &x)
        {
            std::vector<Complex> out;
            fft_.inv(out, x);
            return out;
        }

    private:
        Eigen::FFT<double> fft_;
    };

    // Spectra are stored in centred order: index n/2 is the carrier (zero offset), index 0
    // is the most negative frequency. These map between centred index and natural DFT index.
    inline std::size_t centred_to_natural(std::size_t k, std::size_t n) { return (k + n / 2) % n; }
    inline std::size_t natural_to_centred(std::size_t k, std::size_t n) { return (k + n - n / 2) % n; }

    inline double frobenius_sq(const CMatrix &m) { return m.squaredNorm(); }

    /// Condition number from singular values (inf for singular input).
    inline double condition_number(const CMatrix &m)
    {
        Eigen::JacobiSVD<CMatrix> svd(m);
        const auto &s = svd.singularValues();
        if (s.size() == 0)
            return 0.0;
        double lo = s(s.size() - 1);
        return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
    }

} // namespace pmimo
