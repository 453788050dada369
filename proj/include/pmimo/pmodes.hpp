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

#include "pmimo/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace pmimo
{
    // ---- Group-delay operator ----------------------------------------------------------------

    struct DerivativeOptions
    {
        int step = 1;                    // central-difference half-width, bins
        double max_condition = 1e8;      // cap on cond(H(anchor))
    };

    namespace detail
    {
        inline void check_anchor(const ChannelSpectrum &h, std::size_t anchor, const DerivativeOptions &opt)
        {
            if (opt.step < 1)
                throw config_error("group delay: derivative step must be >= 1");
            if (h.rows() != h.cols())
                throw config_error("group delay: spectrum must be square");
            if (anchor >= h.n_bins() || h.n_bins() <= static_cast<std::size_t>(opt.step))
                throw config_error("group delay: anchor bin " + std::to_string(anchor) + " outside a grid of " +
                                   std::to_string(h.n_bins()) + " bins");
        }

        // Central difference over +-step bins; one-sided at the band edges.
        inline CMatrix central_difference(const ChannelSpectrum &h, std::size_t anchor, int step)
        {
            const auto s = static_cast<std::size_t>(step);
            const std::size_t lo = anchor >= s ? anchor - s : anchor;
            const std::size_t hi = anchor + s < h.n_bins() ? anchor + s : anchor;
            return (h[hi] - h[lo]) / (static_cast<double>(hi - lo) * h.grid.omega_step());
        }

        inline void check_condition(const CMatrix &m, double cap, const char *what)
        {
            const double c = condition_number(m);
            if (!(c <= cap))
                throw numerical_error(std::string(what) + ": ill-conditioned matrix, condition number " +
                                      std::to_string(c));
        }
    } // namespace detail

    /**
     * @brief G = j (dH/domega) H^{-1} at the anchor bin, delays in samples.
     *
     * dH/domega is a central difference over +-step bins (one-sided at the band edges).
     * G acts on output-space vectors.
     */
    inline CMatrix group_delay_operator(const ChannelSpectrum &h, std::size_t anchor, const DerivativeOptions &opt = {})
    {
        detail::check_anchor(h, anchor, opt);
        detail::check_condition(h[anchor], opt.max_condition, "group_delay_operator");
        const CMatrix dh = detail::central_difference(h, anchor, opt.step);
        return iu * dh * h[anchor].inverse();
    }

    /// Input-space form j H^{-1} (dH/domega) = H^{-1} G H. Same eigenvalues as G; its
    /// eigenvectors are launch states whose output is frequency independent to first order.
    inline CMatrix input_group_delay_operator(const ChannelSpectrum &h, std::size_t anchor,
                                              const DerivativeOptions &opt = {})
    {
        detail::check_anchor(h, anchor, opt);
        detail::check_condition(h[anchor], opt.max_condition, "input_group_delay_operator");
        const CMatrix dh = detail::central_difference(h, anchor, opt.step);
        return iu * h[anchor].inverse() * dh;
    }

    // ---- Principal modes ---------------------------------------------------------------------

    struct EigenPMs
    {
        CMatrix u;                 // orthonormalised eigenvectors, ascending delay
        RVector group_delays;      // real parts of eigenvalues, ascending
        CVector eigenvalues;       // same order
        double eigen_residual = 0; // ||G E - E diag(lambda)||_F / ||G||_F before orthonormalisation
        double polar_deviation = 0;// ||E - u||_F, non-normality diagnostic
    };

    /// Closest unitary matrix (polar factor) W Q^H of E = W S Q^H.
    inline CMatrix polar_unitary(const CMatrix &e)
    {
        Eigen::JacobiSVD<CMatrix> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
        return svd.matrixU() * svd.matrixV().adjoint();
    }

    /**
     * @brief Eigendecomposition of a group-delay operator.
     *
     * Delays are eigenvalue real parts, sorted ascending. Eigenvalues whose real parts agree
     * within 1e-12 relative are ordered by imaginary part, then by solver index. The
     * eigenvector matrix is replaced by its polar factor so the mux is unitary.
     */
    inline EigenPMs input_pms(const CMatrix &g)
    {
        if (!g.allFinite())
            throw numerical_error("input_pms: non-finite operator");
        Eigen::ComplexEigenSolver<CMatrix> es(g, true);
        if (es.info() != Eigen::Success)
            throw numerical_error("input_pms: eigensolver failed");
        const CVector lam = es.eigenvalues();
        const CMatrix vec = es.eigenvectors();
        const Eigen::Index m = lam.size();

        std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return lam(a).real() < lam(b).real(); });
        const double tol = 1e-12 * (1.0 + lam.cwiseAbs().maxCoeff());
        for (std::size_t a = 0; a < order.size();)
        {
            std::size_t b = a + 1;
            while (b < order.size() && lam(order[b]).real() - lam(order[b - 1]).real() <= tol)
                ++b;
            std::sort(order.begin() + static_cast<long>(a), order.begin() + static_cast<long>(b),
                      [&](Eigen::Index x, Eigen::Index y) {
                          if (lam(x).imag() != lam(y).imag())
                              return lam(x).imag() < lam(y).imag();
                          return x < y;
                      });
            a = b;
        }

        EigenPMs out;
        CMatrix e(m, m);
        out.eigenvalues.resize(m);
        out.group_delays.resize(m);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            const auto src = order[static_cast<std::size_t>(i)];
            e.col(i) = vec.col(src).normalized();
            out.eigenvalues(i) = lam(src);
            out.group_delays(i) = lam(src).real();
        }
        const double gn = g.norm();
        out.eigen_residual = gn > 0.0 ? (g * e - e * out.eigenvalues.asDiagonal()).norm() / gn : 0.0;
        out.u = polar_unitary(e);
        out.polar_deviation = (e - out.u).norm();
        return out;
    }

    /// v_i = H u_i / ||H u_i||. Phases of the diagonal of v^H H u are absorbed into v.
    inline CMatrix output_pms(const CMatrix &h_anchor, const CMatrix &u)
    {
        CMatrix v = h_anchor * u;
        for (Eigen::Index i = 0; i < v.cols(); ++i)
        {
            const double nrm = v.col(i).norm();
            if (!(nrm > 1e-300))
                throw numerical_error("output_pms: H is singular along input PM " + std::to_string(i));
            v.col(i) /= nrm;
        }
        return v;
    }

    /**
     * @brief Mode gains in dB: 10 log10 of the eigenvalues of D = H H^H.
     *
     * Without v the gains are returned ascending. With v (output PMs, one per column) each
     * column is paired greedily with the D-eigenvector it overlaps most, largest overlaps first.
     */
    inline RVector mode_gains(const CMatrix &h_anchor, const std::optional<CMatrix> &v = std::nullopt)
    {
        const CMatrix d = h_anchor * h_anchor.adjoint();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(d);
        if (es.info() != Eigen::Success)
            throw numerical_error("mode_gains: eigensolver failed");
        const RVector ev = es.eigenvalues().cwiseMax(1e-300);
        const Eigen::Index m = ev.size();
        auto db = [](double x) { return 10.0 * std::log10(x); };
        if (!v)
        {
            RVector out(m);
            for (Eigen::Index i = 0; i < m; ++i)
                out(i) = db(ev(i));
            return out;
        }

        const Eigen::Index cols = v->cols();
        const Eigen::MatrixXd overlap = (v->adjoint() * es.eigenvectors()).cwiseAbs2();
        RVector out = RVector::Constant(cols, 0.0);
        std::vector<bool> col_used(static_cast<std::size_t>(cols), false), eig_used(static_cast<std::size_t>(m), false);
        for (Eigen::Index round = 0; round < std::min(cols, m); ++round)
        {
            double best = -1.0;
            Eigen::Index bc = 0, be = 0;
            for (Eigen::Index c = 0; c < cols; ++c)
                for (Eigen::Index e = 0; e < m; ++e)
                    if (!col_used[static_cast<std::size_t>(c)] && !eig_used[static_cast<std::size_t>(e)] &&
                        overlap(c, e) > best)
                    {
                        best = overlap(c, e);
                        bc = c;
                        be = e;
                    }
            col_used[static_cast<std::size_t>(bc)] = true;
            eig_used[static_cast<std::size_t>(be)] = true;
            out(bc) = db(ev(be));
        }
        return out;
    }

    /**
     * @brief Zero-forcing refinement of the output PMs: v* = v R^{-H}, R = v^H H u.
     *
     * Then v*^H H u = I exactly at the anchor. Columns of v* are not orthonormal in general.
     */
    inline CMatrix refine_zero_forcing(const CMatrix &h_anchor, const CMatrix &u, const CMatrix &v,
                                       double max_condition = 1e8)
    {
        const CMatrix r = v.adjoint() * h_anchor * u;
        detail::check_condition(r, max_condition, "refine_zero_forcing (residual)");
        return v * r.inverse().adjoint();
    }

    enum class PMOperator
    {
        input,   // eigenvectors of j H^-1 dH (launch-side operator)
        output,  // eigenvectors of G = j dH H^-1 used directly as launch states; default
    };

    enum class SubsetPolicy
    {
        min_spread,          // contiguous delay-sorted window of minimal delay range
        smallest_abs_delay,  // the t PMs with smallest |delay|
    };

    struct PMOptions
    {
        DerivativeOptions derivative{};
        PMOperator op = PMOperator::output;
        std::size_t tributaries = 0;  // 0: all modes
        SubsetPolicy subset = SubsetPolicy::min_spread;
        bool refined = false;
    };

    /// Input/output PMs with delays (samples) and gains (dB). Columns sorted by ascending delay.
    struct PMDecomposition
    {
        CMatrix u;
        CMatrix v;
        RVector group_delays;
        RVector gains;
        std::size_t anchor_bin = 0;
        bool refined = false;
        double eigen_residual = 0.0;
        double polar_deviation = 0.0;

        Eigen::Index tributaries() const { return u.cols(); }
    };

    /**
     * @brief Selects t of the delay-sorted PMs.
     *
     * min_spread: the contiguous window minimising max - min delay; ties go to the smaller mean
     * |delay|, then to the earlier window. smallest_abs_delay: the t smallest |delay|, kept in
     * ascending delay order.
     */
    inline PMDecomposition select_tributary_subset(const PMDecomposition &pm, std::size_t t,
                                                   SubsetPolicy policy = SubsetPolicy::min_spread)
    {
        const auto m = static_cast<std::size_t>(pm.u.cols());
        if (t < 1 || t > m)
            throw config_error("select_tributary_subset: t must be in [1, " + std::to_string(m) + "]");
        std::vector<Eigen::Index> pick;
        if (policy == SubsetPolicy::min_spread)
        {
            std::size_t best = 0;
            double best_range = 0.0, best_mean = 0.0;
            for (std::size_t s = 0; s + t <= m; ++s)
            {
                const double range = pm.group_delays(static_cast<Eigen::Index>(s + t - 1)) -
                                     pm.group_delays(static_cast<Eigen::Index>(s));
                double mean = 0.0;
                for (std::size_t i = s; i < s + t; ++i)
                    mean += std::abs(pm.group_delays(static_cast<Eigen::Index>(i)));
                mean /= static_cast<double>(t);
                if (s == 0 || range < best_range || (range == best_range && mean < best_mean))
                {
                    best = s;
                    best_range = range;
                    best_mean = mean;
                }
            }
            for (std::size_t i = best; i < best + t; ++i)
                pick.push_back(static_cast<Eigen::Index>(i));
        }
        else
        {
            std::vector<Eigen::Index> idx(m);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
                return std::abs(pm.group_delays(a)) < std::abs(pm.group_delays(b));
            });
            pick.assign(idx.begin(), idx.begin() + static_cast<long>(t));
            std::sort(pick.begin(), pick.end());
        }

        PMDecomposition out = pm;
        const auto tt = static_cast<Eigen::Index>(t);
        out.u.resize(pm.u.rows(), tt);
        out.v.resize(pm.v.rows(), tt);
        out.group_delays.resize(tt);
        out.gains.resize(tt);
        for (Eigen::Index i = 0; i < tt; ++i)
        {
            const auto src = pick[static_cast<std::size_t>(i)];
            out.u.col(i) = pm.u.col(src);
            out.v.col(i) = pm.v.col(src);
            out.group_delays(i) = pm.group_delays(src);
            out.gains(i) = pm.gains(src);
        }
        return out;
    }

    /**
     * @brief PM decomposition of a spectrum at one anchor bin.
     *
     * Pipeline: delay operator -> eigen-PMs (polar-orthonormalised) -> output PMs -> gains ->
     * optional subset selection -> optional zero-forcing refinement on the selected subset.
     */
    inline PMDecomposition principal_modes(const ChannelSpectrum &h, std::size_t anchor, const PMOptions &opt = {})
    {
        const CMatrix g = opt.op == PMOperator::input ? input_group_delay_operator(h, anchor, opt.derivative)
                                                      : group_delay_operator(h, anchor, opt.derivative);
        EigenPMs e = input_pms(g);
        PMDecomposition pm;
        pm.anchor_bin = anchor;
        pm.u = std::move(e.u);
        pm.group_delays = std::move(e.group_delays);
        pm.eigen_residual = e.eigen_residual;
        pm.polar_deviation = e.polar_deviation;
        pm.v = output_pms(h[anchor], pm.u);
        pm.gains = mode_gains(h[anchor], pm.v);
        if (opt.tributaries != 0 && opt.tributaries != static_cast<std::size_t>(pm.u.cols()))
            pm = select_tributary_subset(pm, opt.tributaries, opt.subset);
        if (opt.refined)
        {
            pm.v = refine_zero_forcing(h[anchor], pm.u, pm.v, opt.derivative.max_condition);
            pm.refined = true;
        }
        return pm;
    }

    // ---- Frequency blocks ----------------------------------------------------------------------

    struct BlockedPMSet
    {
        std::size_t n_blocks = 0;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end) bins
        std::vector<PMDecomposition> sets;

        std::size_t block_of(std::size_t k) const
        {
            for (std::size_t b = 0; b < ranges.size(); ++b)
                if (k >= ranges[b].first && k < ranges[b].second)
                    return b;
            throw config_error("BlockedPMSet: bin outside every block");
        }
    };

    /// Contiguous blocks of floor(n / n_blocks) bins; the last block absorbs the remainder.
    inline std::vector<std::pair<std::size_t, std::size_t>> block_ranges(std::size_t n_bins, std::size_t n_blocks)
    {
        if (n_blocks < 1 || n_blocks > n_bins)
            throw config_error("block_partition: n_blocks must be in [1, " + std::to_string(n_bins) + "]");
        const std::size_t w = n_bins / n_blocks;
        std::vector<std::pair<std::size_t, std::size_t>> r;
        for (std::size_t b = 0; b < n_blocks; ++b)
            r.emplace_back(b * w, b + 1 == n_blocks ? n_bins : (b + 1) * w);
        return r;
    }

    /// Anchor of a block: its centre bin.
    inline std::size_t block_anchor(std::pair<std::size_t, std::size_t> range)
    {
        return (range.first + range.second) / 2;
    }

    inline BlockedPMSet block_partition_pms(const ChannelSpectrum &h, std::size_t n_blocks, const PMOptions &opt = {})
    {
        BlockedPMSet set;
        set.n_blocks = n_blocks;
        set.ranges = block_ranges(h.n_bins(), n_blocks);
        set.sets.reserve(n_blocks);
        for (const auto &r : set.ranges)
            set.sets.push_back(principal_modes(h, block_anchor(r), opt));
        return set;
    }

    /**
     * @brief End-to-end channel seen through the PM mux/demux: R_k = S_k V_b^H H_k U_b.
     *
     * b is the block containing bin k. With deskew, S_k = diag(exp(j (w_k - w_anchor) tau_i))
     * removes each tributary's PM group delay (per-tributary receiver timing alignment);
     * otherwise S_k = I.
     */
    inline ChannelSpectrum residual_channel(const ChannelSpectrum &h, const BlockedPMSet &pms, bool deskew = true)
    {
        ChannelSpectrum out(h.grid, std::vector<CMatrix>(h.n_bins()));
        for (std::size_t b = 0; b < pms.ranges.size(); ++b)
        {
            const auto &pm = pms.sets[b];
            const CMatrix vh = pm.v.adjoint();
            const double wa = h.grid.omega(pm.anchor_bin);
            for (std::size_t k = pms.ranges[b].first; k < pms.ranges[b].second; ++k)
            {
                CMatrix r = vh * h[k] * pm.u;
                if (deskew)
                {
                    const double dw = h.grid.omega(k) - wa;
                    for (Eigen::Index i = 0; i < r.rows(); ++i)
                        r.row(i) *= std::exp(iu * dw * pm.group_delays(i));
                }
                out[k] = std::move(r);
            }
        }
        return out;
    }

    inline ChannelSpectrum residual_channel(const ChannelSpectrum &h, const PMDecomposition &pm, bool deskew = true)
    {
        BlockedPMSet one;
        one.n_blocks = 1;
        one.ranges = {{0, h.n_bins()}};
        one.sets = {pm};
        return residual_channel(h, one, deskew);
    }

    // ---- Schmidt (singular) modes -----------------------------------------------------------

    /// Per-bin SVD H_k = W_k diag(s_k) Q_k^H, singular values descending.
    struct SchmidtModes
    {
        std::vector<CMatrix> left;   // W_k
        std::vector<RVector> singular_values;
        std::vector<CMatrix> right;  // Q_k
    };

    /**
     * @brief Per-bin SVD with a fixed phase convention.
     *
     * Each right singular vector is rotated so its largest-magnitude element is real positive;
     * the paired left vector gets the same rotation, leaving W diag(s) Q^H unchanged.
     */
    inline SchmidtModes schmidt_modes(const ChannelSpectrum &h)
    {
        SchmidtModes sm;
        const std::size_t n = h.n_bins();
        sm.left.resize(n);
        sm.right.resize(n);
        sm.singular_values.resize(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            Eigen::JacobiSVD<CMatrix> svd(h[k], Eigen::ComputeFullU | Eigen::ComputeFullV);
            if (svd.info() != Eigen::Success)
                throw numerical_error("schmidt_modes: SVD failed at bin " + std::to_string(k));
            CMatrix w = svd.matrixU();
            CMatrix q = svd.matrixV();
            for (Eigen::Index c = 0; c < q.cols(); ++c)
            {
                Eigen::Index at = 0;
                q.col(c).cwiseAbs().maxCoeff(&at);
                const Complex z = q(at, c);
                if (std::abs(z) > 0.0)
                {
                    const Complex rot = std::conj(z) / std::abs(z);
                    q.col(c) *= rot;
                    if (c < w.cols())
                        w.col(c) *= rot;
                }
            }
            sm.left[k] = std::move(w);
            sm.right[k] = std::move(q);
            sm.singular_values[k] = svd.singularValues();
        }
        return sm;
    }

    /// W_k^H H_k Q_k restricted to the leading t modes (t = 0: all).
    inline ChannelSpectrum schmidt_residual(const ChannelSpectrum &h, const SchmidtModes &sm, std::size_t t = 0)
    {
        ChannelSpectrum out(h.grid, std::vector<CMatrix>(h.n_bins()));
        for (std::size_t k = 0; k < h.n_bins(); ++k)
        {
            const Eigen::Index tt = t == 0 ? std::min(sm.left[k].cols(), sm.right[k].cols()) : static_cast<Eigen::Index>(t);
            out[k] = sm.left[k].leftCols(tt).adjoint() * h[k] * sm.right[k].leftCols(tt);
        }
        return out;
    }

} // namespace pmimo
