// Copyright 2026 The nova authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

#include "nova/common.hpp"
#include "nova/rng.hpp"

namespace nova {

struct GpFitOptions {
    int restarts = 2;
    int iterations = 120;
    double learning_rate = 0.08;
    // Half-Cauchy scale on inverse squared lengthscales. Small values favor
    // long lengthscales, i.e. few relevant axes.
    double sparsity_scale = 0.1;
    std::uint64_t seed = 0;
};

/// Gaussian process with a squared-exponential ARD kernel, fit by MAP over
/// log lengthscales, signal, and noise. A heavy-tailed prior on inverse
/// squared lengthscales pushes irrelevant dimensions flat, which is what
/// makes the surrogate usable in the high-dimensional theta space.
class ArdGp {
public:
    struct Prediction {
        double mean = 0.0;
        double var = 0.0;
    };

    static ArdGp fit(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                     const GpFitOptions& opts = {}) {
        if (xs.size() < 2) throw ContractError("GP fit needs at least 2 observations");
        if (xs.size() != ys.size()) throw ContractError("GP fit: X/y size mismatch");
        const std::size_t n = xs.size();
        const std::size_t d = xs[0].size();
        if (d == 0) throw ContractError("GP fit: zero-dimensional inputs");

        Eigen::MatrixXd X(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j)) = xs[i][j];

        bool any_distinct = false;
        for (std::size_t i = 1; i < n && !any_distinct; ++i)
            any_distinct = (X.row(static_cast<Eigen::Index>(i)) - X.row(0)).norm() > 0.0;
        if (!any_distinct) throw ContractError("degenerate design: all inputs identical");

        ArdGp gp;
        gp.X_ = std::move(X);
        gp.y_mean_ = 0.0;
        for (double y : ys) gp.y_mean_ += y;
        gp.y_mean_ /= static_cast<double>(n);
        double var = 0.0;
        for (double y : ys) var += (y - gp.y_mean_) * (y - gp.y_mean_);
        gp.y_scale_ = std::sqrt(var / static_cast<double>(n));
        if (gp.y_scale_ < 1e-12) gp.y_scale_ = 1.0;
        gp.y_.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            gp.y_(static_cast<Eigen::Index>(i)) = (ys[i] - gp.y_mean_) / gp.y_scale_;

        gp.optimize_hyperparameters(opts);
        gp.finalize();
        return gp;
    }

    Prediction predict(const std::vector<double>& x) const {
        const Eigen::Index n = X_.rows();
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel_row(x, i);
        Prediction p;
        p.mean = y_mean_ + y_scale_ * k.dot(alpha_);
        Eigen::VectorXd v = llt_.matrixL().solve(k);
        double sf2 = std::exp(2.0 * log_sf_);
        p.var = std::max(0.0, sf2 - v.squaredNorm()) * y_scale_ * y_scale_;
        return p;
    }

    std::vector<double> lengthscales() const {
        std::vector<double> out(log_ell_.size());
        for (Eigen::Index i = 0; i < log_ell_.size(); ++i) out[static_cast<std::size_t>(i)] =
            std::exp(log_ell_(i));
        return out;
    }

    double noise_sd() const { return std::exp(log_sn_) * y_scale_; }
    std::size_t dims() const { return static_cast<std::size_t>(log_ell_.size()); }

private:
    double kernel_row(const std::vector<double>& x, Eigen::Index i) const {
        double q = 0.0;
        for (Eigen::Index j = 0; j < log_ell_.size(); ++j) {
            double diff = x[static_cast<std::size_t>(j)] - X_(i, j);
            double ell = std::exp(log_ell_(j));
            q += diff * diff / (ell * ell);
        }
        return std::exp(2.0 * log_sf_) * std::exp(-0.5 * q);
    }

    Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& log_ell, double log_sf) const {
        const Eigen::Index n = X_.rows();
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            K(i, i) = std::exp(2.0 * log_sf);
            for (Eigen::Index j = i + 1; j < n; ++j) {
                double q = 0.0;
                for (Eigen::Index dd = 0; dd < log_ell.size(); ++dd) {
                    double diff = X_(i, dd) - X_(j, dd);
                    double ell = std::exp(log_ell(dd));
                    q += diff * diff / (ell * ell);
                }
                K(i, j) = K(j, i) = std::exp(2.0 * log_sf) * std::exp(-0.5 * q);
            }
        }
        return K;
    }

    static Eigen::LLT<Eigen::MatrixXd> robust_llt(Eigen::MatrixXd K) {
        double jitter = 1e-10;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(K +
                                            jitter * Eigen::MatrixXd::Identity(K.rows(), K.cols()));
            if (llt.info() == Eigen::Success) return llt;
            jitter *= 10.0;
        }
        throw Error("GP covariance not positive definite even with jitter");
    }

    /// Log posterior (marginal likelihood + priors) and its gradient in the
    /// packed parameter vector [log_ell..., log_sf, log_sn].
    double log_posterior(const Eigen::VectorXd& params, Eigen::VectorXd* grad,
                         double sparsity_scale) const {
        const Eigen::Index n = X_.rows();
        const Eigen::Index d = params.size() - 2;
        Eigen::VectorXd log_ell = params.head(d);
        double log_sf = params(d);
        double log_sn = params(d + 1);
        double sn2 = std::exp(2.0 * log_sn);

        Eigen::MatrixXd Kse = kernel_matrix(log_ell, log_sf);
        Eigen::MatrixXd K = Kse + sn2 * Eigen::MatrixXd::Identity(n, n);
        auto llt = robust_llt(K);
        Eigen::VectorXd alpha = llt.solve(y_);

        double lml = -0.5 * y_.dot(alpha);
        for (Eigen::Index i = 0; i < n; ++i) lml -= std::log(llt.matrixL()(i, i));
        lml -= 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

        // Priors: half-Cauchy(tau) on rho = ell^-2 (with the log Jacobian of
        // the map u -> rho), weak log-normals on signal and noise.
        double lp = 0.0;
        const double tau = sparsity_scale;
        for (Eigen::Index j = 0; j < d; ++j) {
            double rho = std::exp(-2.0 * log_ell(j));
            lp += -std::log(1.0 + (rho / tau) * (rho / tau)) + std::log(rho);
        }
        lp += -0.5 * (log_sf / 2.0) * (log_sf / 2.0);
        const double noise_center = std::log(0.1);
        lp += -0.5 * ((log_sn - noise_center) / 2.0) * ((log_sn - noise_center) / 2.0);

        if (grad) {
            grad->setZero(params.size());
            Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
            Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
            for (Eigen::Index j = 0; j < d; ++j) {
                double ell2 = std::exp(2.0 * log_ell(j));
                double g = 0.0;
                for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index b = 0; b < n; ++b) {
                        double diff = X_(a, j) - X_(b, j);
                        g += W(a, b) * Kse(a, b) * diff * diff / ell2;
                    }
                (*grad)(j) = 0.5 * g;
                double rho = std::exp(-2.0 * log_ell(j));
                double dlp_drho = -(2.0 * rho / (tau * tau)) / (1.0 + (rho / tau) * (rho / tau)) +
                                  1.0 / rho;
                (*grad)(j) += dlp_drho * (-2.0 * rho);
            }
            (*grad)(d) = (W.array() * Kse.array()).sum() - log_sf / 4.0;
            (*grad)(d + 1) = sn2 * W.trace() - (log_sn - noise_center) / 4.0;
        }
        return lml + lp;
    }

    void optimize_hyperparameters(const GpFitOptions& opts) {
        const Eigen::Index d = X_.cols();
        Rng rng(derive_seed(opts.seed, "gp-fit"));
        Eigen::VectorXd best_params;
        double best_value = -std::numeric_limits<double>::infinity();

        for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
            Eigen::VectorXd params(d + 2);
            for (Eigen::Index j = 0; j < d; ++j)
                params(j) = restart == 0 ? 0.0 : 0.7 * rng.normal();
            params(d) = restart == 0 ? 0.0 : 0.3 * rng.normal();
            params(d + 1) = std::log(0.1) + (restart == 0 ? 0.0 : 0.5 * rng.normal());

            // Adam ascent on the log posterior.
            Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 2);
            Eigen::VectorXd v = Eigen::VectorXd::Zero(d + 2);
            Eigen::VectorXd grad(d + 2);
            double value = -std::numeric_limits<double>::infinity();
            for (int it = 1; it <= opts.iterations; ++it) {
                value = log_posterior(params, &grad, opts.sparsity_scale);
                m = 0.9 * m + 0.1 * grad;
                v = 0.999 * v.array() + 0.001 * grad.array().square();
                double mc = 1.0 - std::pow(0.9, it);
                double vc = 1.0 - std::pow(0.999, it);
                for (Eigen::Index j = 0; j < d + 2; ++j) {
                    double step = opts.learning_rate * (m(j) / mc) /
                                  (std::sqrt(v(j) / vc) + 1e-8);
                    params(j) += step;
                }
                for (Eigen::Index j = 0; j < d; ++j)
                    params(j) = std::clamp(params(j), std::log(1e-3), std::log(1e3));
                params(d) = std::clamp(params(d), std::log(1e-3), std::log(1e3));
                params(d + 1) = std::clamp(params(d + 1), std::log(1e-4), std::log(10.0));
            }
            value = log_posterior(params, nullptr, opts.sparsity_scale);
            if (value > best_value) {
                best_value = value;
                best_params = params;
            }
        }
        log_ell_ = best_params.head(d);
        log_sf_ = best_params(d);
        log_sn_ = best_params(d + 1);
    }

    void finalize() {
        const Eigen::Index n = X_.rows();
        double sn2 = std::exp(2.0 * log_sn_);
        Eigen::MatrixXd K = kernel_matrix(log_ell_, log_sf_) +
                            sn2 * Eigen::MatrixXd::Identity(n, n);
        llt_ = robust_llt(K);
        alpha_ = llt_.solve(y_);
    }

    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    Eigen::VectorXd log_ell_;
    double log_sf_ = 0.0;
    double log_sn_ = std::log(0.1);
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

}  // namespace nova
