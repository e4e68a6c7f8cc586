// Copyright 2026 The lqgmfg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// One-dimensional Wasserstein distances.
//
// On the line the monotone (quantile) coupling is optimal, so
//   W_p(mu, nu)^p = int_0^1 |F_mu^{-1}(u) - F_nu^{-1}(u)|^p du.
// Empirical-vs-empirical distances are evaluated exactly on the merged
// quantile partition. Against a continuous law the integral is split at the
// order-statistic breakpoints, at the crossing of the two quantile functions
// and dyadically in both tails, then Gauss-Legendre is applied per piece.

#ifndef LQGMFG_TRANSPORT_H_
#define LQGMFG_TRANSPORT_H_

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace lqgmfg {

// Uniform atomic measure (1/n) sum delta_{x_i}, stored sorted.
class EmpiricalMeasure1D {
 public:
  // Sorts. Throws DomainError on empty or non-finite input.
  explicit EmpiricalMeasure1D(std::vector<double> samples);

  int size() const { return static_cast<int>(x_.size()); }
  std::span<const double> sorted() const { return x_; }
  double operator[](int i) const { return x_[i]; }

  // Left-continuous inverse CDF: x_(ceil(n u) - 1).
  double Quantile(double u) const;
  double Cdf(double x) const;
  double Mean() const;

  EmpiricalMeasure1D Shifted(double c) const;
  // Pushforward f_* rho: applies f to every atom.
  EmpiricalMeasure1D Mapped(const std::function<double(double)>& f) const;

 private:
  std::vector<double> x_;
};

class Law1D {
 public:
  static Law1D Gaussian(double mean, double var);
  static Law1D Empirical(EmpiricalMeasure1D sample);
  static Law1D Shifted(Law1D base, double offset);

  double Quantile(double u) const;
  double Cdf(double x) const;

  // Net shift applied on top of the innermost law.
  double offset() const { return offset_; }
  bool is_gaussian() const { return kind_ == Kind::kGaussian; }
  // Valid when is_gaussian(); include the net shift.
  double mean() const { return mean_ + offset_; }
  double sd() const { return sd_; }
  // Valid when !is_gaussian(); without the net shift.
  const EmpiricalMeasure1D& sample() const { return *sample_; }

 private:
  enum class Kind { kGaussian, kEmpirical };
  Law1D() = default;

  Kind kind_ = Kind::kGaussian;
  double mean_ = 0.0;
  double sd_ = 1.0;
  std::shared_ptr<const EmpiricalMeasure1D> sample_;
  double offset_ = 0.0;
};

// W_p^p and W_p between empirical measures. Requires 1 <= p <= 2.
double WpPowEmpirical(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b,
                      double p);
double WpEmpirical(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b,
                   double p);

inline constexpr int kDefaultQuadPoints = 8;
inline constexpr double kQuantileClip = 1e-9;

// W_p^p and W_p between an empirical measure and a law. Supported rule sizes:
// 4, 8, 16, 32. Empirical laws are handled exactly on the merged partition.
double WpPowEmpiricalVsLaw(const EmpiricalMeasure1D& a, const Law1D& law,
                           double p, int quad_points = kDefaultQuadPoints);
double WpEmpiricalVsLaw(const EmpiricalMeasure1D& a, const Law1D& law,
                        double p, int quad_points = kDefaultQuadPoints);

// W_p between N(m1, s1^2) and N(m2, s2^2): (E|m1 - m2 + (s1 - s2) Z|^p)^{1/p}.
double WpGaussian(double m1, double s1, double m2, double s2, double p);

inline constexpr int kMaxCouplingOracleSize = 8;

// Minimum over all n! pairings of two equal-size atom lists (any order).
double CouplingOracle(std::span<const double> a, std::span<const double> b,
                      double p);

struct PushforwardBound {
  double lhs = 0.0;  // W_p(f_* a, f_* b)
  double rhs = 0.0;  // lipschitz * W_p(a, b)
};

PushforwardBound PushforwardCheck(const EmpiricalMeasure1D& a,
                                  const EmpiricalMeasure1D& b,
                                  const std::function<double(double)>& f,
                                  double lipschitz, double p);

}  // namespace lqgmfg

#endif  // LQGMFG_TRANSPORT_H_
