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


#include "lqgmfg/transport.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lqgmfg/errors.h"

namespace lqgmfg {
namespace {

const boost::math::normal kStdNormal;

double Phi(double z) { return boost::math::cdf(kStdNormal, z); }
double PhiUpper(double z) {
  return boost::math::cdf(boost::math::complement(kStdNormal, z));
}
double PhiInv(double u) { return boost::math::quantile(kStdNormal, u); }

void CheckOrder(double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw ConfigError("p", "1<=p<=2 required");
}

double PowAbs(double x, double p) {
  if (p == 1.0) return std::abs(x);
  if (p == 2.0) return x * x;
  return std::pow(std::abs(x), p);
}

double Root(double v, double p) {
  if (p == 1.0) return v;
  if (p == 2.0) return std::sqrt(v);
  return std::pow(v, 1.0 / p);
}

// Exact int_0^1 |F_a^{-1} - F_b^{-1} - offset|^p on the merged partition.
double MergedPow(std::span<const double> a, std::span<const double> b,
                 double offset, double p) {
  const std::int64_t n = a.size(), m = b.size();
  if (n == m) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += PowAbs(a[i] - b[i] - offset, p);
    return s / n;
  }
  // Positions in units of 1/(n m); atom i of a covers [i m, (i+1) m).
  double s = 0.0;
  std::int64_t i = 0, j = 0, pos = 0;
  while (i < n && j < m) {
    const std::int64_t end_a = (i + 1) * m, end_b = (j + 1) * n;
    const std::int64_t end = std::min(end_a, end_b);
    s += static_cast<double>(end - pos) * PowAbs(a[i] - b[j] - offset, p);
    pos = end;
    if (end == end_a) ++i;
    if (end == end_b) ++j;
  }
  return s / (static_cast<double>(n) * static_cast<double>(m));
}

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

template <unsigned P>
Rule MakeRule() {
  using G = boost::math::quadrature::gauss<double, P>;
  Rule r;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      r.nodes.push_back(0.0);
      r.weights.push_back(w[i]);
      continue;
    }
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

const Rule& GetRule(int points) {
  static const Rule r4 = MakeRule<4>(), r8 = MakeRule<8>(),
                    r16 = MakeRule<16>(), r32 = MakeRule<32>();
  switch (points) {
    case 4: return r4;
    case 8: return r8;
    case 16: return r16;
    case 32: return r32;
    default:
      throw ConfigError("quad_points_per_interval", "must be 4, 8, 16 or 32");
  }
}

// Dyadic tail breakpoints 2^-k and 1 - 2^-k: every piece is then no longer
// than its distance to the singular ends of the quantile function.
const std::vector<double>& TailBreaks() {
  static const std::vector<double> breaks = [] {
    std::vector<double> b;
    for (int e = 30; e >= 1; --e) b.push_back(std::ldexp(1.0, -e));
    for (int e = 2; e <= 30; ++e) b.push_back(1.0 - std::ldexp(1.0, -e));
    return b;
  }();
  return breaks;
}

// Quadrature pieces of [clip, 1 - clip] cut at i/n and at the tail breaks,
// with standard normal quantiles at the nodes. Depends only on (n, rule).
struct Partition {
  std::vector<double> lo, hi;          // piece bounds
  std::vector<int> first_piece;        // per interval, size n + 1
  std::vector<double> z, w;            // per node, w includes piece length
};

std::vector<double> SplitBounds(double lo, double hi) {
  std::vector<double> cuts{lo};
  for (double b : TailBreaks()) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  return cuts;
}

void AddNodes(double lo, double hi, const Rule& rule, std::vector<double>& z,
              std::vector<double>& w) {
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (size_t k = 0; k < rule.nodes.size(); ++k) {
    const double q = PhiInv(mid + half * rule.nodes[k]);
    if (!std::isfinite(q)) throw DomainError("non-finite quantile at node");
    z.push_back(q);
    w.push_back(half * rule.weights[k]);
  }
}

std::shared_ptr<const Partition> BuildPartition(int n, const Rule& rule) {
  auto part = std::make_shared<Partition>();
  part->first_piece.reserve(n + 1);
  for (int i = 0; i < n; ++i) {
    part->first_piece.push_back(static_cast<int>(part->lo.size()));
    const double lo = std::max(static_cast<double>(i) / n, kQuantileClip);
    const double hi =
        std::min(static_cast<double>(i + 1) / n, 1.0 - kQuantileClip);
    if (!(hi > lo)) continue;
    const auto cuts = SplitBounds(lo, hi);
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
      part->lo.push_back(cuts[c]);
      part->hi.push_back(cuts[c + 1]);
      AddNodes(cuts[c], cuts[c + 1], rule, part->z, part->w);
    }
  }
  part->first_piece.push_back(static_cast<int>(part->lo.size()));
  return part;
}

std::shared_ptr<const Partition> CachedPartition(int n, int points) {
  thread_local std::map<std::pair<int, int>, std::shared_ptr<const Partition>>
      cache;
  const auto key = std::make_pair(n, points);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() >= 64) cache.clear();
  auto part = BuildPartition(n, GetRule(points));
  cache.emplace(key, part);
  return part;
}

double GaussianPow(const EmpiricalMeasure1D& a, double m, double s, double p,
                   int points) {
  const int n = a.size();
  if (s == 0.0) {
    double acc = 0.0;
    for (double x : a.sorted()) acc += PowAbs(x - m, p);
    return acc / n;
  }
  const Rule& rule = GetRule(points);
  const auto part = CachedPartition(n, points);
  const size_t nodes = rule.nodes.size();
  std::vector<double> z, w;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double zi = (a[i] - m) / s;  // standardized atom
    const int first = part->first_piece[i], last = part->first_piece[i + 1];
    // The kink of |zi - z|^p sits at u* = Phi(zi); only p = 2 is smooth.
    const double cross = p == 2.0 ? -1.0 : Phi(zi);
    double acc = 0.0;
    for (int piece = first; piece < last; ++piece) {
      const double lo = part->lo[piece], hi = part->hi[piece];
      if (cross > lo && cross < hi) {
        z.clear();
        w.clear();
        AddNodes(lo, cross, rule, z, w);
        AddNodes(cross, hi, rule, z, w);
        for (size_t k = 0; k < z.size(); ++k) acc += w[k] * PowAbs(zi - z[k], p);
      } else {
        const size_t base = piece * nodes;
        for (size_t k = 0; k < nodes; ++k) {
          acc += part->w[base + k] * PowAbs(zi - part->z[base + k], p);
        }
      }
    }
    total += acc;
  }
  return total * PowAbs(s, p);
}

}  // namespace

EmpiricalMeasure1D::EmpiricalMeasure1D(std::vector<double> samples)
    : x_(std::move(samples)) {
  if (x_.empty()) throw DomainError("empirical measure needs at least one atom");
  for (double v : x_) {
    if (!std::isfinite(v)) throw DomainError("empirical atom is not finite");
  }
  std::sort(x_.begin(), x_.end());
}

double EmpiricalMeasure1D::Quantile(double u) const {
  const int n = size();
  const int i = std::clamp(static_cast<int>(std::ceil(u * n)) - 1, 0, n - 1);
  return x_[i];
}

double EmpiricalMeasure1D::Cdf(double x) const {
  return static_cast<double>(std::upper_bound(x_.begin(), x_.end(), x) -
                             x_.begin()) /
         size();
}

double EmpiricalMeasure1D::Mean() const {
  return std::accumulate(x_.begin(), x_.end(), 0.0) / size();
}

EmpiricalMeasure1D EmpiricalMeasure1D::Shifted(double c) const {
  std::vector<double> y(x_);
  for (double& v : y) v += c;
  return EmpiricalMeasure1D(std::move(y));
}

EmpiricalMeasure1D EmpiricalMeasure1D::Mapped(
    const std::function<double(double)>& f) const {
  std::vector<double> y(x_.size());
  std::transform(x_.begin(), x_.end(), y.begin(), f);
  return EmpiricalMeasure1D(std::move(y));
}

Law1D Law1D::Gaussian(double mean, double var) {
  if (!(var >= 0.0)) throw DomainError("gaussian variance must be >= 0");
  Law1D law;
  law.kind_ = Kind::kGaussian;
  law.mean_ = mean;
  law.sd_ = std::sqrt(var);
  return law;
}

Law1D Law1D::Empirical(EmpiricalMeasure1D sample) {
  Law1D law;
  law.kind_ = Kind::kEmpirical;
  law.sample_ = std::make_shared<const EmpiricalMeasure1D>(std::move(sample));
  return law;
}

Law1D Law1D::Shifted(Law1D base, double offset) {
  base.offset_ += offset;
  return base;
}

double Law1D::Quantile(double u) const {
  if (kind_ == Kind::kEmpirical) return sample_->Quantile(u) + offset_;
  if (sd_ == 0.0) return mean();
  return mean() + sd_ * PhiInv(u);
}

double Law1D::Cdf(double x) const {
  if (kind_ == Kind::kEmpirical) return sample_->Cdf(x - offset_);
  if (sd_ == 0.0) return x >= mean() ? 1.0 : 0.0;
  return Phi((x - mean()) / sd_);
}

double WpPowEmpirical(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b,
                      double p) {
  CheckOrder(p);
  return MergedPow(a.sorted(), b.sorted(), 0.0, p);
}

double WpEmpirical(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b,
                   double p) {
  return Root(WpPowEmpirical(a, b, p), p);
}

double WpPowEmpiricalVsLaw(const EmpiricalMeasure1D& a, const Law1D& law,
                           double p, int quad_points) {
  CheckOrder(p);
  GetRule(quad_points);
  if (!law.is_gaussian()) {
    return MergedPow(a.sorted(), law.sample().sorted(), law.offset(), p);
  }
  return GaussianPow(a, law.mean(), law.sd(), p, quad_points);
}

double WpEmpiricalVsLaw(const EmpiricalMeasure1D& a, const Law1D& law,
                        double p, int quad_points) {
  return Root(WpPowEmpiricalVsLaw(a, law, p, quad_points), p);
}

double WpGaussian(double m1, double s1, double m2, double s2, double p) {
  CheckOrder(p);
  if (!(s1 >= 0.0 && s2 >= 0.0)) {
    throw DomainError("gaussian standard deviations must be >= 0");
  }
  const double dm = std::abs(m1 - m2), ds = std::abs(s1 - s2);
  if (ds == 0.0) return dm;
  if (p == 2.0) return std::hypot(dm, ds);
  if (p == 1.0) {
    const double mu = dm / ds;
    const double pdf = std::exp(-0.5 * mu * mu) / std::sqrt(2.0 * M_PI);
    return ds * (mu * (2.0 * Phi(mu) - 1.0) + 2.0 * pdf);
  }
  // E|Y|^p = int_0^inf p y^{p-1} P(|Y| > y) dy, Y ~ N(dm, ds^2).
  auto tail = [&](double y) {
    return p * std::pow(y, p - 1.0) *
           (PhiUpper((y - dm) / ds) + PhiUpper((y + dm) / ds));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double far = dm + 40.0 * ds;
  double moment = GK::integrate(tail, 0.0, dm, 15, 1e-13);
  moment += GK::integrate(tail, dm, far, 15, 1e-13);
  return std::pow(moment, 1.0 / p);
}

double CouplingOracle(std::span<const double> a, std::span<const double> b,
                      double p) {
  CheckOrder(p);
  const int n = static_cast<int>(a.size());
  if (n != static_cast<int>(b.size())) {
    throw ConfigError("n", "coupling oracle needs equal sizes");
  }
  if (n < 1 || n > kMaxCouplingOracleSize) {
    throw ConfigError("n", "coupling oracle needs 1<=n<=8");
  }
  std::array<int, kMaxCouplingOracleSize> perm{};
  std::iota(perm.begin(), perm.begin() + n, 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += PowAbs(a[i] - b[perm[i]], p);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.begin() + n));
  return Root(best / n, p);
}

PushforwardBound PushforwardCheck(const EmpiricalMeasure1D& a,
                                  const EmpiricalMeasure1D& b,
                                  const std::function<double(double)>& f,
                                  double lipschitz, double p) {
  PushforwardBound out;
  out.lhs = WpEmpirical(a.Mapped(f), b.Mapped(f), p);
  out.rhs = lipschitz * WpEmpirical(a, b, p);
  return out;
}

}  // namespace lqgmfg
