#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The Priority Pass Simulator Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "ppass/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ppass {

struct FundamentalSample
{
  double t{};             // interval start, s
  double accumulation{};  // mean vehicles on the network
  double flow{};          // network exits, veh/h
  double mean_speed{};    // distance travelled / time spent, m/s
};

/// Bins of equal width starting at `origin`. Integrates vehicle presence,
/// distance travelled and exits over each bin exactly.
class IntervalAccumulator
{
public:
  IntervalAccumulator() = default;

  IntervalAccumulator(double origin, double width, std::size_t bins)
    : origin_(origin)
    , width_(width)
    , distance_(bins, 0.0)
    , time_(bins, 0.0)
    , exits_(bins, 0)
  {}

  std::size_t size() const
  {
    return time_.size();
  }

  double width() const
  {
    return width_;
  }

  double origin() const
  {
    return origin_;
  }

  /// Straight run at constant speed over [a, b].
  void add_motion(double a, double b, double speed)
  {
    spread(a, b, [&](std::size_t k, double dt) { distance_[k] += dt * speed; });
  }

  /// Vehicle on the network over [a, b].
  void add_presence(double a, double b)
  {
    spread(a, b, [&](std::size_t k, double dt) { time_[k] += dt; });
  }

  void add_exit(double t)
  {
    if (auto k = bin_of(t))
    {
      ++exits_[*k];
    }
  }

  double distance(std::size_t k) const
  {
    return distance_[k];
  }

  double vehicle_time(std::size_t k) const
  {
    return time_[k];
  }

  long exits(std::size_t k) const
  {
    return exits_[k];
  }

  /// Empty bins report `speed_limit` as their mean speed.
  FundamentalSample sample(std::size_t k, double speed_limit) const
  {
    FundamentalSample s;
    s.t            = origin_ + width_ * static_cast<double>(k);
    s.accumulation = time_[k] / width_;
    s.flow         = static_cast<double>(exits_[k]) * 3600.0 / width_;
    s.mean_speed   = time_[k] > 0.0 ? distance_[k] / time_[k] : speed_limit;
    return s;
  }

  std::vector<FundamentalSample> samples(double speed_limit) const
  {
    std::vector<FundamentalSample> out;
    out.reserve(size());
    for (std::size_t k = 0; k < size(); ++k)
    {
      out.push_back(sample(k, speed_limit));
    }
    return out;
  }

private:
  std::optional<std::size_t> bin_of(double t) const
  {
    if (width_ <= 0.0 || t < origin_)
    {
      return std::nullopt;
    }
    auto const k = static_cast<std::size_t>((t - origin_) / width_);
    if (k >= size())
    {
      return std::nullopt;
    }
    return k;
  }

  template <typename F>
  void spread(double a, double b, F &&f)
  {
    if (width_ <= 0.0 || size() == 0)
    {
      return;
    }
    double const end = origin_ + width_ * static_cast<double>(size());
    a                = std::max(a, origin_);
    b                = std::min(b, end);
    if (!(b > a))
    {
      return;
    }
    auto k = static_cast<std::size_t>((a - origin_) / width_);
    while (a < b && k < size())
    {
      double const edge = origin_ + width_ * static_cast<double>(k + 1);
      double const hi   = std::min(b, edge);
      if (hi > a)
      {
        f(k, hi - a);
      }
      a = hi;
      ++k;
    }
  }

  double origin_{0.0};
  double width_{0.0};
  std::vector<double> distance_;
  std::vector<double> time_;
  std::vector<long> exits_;
};

/// Quartic c0 + c1 x + ... + c4 x^4.
struct Quartic
{
  std::array<double, 5> c{};

  double operator()(double x) const
  {
    double y = 0.0;
    for (int k = 4; k >= 0; --k)
    {
      y = y * x + c[static_cast<std::size_t>(k)];
    }
    return y;
  }

  /// Largest value on [lo, hi] by dense evaluation.
  std::pair<double, double> peak(double lo, double hi, int samples = 2000) const
  {
    double best_x = lo;
    double best_y = (*this)(lo);
    for (int i = 1; i <= samples; ++i)
    {
      double const x = lo + (hi - lo) * i / samples;
      double const y = (*this)(x);
      if (y > best_y)
      {
        best_y = y;
        best_x = x;
      }
    }
    return {best_x, best_y};
  }
};

inline double residual_norm(Quartic const &q, std::span<const std::pair<double, double>> points)
{
  double s = 0.0;
  for (auto [x, y] : points)
  {
    double const r = q(x) - y;
    s += r * r;
  }
  return std::sqrt(s);
}

/// Least-squares quartic. Solved by column-pivoted QR on centred and scaled
/// abscissae, then mapped back to the raw monomial basis.
inline Quartic polyfit4(std::span<const std::pair<double, double>> points)
{
  std::set<double> distinct;
  for (auto const &p : points)
  {
    distinct.insert(p.first);
  }
  if (distinct.size() < 5)
  {
    throw Error(ErrorKind::rank_deficiency,
                "quartic fit needs 5 distinct abscissae, got " + std::to_string(distinct.size()));
  }

  double lo = *distinct.begin();
  double hi = *distinct.rbegin();
  double const centre = 0.5 * (lo + hi);
  double const scale  = 0.5 * (hi - lo);

  auto const n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd A(n, 5);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    double const z = (points[static_cast<std::size_t>(i)].first - centre) / scale;
    double zk      = 1.0;
    for (int k = 0; k < 5; ++k)
    {
      A(i, k) = zk;
      zk *= z;
    }
    b(i) = points[static_cast<std::size_t>(i)].second;
  }
  Eigen::VectorXd const a = A.colPivHouseholderQr().solve(b);

  // p(x) = sum_k a_k ((x - m) / s)^k, expanded binomially.
  static constexpr double binom[5][5] = {
      {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};
  Quartic q;
  for (int k = 0; k < 5; ++k)
  {
    double const ak = a(k) / std::pow(scale, k);
    for (int j = 0; j <= k; ++j)
    {
      q.c[static_cast<std::size_t>(j)] += ak * binom[k][j] * std::pow(-centre, k - j);
    }
  }
  return q;
}

}  // namespace ppass
