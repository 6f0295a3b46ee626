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

#include <cmath>
#include <cstdint>
#include <random>

namespace ppass {

/// Output of std::mt19937_64 is fixed by the standard; the distributions in
/// <random> are not, so every draw below is done by hand to keep runs
/// bit-identical across standard libraries.
using RandomEngine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream `stream` of master seed `seed`.
inline RandomEngine make_stream(std::uint64_t seed, std::uint64_t stream)
{
  return RandomEngine(splitmix64(seed ^ splitmix64(stream + 0x5A17ULL)));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(RandomEngine &rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unit-mean exponential by inversion.
inline double standard_exponential(RandomEngine &rng)
{
  return -std::log1p(-uniform01(rng));
}

/// Uniform integer in [0, n) without modulo bias.
inline std::uint64_t uniform_index(RandomEngine &rng, std::uint64_t n)
{
  std::uint64_t const limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x;
  do
  {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Geometric on {1, 2, ...} with success probability p.
inline int geometric(RandomEngine &rng, double p)
{
  double const u = uniform01(rng);
  return 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

}  // namespace ppass
