// Copyright 2026 The JGHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jghm/belief.hpp"

#include <algorithm>
#include <cmath>

namespace jghm {

double log_sum_exp(std::span<const double> v) {
  double peak = kNegInf;
  for (double x : v) peak = std::max(peak, x);
  if (peak == kNegInf) return kNegInf;
  double total = 0.0;
  for (double x : v) {
    if (x != kNegInf) total += std::exp(x - peak);
  }
  return peak + std::log(total);
}

Belief normalize(Belief b) {
  double peak = kNegInf;
  for (double x : b) peak = std::max(peak, x);
  if (peak == kNegInf) throw InvariantError("normalize: every entry is -inf");
  for (double& x : b) x -= peak;
  return b;
}

std::vector<double> softmax(std::span<const double> b) {
  double peak = kNegInf;
  for (double x : b) peak = std::max(peak, x);
  if (peak == kNegInf) throw InvariantError("softmax: every entry is -inf");
  std::vector<double> p(b.size());
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    p[i] = b[i] == kNegInf ? 0.0 : std::exp(b[i] - peak);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

Belief log_of(std::span<const double> p) {
  Belief out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > 0.0 ? std::log(p[i]) : kNegInf;
  return out;
}

Belief point_evidence(int states, int state) {
  Belief b(states, kNegInf);
  b.at(state) = 0.0;
  return b;
}

Belief flat_evidence(int states) { return Belief(states, 0.0); }

Belief step_down(const TransitionKernel& kernel, std::span<const double> h,
                 std::span<const double> log_prior_share) {
  const int S = kernel.states();
  double peak = kNegInf;
  for (double x : h) peak = std::max(peak, x);
  Belief out(S, kNegInf);
  if (peak == kNegInf) return out;
  for (int s = 0; s < S; ++s) {
    double total = 0.0;
    for (int a = 0; a < S; ++a) {
      if (h[a] == kNegInf) continue;
      total += kernel(s, a) * std::exp(h[a] - peak);
    }
    double v = total > 0.0 ? peak + std::log(total) : kNegInf;
    if (!log_prior_share.empty()) v += log_prior_share[s];
    out[s] = v;
  }
  return out;
}

Belief step_up(const TransitionKernel& kernel, std::span<const double> h) {
  const int S = kernel.states();
  double peak = kNegInf;
  for (double x : h) peak = std::max(peak, x);
  Belief out(S, kNegInf);
  if (peak == kNegInf) return out;
  for (int a = 0; a < S; ++a) {
    double total = 0.0;
    for (int s = 0; s < S; ++s) {
      if (h[s] == kNegInf) continue;
      total += kernel(s, a) * std::exp(h[s] - peak);
    }
    out[a] = total > 0.0 ? peak + std::log(total) : kNegInf;
  }
  return out;
}

Belief cavity(std::span<const double> a, std::span<const double> b) {
  Belief out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = (a[i] == kNegInf || b[i] == kNegInf) ? kNegInf : a[i] - b[i];
  }
  return out;
}

std::vector<Belief> leaf_evidence_from_noise(double t, std::span<const double> z, int states) {
  if (!(t >= 0.0)) throw InvariantError("leaf_evidence_from_noise: t must be >= 0");
  std::vector<Belief> out;
  out.reserve(z.size());
  for (double zv : z) {
    if (t == 0.0) {
      out.push_back(flat_evidence(states));
      continue;
    }
    Belief b(states);
    const double centre = zv / t;
    for (int s = 0; s < states; ++s) {
      const double d = static_cast<double>(s + 1) - centre;
      b[s] = -t * d * d / 2.0;
    }
    out.push_back(normalize(std::move(b)));
  }
  return out;
}

}  // namespace jghm
