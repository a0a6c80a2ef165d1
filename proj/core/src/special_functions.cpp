// Copyright 2026 The l2grade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "l2grade/errors.hpp"
#include "l2grade/stats.hpp"

namespace l2grade {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_domain(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || std::isnan(x)) {
    throw DomainError("incomplete gamma: need a > 0 and x >= 0");
  }
}

// 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights on [-1, 1].
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double value;
  double error;
};

Segment gauss_kronrod15(const std::function<double(double)>& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double s = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

double adaptive_integrate(const std::function<double(double)>& f, double lo, double hi, double tol, int depth) {
  const Segment whole = gauss_kronrod15(f, lo, hi);
  if (whole.error <= tol || depth == 0) return whole.value;
  const double mid = 0.5 * (lo + hi);
  return adaptive_integrate(f, lo, mid, 0.5 * tol, depth - 1) + adaptive_integrate(f, mid, hi, 0.5 * tol, depth - 1);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Phi(z) - Phi(z - q), evaluated in whichever tail keeps precision.
double normal_band(double z, double q) {
  if (z - 0.5 * q > 0.0) return upper_tail(z - q) - upper_tail(z);
  return upper_tail(-z) - upper_tail(q - z);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double regularized_gamma_p(double a, double x) {
  check_gamma_domain(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_gamma_domain(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi2_survival(double x, double df) {
  if (!(df >= 1.0) || !(x >= 0.0)) throw DomainError("chi2_survival: need x >= 0 and df >= 1");
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double studentized_range_survival(double q, std::size_t k) {
  if (k < 2 || !(q >= 0.0)) throw DomainError("studentized_range_survival: need q >= 0 and k >= 2");
  if (q == 0.0) return 1.0;
  if (std::isinf(q)) return 0.0;
  const double kd = static_cast<double>(k);
  const auto integrand = [&](double z) {
    const double band = normal_band(z, q);
    return band <= 0.0 ? 0.0 : kd * normal_pdf(z) * std::pow(band, kd - 1.0);
  };
  // phi(z) < 1e-22 outside [-10, 10 + q]; split so the adaptive rule sees the band's two edges.
  const double breaks[] = {-10.0, -3.0, 0.0, 0.5 * q, q, q + 3.0, q + 10.0};
  double cdf = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(breaks); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    cdf += adaptive_integrate(integrand, breaks[i], breaks[i + 1], 1e-13, 40);
  }
  const double sf = 1.0 - cdf;
  return sf < 0.0 ? 0.0 : (sf > 1.0 ? 1.0 : sf);
}

}  // namespace l2grade
