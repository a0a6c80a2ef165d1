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

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2grade/matrix.hpp"

namespace l2grade {

/// Subjects x groups table for repeated-measures rank tests.
struct PairedScoreTable {
  std::vector<std::string> group_names;
  MatrixD values;  // n_subjects x k_groups

  std::size_t n_subjects() const noexcept { return values.rows(); }
  std::size_t k_groups() const noexcept { return values.cols(); }
  /// n >= 2, k >= 3, no missing (non-finite) cells.
  void validate() const;
};

/// CSV with a header row of group names and one numeric row per subject.
/// Empty cells are read as missing and rejected by validate().
PairedScoreTable read_score_table_csv(std::istream& in);
PairedScoreTable read_score_table_csv(const std::filesystem::path& path);

/// Average ranks within each row, ties sharing the mean position.
MatrixD within_row_ranks(const PairedScoreTable& table);

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  double tie_correction = 1.0;  // 1 - sum(t^3 - t) / (n k (k^2 - 1))
  std::vector<double> mean_ranks;
};

/// Tie-corrected Friedman chi-square. A table in which every row is fully
/// tied has no rank variation: statistic 0, p 1.
FriedmanResult friedman_test(const PairedScoreTable& table);

struct PosthocResult {
  std::vector<std::string> group_names;
  std::vector<double> mean_ranks;
  MatrixD p_values;  // symmetric, unit diagonal
  double alpha = 0.05;

  bool significant(std::size_t i, std::size_t j) const { return i != j && p_values(i, j) < alpha; }
};

/// Nemenyi all-pairs comparison of Friedman mean ranks: for each pair,
/// q = |R_i - R_j| / sqrt(k(k+1)/(12n)) and p = P(Q_{k,inf} > q).
PosthocResult nemenyi_test(const PairedScoreTable& table, double alpha = 0.05);

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
double chi2_survival(double x, double df);

double normal_cdf(double z);

/// P(Q > q) for the studentized range of k standard normals with infinite
/// degrees of freedom, by adaptive Gauss-Kronrod quadrature of
/// k * int phi(z) [Phi(z) - Phi(z - q)]^(k-1) dz.
double studentized_range_survival(double q, std::size_t k);

std::string pvalue_matrix_csv(const PosthocResult& r);
std::string mean_ranks_csv(const PosthocResult& r);
nlohmann::json stats_summary_json(const FriedmanResult& f, const PosthocResult& r);

}  // namespace l2grade
