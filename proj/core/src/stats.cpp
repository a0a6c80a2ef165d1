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

#include "l2grade/stats.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "l2grade/errors.hpp"
#include "l2grade/metrics.hpp"

namespace l2grade {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void PairedScoreTable::validate() const {
  if (k_groups() < 3) throw DomainError("rank tests need at least 3 groups, got " + std::to_string(k_groups()));
  if (n_subjects() < 2) throw DomainError("rank tests need at least 2 subjects, got " + std::to_string(n_subjects()));
  if (group_names.size() != k_groups()) throw ShapeError("group name count does not match table width");
  std::vector<ValidationIssue> issues;
  for (std::size_t r = 0; r < n_subjects(); ++r) {
    for (std::size_t c = 0; c < k_groups(); ++c) {
      if (!std::isfinite(values(r, c))) {
        issues.push_back({"row " + std::to_string(r + 1), "missing value for group '" + group_names[c] + "'"});
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

PairedScoreTable read_score_table_csv(std::istream& in) {
  PairedScoreTable t;
  std::string line;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  if (line.empty()) throw FormatError("score table: missing header row");
  t.group_names = split_csv_line(line);
  const std::size_t k = t.group_names.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != k) {
      throw FormatError("score table line " + std::to_string(line_no) + ": expected " + std::to_string(k) +
                        " cells, found " + std::to_string(cells.size()));
    }
    for (const auto& c : cells) {
      if (c.empty() || c == "NA" || c == "nan") {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size()) {
        throw FormatError("score table line " + std::to_string(line_no) + ": '" + c + "' is not a number");
      }
      values.push_back(v);
    }
    ++rows;
  }
  t.values = MatrixD(rows, k, std::move(values));
  return t;
}

PairedScoreTable read_score_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open score table");
  try {
    return read_score_table_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

MatrixD within_row_ranks(const PairedScoreTable& table) {
  MatrixD ranks(table.n_subjects(), table.k_groups());
  for (std::size_t r = 0; r < table.n_subjects(); ++r) {
    const auto rr = average_ranks(table.values.row(r));
    std::ranges::copy(rr, ranks.row(r).begin());
  }
  return ranks;
}

FriedmanResult friedman_test(const PairedScoreTable& table) {
  table.validate();
  const std::size_t n = table.n_subjects();
  const std::size_t k = table.k_groups();
  const MatrixD ranks = within_row_ranks(table);

  FriedmanResult res;
  res.df = k - 1;
  res.mean_ranks.assign(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) res.mean_ranks[c] += ranks(r, c);
  }
  for (double& m : res.mean_ranks) m /= static_cast<double>(n);

  double ties = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> row(table.values.row(r).begin(), table.values.row(r).end());
    std::ranges::sort(row);
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i + 1;
      while (j < k && row[j] == row[i]) ++j;
      const double t = static_cast<double>(j - i);
      ties += t * t * t - t;
      i = j;
    }
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  res.tie_correction = 1.0 - ties / (nd * kd * (kd * kd - 1.0));

  double spread = 0.0;
  for (const double m : res.mean_ranks) spread += (m - 0.5 * (kd + 1.0)) * (m - 0.5 * (kd + 1.0));
  if (res.tie_correction <= 0.0 || spread == 0.0) {
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.statistic = 12.0 * nd / (kd * (kd + 1.0)) * spread / res.tie_correction;
  res.p_value = chi2_survival(res.statistic, static_cast<double>(res.df));
  return res;
}

PosthocResult nemenyi_test(const PairedScoreTable& table, double alpha) {
  const FriedmanResult f = friedman_test(table);
  const std::size_t k = table.k_groups();
  const double n = static_cast<double>(table.n_subjects());
  const double kd = static_cast<double>(k);
  const double scale = std::sqrt(kd * (kd + 1.0) / (12.0 * n));

  PosthocResult res;
  res.group_names = table.group_names;
  res.mean_ranks = f.mean_ranks;
  res.alpha = alpha;
  res.p_values = MatrixD(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    res.p_values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double q = std::abs(f.mean_ranks[i] - f.mean_ranks[j]) / scale;
      const double p = studentized_range_survival(q, k);
      res.p_values(i, j) = p;
      res.p_values(j, i) = p;
    }
  }
  return res;
}

std::string pvalue_matrix_csv(const PosthocResult& r) {
  std::string out = "group";
  for (const auto& g : r.group_names) out += "," + g;
  out += "\n";
  for (std::size_t i = 0; i < r.group_names.size(); ++i) {
    out += r.group_names[i];
    for (std::size_t j = 0; j < r.group_names.size(); ++j) out += "," + fmt(r.p_values(i, j));
    out += "\n";
  }
  return out;
}

std::string mean_ranks_csv(const PosthocResult& r) {
  std::string out = "group,mean_rank\n";
  for (std::size_t i = 0; i < r.group_names.size(); ++i) out += r.group_names[i] + "," + fmt(r.mean_ranks[i]) + "\n";
  return out;
}

nlohmann::json stats_summary_json(const FriedmanResult& f, const PosthocResult& r) {
  nlohmann::json j;
  j["friedman"] = {{"statistic", f.statistic},
                   {"p_value", f.p_value},
                   {"df", f.df},
                   {"tie_correction", f.tie_correction},
                   {"significant", f.p_value < r.alpha}};
  j["alpha"] = r.alpha;
  j["groups"] = r.group_names;
  j["mean_ranks"] = r.mean_ranks;
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t a = 0; a < r.group_names.size(); ++a) {
    for (std::size_t b = a + 1; b < r.group_names.size(); ++b) {
      pairs.push_back({{"a", r.group_names[a]},
                       {"b", r.group_names[b]},
                       {"p_value", r.p_values(a, b)},
                       {"significant", r.significant(a, b)}});
    }
  }
  j["nemenyi"] = pairs;
  return j;
}

}  // namespace l2grade
