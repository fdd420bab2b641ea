#include "caer/labels/kappa.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::labels {

double fleiss_kappa(const AgreementTable& table) {
  const int n = table.raters_per_item;
  if (n < 2) throw Error(ErrorCode::malformed_table, "fleiss_kappa: need at least 2 raters per item");
  if (table.rows.size() < 2) throw Error(ErrorCode::malformed_table, "fleiss_kappa: need at least 2 items");
  const std::size_t k = table.rows.front().size();
  if (k == 0) throw Error(ErrorCode::malformed_table, "fleiss_kappa: no categories");

  std::vector<double> column_totals(k, 0.0);
  double agreement_sum = 0.0;
  bool all_unanimous = true;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != k) {
      throw Error(ErrorCode::malformed_table, fmt::format("fleiss_kappa: row {} has {} columns, expected {}", i, row.size(), k));
    }
    long sum = 0;
    long sum_sq = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw Error(ErrorCode::malformed_table, fmt::format("fleiss_kappa: negative count in row {}", i));
      sum += row[j];
      sum_sq += static_cast<long>(row[j]) * row[j];
      column_totals[j] += row[j];
    }
    if (sum != n) {
      throw Error(ErrorCode::malformed_table,
                  fmt::format("fleiss_kappa: row {} sums to {}, expected {}", i, sum, n));
    }
    if (std::find(row.begin(), row.end(), n) == row.end()) all_unanimous = false;
    agreement_sum += static_cast<double>(sum_sq - n) / (static_cast<double>(n) * (n - 1));
  }

  const double n_items = static_cast<double>(table.rows.size());
  const double total = n_items * n;
  double expected = 0.0;
  for (double c : column_totals) expected += (c / total) * (c / total);
  // Exact integer test for P_e == 1: a single column holds every vote.
  if (std::find(column_totals.begin(), column_totals.end(), total) != column_totals.end()) {
    throw Error(ErrorCode::degenerate_table, "fleiss_kappa: every rating falls in one category");
  }
  if (all_unanimous) return 1.0;

  const double observed = agreement_sum / n_items;
  return (observed - expected) / (1.0 - expected);
}

}  // namespace caer::labels
