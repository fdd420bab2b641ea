#pragma once

#include <vector>

namespace caer::labels {

// Per-item category counts; every row sums to raters_per_item.
struct AgreementTable {
  int raters_per_item = 0;
  std::vector<std::vector<int>> rows;
};

// Fleiss' kappa: (P_bar - P_e) / (1 - P_e) with P_bar the mean per-item
// pairwise agreement and P_e the sum of squared marginal category shares.
//
// Returns exactly 1.0 when every item is unanimous. Throws
// Error(malformed_table) for fewer than 2 items or raters, ragged rows, or
// a row whose sum differs from raters_per_item; Error(degenerate_table)
// when P_e == 1 (all raters always chose one category).
double fleiss_kappa(const AgreementTable& table);

}  // namespace caer::labels
