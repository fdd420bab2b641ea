#pragma once

#include <span>
#include <vector>

#include "caer/model/tensor.hpp"

namespace caer::model {

// All ops check shapes (Error(shape)) and record a graph node only when
// gradients are enabled and some input requires one.

Var matmul(const Var& a, const Var& b);     // a * b
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);  // broadcast a 1 x n row over every row of a
Var sum(const Var& a);                      // 1 x 1

Var gelu(const Var& a);        // x * Phi(x), erf form
Var quick_gelu(const Var& a);  // x * sigmoid(1.702 x)

// Row-wise softmax; `causal` masks entries above the diagonal.
Var softmax_rows(const Var& a, bool causal = false);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, long start, long count);
Var slice_cols(const Var& a, long start, long count);

// Each row divided by its Euclidean norm. A zero row raises
// Error(degenerate_input).
Var l2_normalize_rows(const Var& a);

// Mean over rows of -log softmax(logits)[label].
Var cross_entropy_logits(const Var& logits, std::span<const int> labels);

// Plain value helpers.
Mat softmax_rows(const Mat& a);

}  // namespace caer::model
