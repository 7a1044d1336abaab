#pragma once

#include <cstddef>
#include <vector>

#include "liftpose/matrix.hpp"
#include "liftpose/tape.hpp"

/// Differentiable primitives recorded on a Tape.
namespace liftpose::ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var neg(Var a);
Var add_scalar(Var a, double c);
/// a + bias, with the 1 x cols bias broadcast over rows.
Var add_row(Var a, Var bias);
/// a * row, with the 1 x cols row broadcast over rows.
Var mul_row(Var a, Var row);
/// Row i of `a` multiplied by the constant factors[i].
Var row_scale(Var a, const Vector& factors);
/// Row i of `a` minus column vector entry c[i] (c is rows x 1).
Var sub_col(Var a, Var c);
/// Row i of `a` times c[i] (c is rows x 1).
Var mul_col(Var a, Var c);
/// Row i of `a` divided by c[i] (c is rows x 1).
Var div_col(Var a, Var c);
/// Per-row maximum absolute entry as a rows x 1 column. The gradient goes to
/// the first entry attaining the maximum.
Var row_max_abs(Var a);
/// Elementwise product with a constant mask.
Var mul_const(Var a, const Matrix& mask);
Var relu(Var a);
Var gather_cols(Var a, const std::vector<int>& cols);
Var concat_cols(const std::vector<Var>& parts);
Var sum(Var a);
Var sum_squares(Var a);
/// Mean over rows of per-row sums of squares, i.e. sum_squares(a) / rows.
Var mean_row_sum_squares(Var a);

/// Training-mode batch normalization over rows. Writes the batch mean and
/// biased variance to the optional outputs.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean = nullptr,
                     RowVector* batch_var = nullptr);
/// Inference-mode batch normalization with fixed statistics.
Var batch_norm_infer(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                     double eps);

}  // namespace liftpose::ops
