#include "liftpose/ops.hpp"

#include <cmath>
#include <string>

#include "liftpose/errors.hpp"

namespace liftpose::ops {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: " + shape(av) + " * " + shape(bv));
  }
  Matrix out = av * bv;
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value() + b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value() - b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double factor) {
  Matrix out = a.value() * factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia},
                         [ia, factor](const Matrix& g, Tape& t) { t.accumulate(ia, g * factor); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_scalar(Var a, double c) {
  Matrix out = a.value().array() + c;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia},
                         [ia](const Matrix& g, Tape& t) { t.accumulate(ia, g); });
}

Var add_row(Var a, Var bias) {
  require_same_tape(a, bias);
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw DimensionError("add_row: bias " + shape(bv) + " for input " + shape(av));
  }
  Matrix out = av.rowwise() + bv.row(0);
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  require_same_tape(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("mul_row: row " + shape(rv) + " for input " + shape(av));
  }
  Matrix out = av.array().rowwise() * rv.row(0).array();
  const std::size_t ia = a.id(), ir = row.id();
  return a.tape().record(std::move(out), {ia, ir}, [ia, ir](const Matrix& g, Tape& t) {
    if (t.requires_grad(ia)) {
      Matrix ga = g.array().rowwise() * t.value(ir).row(0).array();
      t.accumulate(ia, ga);
    }
    if (t.requires_grad(ir)) t.accumulate(ir, g.cwiseProduct(t.value(ia)).colwise().sum());
  });
}

Var row_scale(Var a, const Vector& factors) {
  const Matrix& av = a.value();
  if (factors.size() != av.rows()) {
    throw DimensionError("row_scale: " + std::to_string(factors.size()) + " factors for " +
                         shape(av));
  }
  Matrix out = factors.asDiagonal() * av;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, factors](const Matrix& g, Tape& t) {
    Matrix ga = factors.asDiagonal() * g;
    t.accumulate(ia, ga);
  });
}

Var sub_col(Var a, Var c) {
  require_same_tape(a, c);
  const Matrix& av = a.value();
  const Matrix& cv = c.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw DimensionError("sub_col: column " + shape(cv) + " for input " + shape(av));
  }
  Matrix out = av.colwise() - cv.col(0);
  const std::size_t ia = a.id(), ic = c.id();
  return a.tape().record(std::move(out), {ia, ic}, [ia, ic](const Matrix& g, Tape& t) {
    t.accumulate(ia, g);
    if (t.requires_grad(ic)) t.accumulate(ic, -g.rowwise().sum());
  });
}

Var mul_col(Var a, Var c) {
  require_same_tape(a, c);
  const Matrix& av = a.value();
  const Matrix& cv = c.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw DimensionError("mul_col: column " + shape(cv) + " for input " + shape(av));
  }
  Matrix out = cv.col(0).asDiagonal() * av;
  const std::size_t ia = a.id(), ic = c.id();
  return a.tape().record(std::move(out), {ia, ic}, [ia, ic, av, cv](const Matrix& g, Tape& t) {
    if (t.requires_grad(ia)) t.accumulate(ia, cv.col(0).asDiagonal() * g);
    if (t.requires_grad(ic)) t.accumulate(ic, g.cwiseProduct(av).rowwise().sum());
  });
}

Var div_col(Var a, Var c) {
  require_same_tape(a, c);
  const Matrix& av = a.value();
  const Matrix& cv = c.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw DimensionError("div_col: column " + shape(cv) + " for input " + shape(av));
  }
  const Vector inv = cv.col(0).cwiseInverse();
  Matrix out = inv.asDiagonal() * av;
  const std::size_t ia = a.id(), ic = c.id();
  return a.tape().record(std::move(out), {ia, ic}, [ia, ic, inv, o = Matrix(out)](const Matrix& g, Tape& t) {
    if (t.requires_grad(ia)) t.accumulate(ia, inv.asDiagonal() * g);
    if (t.requires_grad(ic)) {
      t.accumulate(ic, -(inv.asDiagonal() * g.cwiseProduct(o)).rowwise().sum());
    }
  });
}

Var row_max_abs(Var a) {
  const Matrix& av = a.value();
  if (av.cols() == 0) throw DimensionError("row_max_abs: no columns in " + shape(av));
  Matrix out(av.rows(), 1);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(av.rows()));
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    Eigen::Index j = 0;
    out(i, 0) = av.row(i).cwiseAbs().maxCoeff(&j);
    arg[static_cast<std::size_t>(i)] = j;
  }
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia},
                         [ia, arg, av, cols = av.cols()](const Matrix& g, Tape& t) {
    Matrix ga = Matrix::Zero(static_cast<Eigen::Index>(arg.size()), cols);
    for (std::size_t i = 0; i < arg.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      ga(r, arg[i]) = av(r, arg[i]) < 0.0 ? -g(r, 0) : g(r, 0);
    }
    t.accumulate(ia, ga);
  });
}

Var mul_const(Var a, const Matrix& mask) {
  require_same_shape(a.value(), mask, "mul_const");
  Matrix out = a.value().cwiseProduct(mask);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, mask](const Matrix& g, Tape& t) {
    t.accumulate(ia, g.cwiseProduct(mask));
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](const Matrix& g, Tape& t) {
    Matrix ga = (t.value(ia).array() > 0.0).select(g, 0.0);
    t.accumulate(ia, ga);
  });
}

Var gather_cols(Var a, const std::vector<int>& cols) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= av.cols()) {
      throw DimensionError("gather_cols: column " + std::to_string(cols[j]) + " out of range for " +
                           shape(av));
    }
    out.col(static_cast<Eigen::Index>(j)) = av.col(cols[j]);
  }
  const std::size_t ia = a.id();
  const Eigen::Index src_cols = av.cols();
  return a.tape().record(std::move(out), {ia}, [ia, cols, src_cols](const Matrix& g, Tape& t) {
    Matrix ga = Matrix::Zero(g.rows(), src_cols);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      ga.col(cols[j]) += g.col(static_cast<Eigen::Index>(j));
    }
    t.accumulate(ia, ga);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index total = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.rows() != rows) throw DimensionError("concat_cols: row count mismatch");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    total += p.cols();
  }
  Matrix out(rows, total);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return parts.front().tape().record(std::move(out), ids,
                                     [ids, widths](const Matrix& g, Tape& t) {
                                       Eigen::Index off = 0;
                                       for (std::size_t k = 0; k < ids.size(); ++k) {
                                         if (t.requires_grad(ids[k])) {
                                           t.accumulate(ids[k], g.middleCols(off, widths[k]));
                                         }
                                         off += widths[k];
                                       }
                                     });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](const Matrix& g, Tape& t) {
    const Matrix& av = t.value(ia);
    t.accumulate(ia, Matrix::Constant(av.rows(), av.cols(), g(0, 0)));
  });
}

Var sum_squares(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](const Matrix& g, Tape& t) {
    t.accumulate(ia, t.value(ia) * (2.0 * g(0, 0)));
  });
}

Var mean_row_sum_squares(Var a) {
  if (a.rows() == 0) throw ContractError("mean_row_sum_squares: empty batch");
  return scale(sum_squares(a), 1.0 / static_cast<double>(a.rows()));
}

Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean,
                     RowVector* batch_var) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows();
  if (n < 2) throw ConfigError("batch normalization in training mode needs at least 2 rows");
  if (gamma.value().cols() != xv.cols() || beta.value().cols() != xv.cols()) {
    throw DimensionError("batch_norm: affine parameters do not match feature count");
  }
  RowVector mean = xv.colwise().mean();
  Matrix centered = xv.rowwise() - mean;
  RowVector var = centered.array().square().colwise().mean();
  RowVector inv_std = (var.array() + eps).rsqrt();
  Matrix xhat = centered.array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), inv_std](const Matrix& g, Tape& t) {
        if (t.requires_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
        if (t.requires_grad(ix)) {
          const double rows = static_cast<double>(g.rows());
          Matrix gxhat = g.array().rowwise() * t.value(ig).row(0).array();
          RowVector mean_g = gxhat.colwise().mean();
          RowVector mean_gx = gxhat.cwiseProduct(xhat).colwise().sum() / rows;
          Matrix gx = (gxhat.rowwise() - mean_g) - (xhat.array().rowwise() * mean_gx.array()).matrix();
          gx = gx.array().rowwise() * inv_std.array();
          t.accumulate(ix, gx);
        }
      });
}

Var batch_norm_infer(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                     double eps) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const Matrix& xv = x.value();
  if (mean.cols() != xv.cols() || var.cols() != xv.cols() || gamma.value().cols() != xv.cols() ||
      beta.value().cols() != xv.cols()) {
    throw DimensionError("batch_norm: statistics do not match feature count");
  }
  RowVector inv_std = (var.array() + eps).rsqrt();
  Matrix xhat = (xv.rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), inv_std](const Matrix& g, Tape& t) {
        if (t.requires_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
        if (t.requires_grad(ix)) {
          Matrix gx = g.array().rowwise() * (t.value(ig).row(0).array() * inv_std.array());
          t.accumulate(ix, gx);
        }
      });
}

}  // namespace liftpose::ops
