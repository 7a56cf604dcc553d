// Copyright 2026 The strudec Authors.
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

#include "strudec/ops.h"

#include <cmath>
#include <limits>
#include <string>

#include "strudec/errors.h"

namespace strudec::ops {
namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw ContractError("operands on different tapes");
}

void same_shape(const Var& a, const Var& b, const char* op) {
  same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(x) + " vs " +
                     dims(y));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: inner dims differ " + dims(x) + " * " + dims(y));
  }
  Matrix out = x * y;
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            if (t.needs_grad(a)) {
                              t.accumulate(a, g * b.value().transpose());
                            }
                            if (t.needs_grad(b)) {
                              t.accumulate(b, a.value().transpose() * g);
                            }
                          });
}

Var matmul_nt(const Var& a, const Var& b) {
  same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.cols()) {
    throw ShapeError("matmul_nt: inner dims differ " + dims(x) + " * " +
                     dims(y) + "^T");
  }
  Matrix out = x * y.transpose();
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            if (t.needs_grad(a)) t.accumulate(a, g * b.value());
                            if (t.needs_grad(b)) {
                              t.accumulate(b, g.transpose() * a.value());
                            }
                          });
}

Var transpose(const Var& a) {
  Matrix out = a.value().transpose();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.transpose());
  });
}

Var add(const Var& a, const Var& b) {
  same_shape(a, b, "add");
  Matrix out = a.value() + b.value();
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            t.accumulate(a, g);
                            t.accumulate(b, g);
                          });
}

Var sub(const Var& a, const Var& b) {
  same_shape(a, b, "sub");
  Matrix out = a.value() - b.value();
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            t.accumulate(a, g);
                            if (t.needs_grad(b)) t.accumulate(b, -g);
                          });
}

Var add_row(const Var& a, const Var& row) {
  same_tape(a, row);
  const Matrix& x = a.value();
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ShapeError("add_row: expected 1x" + std::to_string(x.cols()) +
                     " row, got " + dims(r));
  }
  Matrix out = x.rowwise() + r.row(0);
  return a.tape()->record(std::move(out), {a, row},
                          [a, row](Tape& t, const Matrix& g) {
                            t.accumulate(a, g);
                            if (t.needs_grad(row)) {
                              t.accumulate(row, g.colwise().sum());
                            }
                          });
}

Var scale(const Var& a, double c) {
  Matrix out = a.value() * c;
  return a.tape()->record(std::move(out), {a}, [a, c](Tape& t, const Matrix& g) {
    t.accumulate(a, g * c);
  });
}

Var hadamard(const Var& a, const Var& b) {
  same_shape(a, b, "hadamard");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            if (t.needs_grad(a)) {
                              t.accumulate(a, g.cwiseProduct(b.value()));
                            }
                            if (t.needs_grad(b)) {
                              t.accumulate(b, g.cwiseProduct(a.value()));
                            }
                          });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix d = (a.value().array() > 0.0).select(g, 0.0);
    t.accumulate(a, d);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  const Matrix& in = x.value();
  const int cols = static_cast<int>(in.cols());
  if (gain.rows() != 1 || gain.cols() != cols || bias.rows() != 1 ||
      bias.cols() != cols) {
    throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(cols));
  }
  Matrix xhat(in.rows(), cols);
  RowVector inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mu = in.row(r).mean();
    const double var = (in.row(r).array() - mu).square().mean();
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std[r];
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array())
                   .rowwise() +
               bias.value().row(0).array();
  return x.tape()->record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, const Matrix& g) {
        if (t.needs_grad(gain)) {
          t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
        }
        if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (t.needs_grad(x)) {
          Matrix dxhat = g.array().rowwise() * gain.value().row(0).array();
          Matrix dx(dxhat.rows(), dxhat.cols());
          for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
            const double m1 = dxhat.row(r).mean();
            const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
            dx.row(r) =
                (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) *
                inv_std[r];
          }
          t.accumulate(x, dx);
        }
      });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  const Matrix& tab = table.value();
  if (ids.empty()) throw ShapeError("gather_rows: empty id list");
  Matrix out(static_cast<Eigen::Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) +
                       " out of range for " + dims(tab));
    }
    out.row(static_cast<Eigen::Index>(i)) = tab.row(ids[i]);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return table.tape()->record(
      std::move(out), {table},
      [table, saved = std::move(saved)](Tape& t, const Matrix& g) {
        Matrix& buf = t.grad_buffer(table);
        for (std::size_t i = 0; i < saved.size(); ++i) {
          buf.row(saved[i]) += g.row(static_cast<Eigen::Index>(i));
        }
      });
}

Var gather_per_row(const Var& a, std::span<const int> idx, int width) {
  const Matrix& x = a.value();
  if (width <= 0 || idx.size() != static_cast<std::size_t>(x.rows()) * width) {
    throw ShapeError("gather_per_row: index table does not match rows");
  }
  Matrix out(x.rows(), width);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int j = 0; j < width; ++j) {
      const int c = idx[r * width + j];
      if (c < 0 || c >= x.cols()) {
        throw ShapeError("gather_per_row: column out of range");
      }
      out(r, j) = x(r, c);
    }
  }
  std::vector<int> saved(idx.begin(), idx.end());
  return a.tape()->record(
      std::move(out), {a},
      [a, width, saved = std::move(saved)](Tape& t, const Matrix& g) {
        Matrix& buf = t.grad_buffer(a);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          for (int j = 0; j < width; ++j) {
            buf(r, saved[r * width + j]) += g(r, j);
          }
        }
      });
}

Var sum_entries(const Var& a, std::span<const int> rows,
                std::span<const int> cols) {
  const Matrix& x = a.value();
  if (rows.size() != cols.size()) {
    throw ShapeError("sum_entries: row/col lists differ in length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows() || cols[i] < 0 ||
        cols[i] >= x.cols()) {
      throw ShapeError("sum_entries: index out of range for " + dims(x));
    }
    s += x(rows[i], cols[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  std::vector<int> rs(rows.begin(), rows.end());
  std::vector<int> cs(cols.begin(), cols.end());
  return a.tape()->record(std::move(out), {a},
                          [a, rs = std::move(rs), cs = std::move(cs)](
                              Tape& t, const Matrix& g) {
                            Matrix& buf = t.grad_buffer(a);
                            for (std::size_t i = 0; i < rs.size(); ++i) {
                              buf(rs[i], cs[i]) += g(0, 0);
                            }
                          });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].value().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.value().rows() != rows) {
      throw ShapeError("concat_cols: row counts differ");
    }
    cols += p.value().cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.value().cols()) = p.value();
    off += p.value().cols();
  }
  return parts[0].tape()->record(std::move(out), parts,
                                 [parts](Tape& t, const Matrix& g) {
                                   Eigen::Index o = 0;
                                   for (const Var& p : parts) {
                                     const Eigen::Index c = p.value().cols();
                                     if (t.needs_grad(p)) {
                                       t.accumulate(p, g.middleCols(o, c));
                                     }
                                     o += c;
                                   }
                                 });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = parts[0].value().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.value().cols() != cols) {
      throw ShapeError("concat_rows: column counts differ");
    }
    rows += p.value().rows();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.value().rows()) = p.value();
    off += p.value().rows();
  }
  return parts[0].tape()->record(std::move(out), parts,
                                 [parts](Tape& t, const Matrix& g) {
                                   Eigen::Index o = 0;
                                   for (const Var& p : parts) {
                                     const Eigen::Index r = p.value().rows();
                                     if (t.needs_grad(p)) {
                                       t.accumulate(p, g.middleRows(o, r));
                                     }
                                     o += r;
                                   }
                                 });
}

Var slice_cols(const Var& a, int start, int count) {
  const Matrix& x = a.value();
  if (start < 0 || count <= 0 || start + count > x.cols()) {
    throw ShapeError("slice_cols: range out of bounds for " + dims(x));
  }
  Matrix out = x.middleCols(start, count);
  return a.tape()->record(std::move(out), {a},
                          [a, start, count](Tape& t, const Matrix& g) {
                            t.grad_buffer(a).middleCols(start, count) += g;
                          });
}

Var slice_rows(const Var& a, int start, int count) {
  const Matrix& x = a.value();
  if (start < 0 || count <= 0 || start + count > x.rows()) {
    throw ShapeError("slice_rows: range out of bounds for " + dims(x));
  }
  Matrix out = x.middleRows(start, count);
  return a.tape()->record(std::move(out), {a},
                          [a, start, count](Tape& t, const Matrix& g) {
                            t.grad_buffer(a).middleRows(start, count) += g;
                          });
}

Var reshape(const Var& a, int rows, int cols) {
  const Matrix& x = a.value();
  if (rows <= 0 || cols <= 0 ||
      static_cast<Eigen::Index>(rows) * cols != x.size()) {
    throw ShapeError("reshape: cannot view " + dims(x) + " as " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  // Row-major storage makes this a reinterpretation of the same buffer.
  Matrix out = Eigen::Map<const Matrix>(x.data(), rows, cols);
  const auto r0 = x.rows();
  const auto c0 = x.cols();
  return a.tape()->record(std::move(out), {a},
                          [a, r0, c0](Tape& t, const Matrix& g) {
                            t.accumulate(a, Eigen::Map<const Matrix>(
                                                g.data(), r0, c0));
                          });
}

Var masked_fill(const Var& a, const std::vector<bool>& mask, double fill) {
  const Matrix& x = a.value();
  if (mask.size() != static_cast<std::size_t>(x.size())) {
    throw ShapeError("masked_fill: mask size differs from " + dims(x));
  }
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (mask[i]) out.data()[i] = fill;
  }
  return a.tape()->record(std::move(out), {a},
                          [a, mask](Tape& t, const Matrix& g) {
                            Matrix d = g;
                            for (Eigen::Index i = 0; i < d.size(); ++i) {
                              if (mask[i]) d.data()[i] = 0.0;
                            }
                            t.accumulate(a, d);
                          });
}

Var softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  if (x.size() == 0) throw ShapeError("softmax of empty input");
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ContractError("softmax: every entry of a row is masked");
    }
    y.row(r) = (x.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  Matrix saved = y;
  return a.tape()->record(
      std::move(y), {a}, [a, y = std::move(saved)](Tape& t, const Matrix& g) {
        Matrix gy = g.cwiseProduct(y);
        Eigen::VectorXd s = gy.rowwise().sum();
        Matrix d = gy - (y.array().colwise() * s.array()).matrix();
        t.accumulate(a, d);
      });
}

Var log_softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  if (x.size() == 0) throw ShapeError("log_softmax of empty input");
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse =
        mx + std::log((x.row(r).array() - mx).exp().sum());
    y.row(r) = x.row(r).array() - lse;
  }
  Matrix probs = y.array().exp();
  return a.tape()->record(std::move(y), {a},
                          [a, probs = std::move(probs)](Tape& t,
                                                        const Matrix& g) {
                            Eigen::VectorXd s = g.rowwise().sum();
                            Matrix d =
                                g - (probs.array().colwise() * s.array())
                                        .matrix();
                            t.accumulate(a, d);
                          });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of empty input");
  return scale(sum(a), 1.0 / n);
}

Var logsumexp(const Var& a) {
  const Matrix& x = a.value();
  if (x.size() == 0) throw ShapeError("logsumexp of empty input");
  const double mx = x.maxCoeff();
  Matrix e = (x.array() - mx).exp();
  const double s = e.sum();
  Matrix out(1, 1);
  out(0, 0) = mx + std::log(s);
  e /= s;
  return a.tape()->record(std::move(out), {a},
                          [a, p = std::move(e)](Tape& t, const Matrix& g) {
                            t.accumulate(a, p * g(0, 0));
                          });
}

}  // namespace strudec::ops
