#include "uda4sr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uda4sr::ad {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Param& p) {
  Param* target = &p;
  nodes_.push_back(Node{p.value, Matrix(), true, [target](Tape&, const Matrix& g) {
                          target->grad += g;
                        }});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || nodes_[v.id_].needs_grad;
  return record(std::move(value), needs, std::move(backward));
}

Var Tape::record(Matrix value, bool needs_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), needs_grad,
                        needs_grad ? std::move(backward) : Backward{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate_block(const Var& v, Eigen::Index r, Eigen::Index c, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad.block(r, c, g.rows(), g.cols()) += g;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw std::invalid_argument("backward: loss belongs to another tape");
  Node& root = nodes_[loss.id_];
  if (root.value.size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  if (!root.needs_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

namespace {

void check_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("vars recorded on different tapes");
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Tape& t = *a.tape();
  return t.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b));
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * t.value(a));
  });
}

Var transpose(const Var& a) {
  Tape& t = *a.tape();
  return t.record(a.value().transpose(), {a},
                  [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var add(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(b)) t.accumulate(b, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "mul");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var scale(const Var& a, double s) {
  Tape& t = *a.tape();
  return t.record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_const(const Var& a, const Matrix& c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) {
    throw std::invalid_argument("add_const: shape mismatch");
  }
  Tape& t = *a.tape();
  return t.record(a.value() + c, {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var add_rowvec(const Var& a, const Var& r) {
  check_same_tape(a, r);
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_rowvec: shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value();
  out.rowwise() += r.value().row(0);
  return t.record(std::move(out), {a, r}, [a, r](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(r)) t.accumulate(r, g.colwise().sum());
  });
}

Var relu(const Var& a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a);
    t.accumulate(a, (x.array() > 0.0).select(g, 0.0));
  });
}

Var tanh(const Var& a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().tanh().matrix();
  Matrix y_copy = y;
  return t.record(std::move(y), {a}, [a, y_copy](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - y_copy.array().square()).matrix()));
  });
}

Var sigmoid(const Var& a) {
  Tape& t = *a.tape();
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Matrix y_copy = y;
  return t.record(std::move(y), {a}, [a, y_copy](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((y_copy.array() * (1.0 - y_copy.array())).matrix()));
  });
}

Var exp(const Var& a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().exp().matrix();
  Matrix y_copy = y;
  return t.record(std::move(y), {a},
                  [a, y_copy](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(y_copy)); });
}

Var log(const Var& a) {
  Tape& t = *a.tape();
  return t.record(a.value().array().log().matrix(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() / t.value(a).array()).matrix());
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [a, lo, hi](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a);
    t.accumulate(a, ((x.array() >= lo) && (x.array() <= hi)).select(g, 0.0));
  });
}

Var xlogx(const Var& a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y = (x.array() > 0.0).select(x.array() * x.array().log(), 0.0).matrix();
  return t.record(std::move(y), {a}, [a](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a);
    t.accumulate(a, (x.array() > 0.0).select(g.array() * (x.array().log() + 1.0), 0.0).matrix());
  });
}

Var sum(const Var& a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(const Var& a) {
  Tape& t = *a.tape();
  const Eigen::Index r = a.rows();
  if (r == 0) throw std::invalid_argument("mean_rows: empty input");
  Matrix out = a.value().colwise().mean();
  return t.record(std::move(out), {a}, [a, r](Tape& t, const Matrix& g) {
    Matrix ga = g.replicate(r, 1) / static_cast<double>(r);
    t.accumulate(a, ga);
  });
}

Var row_dot(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "row_dot");
  Tape& t = *a.tape();
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, t.value(b).array().colwise() * g.col(0).array());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).array().colwise() * g.col(0).array());
  });
}

Var concat_cols(const Var& a, const Var& b) {
  std::vector<Var> parts{a, b};
  return concat_cols(parts);
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts[0].tape();
  const Eigen::Index r = parts[0].rows();
  Eigen::Index c = 0;
  bool needs = false;
  for (const Var& p : parts) {
    if (p.rows() != r) throw std::invalid_argument("concat_cols: row mismatch");
    c += p.cols();
    needs = needs || t.needs_grad(p);
  }
  Matrix out(r, c);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record(std::move(out), needs, [saved](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : saved) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = *parts[0].tape();
  const Eigen::Index c = parts[0].cols();
  Eigen::Index r = 0;
  bool needs = false;
  for (const Var& p : parts) {
    if (p.cols() != c) throw std::invalid_argument("concat_rows: column mismatch");
    r += p.rows();
    needs = needs || t.needs_grad(p);
  }
  Matrix out(r, c);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record(std::move(out), needs, [saved](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : saved) {
      if (t.needs_grad(p)) t.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("slice_cols: range outside input");
  }
  Tape& t = *a.tape();
  return t.record(a.value().middleCols(start, count), {a}, [a, start](Tape& t, const Matrix& g) {
    t.accumulate_block(a, 0, start, g);
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("slice_rows: range outside input");
  }
  Tape& t = *a.tape();
  return t.record(a.value().middleRows(start, count), {a}, [a, start](Tape& t, const Matrix& g) {
    t.accumulate_block(a, start, 0, g);
  });
}

Var select_rows(const Var& a, std::span<const int> rows) {
  Tape& t = *a.tape();
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw std::out_of_range("select_rows: index");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [a, idx](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(a, ga);
  });
}

Var gather_rows(Tape& tape, Param& table, std::span<const std::int32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), table.value.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= table.value.rows()) throw std::out_of_range("gather_rows: index");
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(rows[i]);
  }
  std::vector<std::int32_t> idx(rows.begin(), rows.end());
  Param* target = &table;
  return tape.record(std::move(out), true, [target, idx](Tape&, const Matrix& g) {
    for (std::size_t i = 0; i < idx.size(); ++i) target->grad.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var softmax_rows(const Var& a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  Matrix y_copy = y;
  return t.record(std::move(y), {a}, [a, y_copy](Tape& t, const Matrix& g) {
    const Eigen::VectorXd inner = g.cwiseProduct(y_copy).rowwise().sum();
    Matrix ga = y_copy.array() * (g.array().colwise() - inner.array());
    t.accumulate(a, ga);
  });
}

Var softmax_xent_rows(const Var& logits, std::span<const int> targets) {
  Tape& t = *logits.tape();
  const Matrix& x = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) {
    throw std::invalid_argument("softmax_xent_rows: one target per row required");
  }
  Matrix probs(x.rows(), x.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    probs.row(i) = (x.row(i).array() - m).exp();
    const double z = probs.row(i).sum();
    probs.row(i) /= z;
    loss += -(x(i, targets[i]) - m - std::log(z));
  }
  const double n = static_cast<double>(x.rows());
  Matrix out(1, 1);
  out(0, 0) = loss / n;
  std::vector<int> tgt(targets.begin(), targets.end());
  return t.record(std::move(out), {logits}, [logits, probs, tgt, n](Tape& t, const Matrix& g) {
    Matrix ga = probs;
    for (std::size_t i = 0; i < tgt.size(); ++i) ga(static_cast<Eigen::Index>(i), tgt[i]) -= 1.0;
    t.accumulate(logits, ga * (g(0, 0) / n));
  });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
  check_same_tape(x, gain);
  check_same_tape(x, bias);
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Eigen::Index c = xv.cols();
  Matrix xhat(xv.rows(), c);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gain.value().row(0).array();
  out.rowwise() += bias.value().row(0);
  return t.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, xhat, inv_std, c](Tape& t, const Matrix& g) {
                    if (t.needs_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                    if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
                    if (!t.needs_grad(x)) return;
                    Matrix gh = g;
                    gh.array().rowwise() *= t.value(gain).row(0).array();
                    Matrix gx(gh.rows(), c);
                    for (Eigen::Index i = 0; i < gh.rows(); ++i) {
                      const double m1 = gh.row(i).mean();
                      const double m2 = gh.row(i).cwiseProduct(xhat.row(i)).mean();
                      gx.row(i) = inv_std(i) * (gh.row(i).array() - m1 - xhat.row(i).array() * m2);
                    }
                    t.accumulate(x, gx);
                  });
}

Var normalize_rows(const Var& a, double floor) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Eigen::VectorXd norms = x.rowwise().norm();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = x.row(i) / std::max(norms(i), floor);
  Matrix y_copy = y;
  return t.record(std::move(y), {a}, [a, y_copy, norms, floor](Tape& t, const Matrix& g) {
    Matrix ga(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (norms(i) > floor) {
        const double proj = g.row(i).dot(y_copy.row(i));
        ga.row(i) = (g.row(i) - proj * y_copy.row(i)) / norms(i);
      } else {
        ga.row(i) = g.row(i) / floor;
      }
    }
    t.accumulate(a, ga);
  });
}

Var squash_rows(const Var& a) {
  Tape& t = *a.tape();
  const Matrix& s = a.value();
  Matrix y = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double n2 = s.row(i).squaredNorm();
    if (n2 > 0.0) y.row(i) = s.row(i) * (std::sqrt(n2) / (1.0 + n2));
  }
  return t.record(std::move(y), {a}, [a](Tape& t, const Matrix& g) {
    // y = f(r) s with f(r) = r / (1 + r²), r = ‖s‖; dy/ds = f I + f'(r)/r s sᵀ.
    const Matrix& s = t.value(a);
    Matrix ga = Matrix::Zero(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double n2 = s.row(i).squaredNorm();
      if (n2 <= 0.0) continue;
      const double r = std::sqrt(n2);
      const double f = r / (1.0 + n2);
      const double fprime = (1.0 - n2) / ((1.0 + n2) * (1.0 + n2));
      ga.row(i) = f * g.row(i) + (fprime / r) * g.row(i).dot(s.row(i)) * s.row(i);
    }
    t.accumulate(a, ga);
  });
}

Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  Tape& t = *a.tape();
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  return t.record(std::move(out), {a}, [a, mask](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(mask));
  });
}

Var straight_through(const Matrix& hard, const Var& soft) {
  if (hard.rows() != soft.rows() || hard.cols() != soft.cols()) {
    throw std::invalid_argument("straight_through: shape mismatch");
  }
  Tape& t = *soft.tape();
  return t.record(hard, {soft}, [soft](Tape& t, const Matrix& g) { t.accumulate(soft, g); });
}

Var sum_squares(Tape& tape, Param& p) {
  const Eigen::Index skip = p.pin_first_row ? 1 : 0;
  const Eigen::Index rows = p.value.rows() - skip;
  Matrix out(1, 1);
  out(0, 0) = rows > 0 ? p.value.bottomRows(rows).squaredNorm() : 0.0;
  Param* target = &p;
  return tape.record(std::move(out), true, [target, skip, rows](Tape&, const Matrix& g) {
    if (rows > 0) target->grad.bottomRows(rows) += 2.0 * g(0, 0) * target->value.bottomRows(rows);
  });
}

}  // namespace uda4sr::ad
