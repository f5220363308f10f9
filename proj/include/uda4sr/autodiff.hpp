#pragma once

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation of one forward pass. Var is a cheap handle
// (tape pointer + node id). Parameters live outside the tape in Param and
// receive their gradients when Tape::backward runs.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace uda4sr::ad {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  // Included in the L2 regularizer.
  bool decay = true;
  // Row 0 is the padding row: never read, never decayed, never updated.
  bool pin_first_row = false;

  Param() = default;
  Param(std::string n, Matrix v, bool decay_ = true, bool pin_row0 = false)
      : name(std::move(n)), value(std::move(v)), decay(decay_), pin_first_row(pin_row0) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Param& p);

  // Records a derived node. `inputs` decides whether the node needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, bool needs_grad, Backward backward);

  const Matrix& value(const Var& v) const { return nodes_[v.id_].value; }
  bool needs_grad(const Var& v) const { return nodes_[v.id_].needs_grad; }
  // Adds `g` into the gradient of `v` (no-op for constants).
  void accumulate(const Var& v, const Matrix& g);
  void accumulate_block(const Var& v, Eigen::Index r, Eigen::Index c, const Matrix& g);

  // Seeds d(loss)/d(loss)=1 and propagates to every Param touched on this tape.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// ---- elementwise and linear algebra ----------------------------------------

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_const(const Var& a, const Matrix& c);
// Adds the 1×n row `r` to every row of `a`.
Var add_rowvec(const Var& a, const Var& r);
Var relu(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
// Clamps into [lo, hi]; gradient is zero where clamping was active.
Var clamp(const Var& a, double lo, double hi);
// Elementwise x·ln x with 0·ln 0 = 0.
Var xlogx(const Var& a);

// ---- reductions -------------------------------------------------------------

Var sum(const Var& a);
Var mean(const Var& a);
// Column means: r×c -> 1×c.
Var mean_rows(const Var& a);
// Row-wise dot products: (r×c, r×c) -> r×1.
Var row_dot(const Var& a, const Var& b);

// ---- shape ------------------------------------------------------------------

Var concat_cols(const Var& a, const Var& b);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var select_rows(const Var& a, std::span<const int> rows);
// Looks up rows of a parameter table without materializing the full table.
Var gather_rows(Tape& tape, Param& table, std::span<const std::int32_t> rows);

// ---- neural-network building blocks -----------------------------------------

Var softmax_rows(const Var& a);
// Mean over rows of -log softmax(logits)[row, target[row]].
Var softmax_xent_rows(const Var& logits, std::span<const int> targets);
// Per row: (x - mean) / sqrt(var + eps) * gain + bias. gain, bias are 1×c.
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
// Per row: h / max(‖h‖, floor).
Var normalize_rows(const Var& a, double floor = 1e-12);
// Per row capsule squash: (‖s‖² / (1 + ‖s‖²)) · s / ‖s‖, with squash(0) = 0.
Var squash_rows(const Var& a);
// Inverted dropout. Identity when p == 0.
Var dropout(const Var& a, double p, std::mt19937_64& rng);
// Forward value is `hard`, gradient passes straight through to `soft`.
Var straight_through(const Matrix& hard, const Var& soft);
// Σ value² over a parameter (skipping the padding row when pinned).
Var sum_squares(Tape& tape, Param& p);

}  // namespace uda4sr::ad
