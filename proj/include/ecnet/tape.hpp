#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ecnet/tensor.hpp"

namespace ecnet {

class Tape;

// Handle to a node on a tape. Cheap to copy; invalidated when the tape dies.
struct Var {
  Tape* tape = nullptr;
  int32_t id = -1;

  const Tensor& value() const;
  const Shape& shape() const;
};

// Records forward operations and replays them in reverse for gradients.
// Single-threaded by contract; run independent tapes on separate threads.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Runs reverse accumulation from a scalar loss. Leaf gradients sum over
  // all uses; call grad() afterwards to read them.
  void backward(Var loss);

  const Tensor& value(Var v) const { return node(v.id).value; }
  // Gradient of the last backward() w.r.t. v; zeros if v was not reached.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return node(v.id).requires_grad; }
  int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

  // When enabled, every emitted value is checked for non-finite entries.
  void set_check_finite(bool on) { check_finite_ = on; }

  // Used by op implementations.
  Var emit(Tensor value, bool requires_grad);
  void set_back(Var v, std::function<void(Tape&)> back);
  const Tensor& val_of(int32_t id) const { return node(id).value; }
  bool requires_grad_id(int32_t id) const { return node(id).requires_grad; }
  bool grad_live(int32_t id) const { return node(id).grad_touched; }
  const Tensor& grad_of(int32_t id) const;
  // Returns the gradient buffer for accumulation, allocating zeros on first use.
  Tensor& grad_mut(int32_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_touched = false;
    std::function<void(Tape&)> back;
  };

  Node& node(int32_t id) {
    ECNET_CHECK(id >= 0 && id < static_cast<int32_t>(nodes_.size()), "invalid tape node id");
    return nodes_[static_cast<size_t>(id)];
  }
  const Node& node(int32_t id) const {
    ECNET_CHECK(id >= 0 && id < static_cast<int32_t>(nodes_.size()), "invalid tape node id");
    return nodes_[static_cast<size_t>(id)];
  }

  std::vector<Node> nodes_;
  bool check_finite_ = false;
};

// ---- elementwise ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var reciprocal(Var a);
// sqrt(x + smoothing); smoothing keeps the derivative finite at x == 0
Var sqrt_op(Var a, double smoothing = 0.0);
Var relu(Var a);
Var gelu(Var a);

// ---- linear algebra / structure ----
Var matmul(Var a, Var b);                 // [m,k] x [k,n]
Var add_bias(Var x, Var b);               // b broadcast over all but the last axis
Var reshape(Var x, Shape s);
Var concat_last(Var a, Var b);            // equal leading dims
Var gather_rows(Var x, std::vector<int64_t> idx);  // along axis 0
Var expand_axis(Var x, int axis, int64_t n);       // insert axis and tile n times

// ---- reductions / activations over an axis ----
Var sum_axis(Var x, int axis);
Var mean_axis(Var x, int axis);
Var max_axis(Var x, int axis);
Var softmax_axis(Var x, int axis);

// ---- losses ----
Var cross_entropy_logits(Var logits, int64_t label);  // logits rank 1
Var mse_loss(Var pred, Var target);

// ---- finite-difference verification ----
struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
  bool passed = false;
  std::string worst;  // "input i coord j" of the largest error
};

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares recorded gradients against central differences. Relative error is
// |ad - fd| / max(1, |ad|, |fd|). When max_coords_per_input is positive, a
// deterministic subsample of coordinates (from subsample_seed) is checked.
GradCheckResult check_gradients(const ScalarFn& f, const std::vector<Tensor>& inputs,
                                double eps, double tol,
                                int64_t max_coords_per_input = -1,
                                uint64_t subsample_seed = 0);

}  // namespace ecnet
