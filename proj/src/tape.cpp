#include "ecnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ecnet/rng.hpp"

namespace ecnet {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

const Tensor& Var::value() const { return tape->value(*this); }
const Shape& Var::shape() const { return tape->value(*this).shape; }

Var Tape::leaf(Tensor value, bool requires_grad) { return emit(std::move(value), requires_grad); }

Var Tape::emit(Tensor value, bool requires_grad) {
  if (check_finite_ && !value.all_finite())
    throw ContractError("non-finite value emitted on tape at node " +
                        std::to_string(nodes_.size()));
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

void Tape::set_back(Var v, std::function<void(Tape&)> back) { node(v.id).back = std::move(back); }

const Tensor& Tape::grad_of(int32_t id) const {
  const Node& n = node(id);
  ECNET_CHECK(n.grad_touched, "reading gradient of untouched node");
  return n.grad;
}

Tensor& Tape::grad_mut(int32_t id) {
  Node& n = node(id);
  if (!n.grad_touched) {
    n.grad = Tensor(n.value.shape);
    n.grad_touched = true;
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (!n.grad_touched) return Tensor(n.value.shape);
  return n.grad;
}

void Tape::backward(Var loss) {
  ECNET_CHECK(loss.tape == this, "backward: loss lives on a different tape");
  Node& ln = node(loss.id);
  ECNET_CHECK(ln.value.numel() == 1, "backward: loss must be scalar, got shape " +
                                         shape_str(ln.value.shape));
  grad_mut(loss.id).data[0] = 1.0;
  for (int32_t id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (n.requires_grad && n.grad_touched && n.back) n.back(*this);
  }
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  ECNET_CHECK(a.tape != nullptr && a.tape == b.tape,
              std::string(op) + ": operands live on different tapes");
  return *a.tape;
}

struct AxisDims {
  int64_t outer, mid, inner;
};

AxisDims axis_dims(const Shape& s, int axis) {
  ECNET_CHECK(axis >= 0 && axis < static_cast<int>(s.size()),
              "axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  AxisDims d{1, s[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) d.outer *= s[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) d.inner *= s[i];
  return d;
}

Shape erase_axis(Shape s, int axis) {
  s.erase(s.begin() + axis);
  return s;
}

// C[M,N] += A[M,K] * B[K,N]
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double av = arow[p];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,K] += A[M,N] * B[K,N]^T
void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double s = 0.0;
      for (int64_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      crow[p] += s;
    }
  }
}

// C[K,N] += A[M,K]^T * B[M,N]
void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double av = arow[p];
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

using BinaryFwd = double (*)(double, double);

Var binary_same_shape(Var a, Var b, const char* name, BinaryFwd fwd,
                      void (*back)(Tape&, int32_t, int32_t, int32_t)) {
  Tape& t = same_tape(a, b, name);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  ECNET_CHECK(av.shape == bv.shape, std::string(name) + ": shape mismatch " +
                                        shape_str(av.shape) + " vs " + shape_str(bv.shape));
  Tensor out(av.shape);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = fwd(av.data[i], bv.data[i]);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t aid = a.id, bid = b.id, oid = o.id;
    t.set_back(o, [aid, bid, oid, back](Tape& tp) { back(tp, aid, bid, oid); });
  }
  return o;
}

}  // namespace

Var add(Var a, Var b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](Tape& tp, int32_t aid, int32_t bid, int32_t oid) {
        const Tensor& g = tp.grad_of(oid);
        if (tp.requires_grad_id(aid)) {
          Tensor& ga = tp.grad_mut(aid);
          for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
        }
        if (tp.requires_grad_id(bid)) {
          Tensor& gb = tp.grad_mut(bid);
          for (int64_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
        }
      });
}

Var sub(Var a, Var b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](Tape& tp, int32_t aid, int32_t bid, int32_t oid) {
        const Tensor& g = tp.grad_of(oid);
        if (tp.requires_grad_id(aid)) {
          Tensor& ga = tp.grad_mut(aid);
          for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
        }
        if (tp.requires_grad_id(bid)) {
          Tensor& gb = tp.grad_mut(bid);
          for (int64_t i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
        }
      });
}

Var mul(Var a, Var b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](Tape& tp, int32_t aid, int32_t bid, int32_t oid) {
        const Tensor& g = tp.grad_of(oid);
        const Tensor& av = tp.val_of(aid);
        const Tensor& bv = tp.val_of(bid);
        if (tp.requires_grad_id(aid)) {
          Tensor& ga = tp.grad_mut(aid);
          for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * bv.data[i];
        }
        if (tp.requires_grad_id(bid)) {
          Tensor& gb = tp.grad_mut(bid);
          for (int64_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * av.data[i];
        }
      });
}

namespace {

Var unary(Var a, const char* /*name*/, const std::function<double(double)>& fwd,
          const std::function<double(double, double)>& dydx /* (x, y) -> dy/dx */) {
  Tape& t = *a.tape;
  const Tensor& av = t.value(a);
  Tensor out(av.shape);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = fwd(av.data[i]);
  bool rg = t.requires_grad(a);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t aid = a.id, oid = o.id;
    t.set_back(o, [aid, oid, dydx](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      const Tensor& x = tp.val_of(aid);
      const Tensor& y = tp.val_of(oid);
      Tensor& ga = tp.grad_mut(aid);
      for (int64_t i = 0; i < g.numel(); ++i)
        ga.data[i] += g.data[i] * dydx(x.data[i], y.data[i]);
    });
  }
  return o;
}

}  // namespace

Var neg(Var a) {
  return unary(
      a, "neg", [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(Var a, double c) {
  return unary(
      a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(
      a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var reciprocal(Var a) {
  return unary(
      a, "reciprocal", [](double x) { return 1.0 / x; },
      [](double, double y) { return -y * y; });
}

Var sqrt_op(Var a, double smoothing) {
  return unary(
      a, "sqrt", [smoothing](double x) { return std::sqrt(x + smoothing); },
      [](double, double y) { return 0.5 / y; });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  return unary(
      a, "gelu", [=](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [=](double x, double) {
        double phi_cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        double phi_pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
        return phi_cdf + x * phi_pdf;
      });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  ECNET_CHECK(av.rank() == 2 && bv.rank() == 2 && av.shape[1] == bv.shape[0],
              "matmul: incompatible shapes " + shape_str(av.shape) + " x " +
                  shape_str(bv.shape));
  int64_t m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out({m, n});
  gemm_nn(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t aid = a.id, bid = b.id, oid = o.id;
    t.set_back(o, [aid, bid, oid, m, k, n](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      if (tp.requires_grad_id(aid))
        gemm_nt(g.data.data(), tp.val_of(bid).data.data(), tp.grad_mut(aid).data.data(), m, n,
                k);
      if (tp.requires_grad_id(bid))
        gemm_tn(tp.val_of(aid).data.data(), g.data.data(), tp.grad_mut(bid).data.data(), m, k,
                n);
    });
  }
  return o;
}

Var add_bias(Var x, Var b) {
  Tape& t = same_tape(x, b, "add_bias");
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(b);
  ECNET_CHECK(bv.rank() == 1 && xv.rank() >= 1 && xv.shape.back() == bv.shape[0],
              "add_bias: bias " + shape_str(bv.shape) + " does not match last axis of " +
                  shape_str(xv.shape));
  int64_t c = bv.shape[0];
  int64_t rows = xv.numel() / c;
  Tensor out = xv;
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < c; ++j) out.data[r * c + j] += bv.data[j];
  bool rg = t.requires_grad(x) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, bid = b.id, oid = o.id;
    t.set_back(o, [xid, bid, oid, rows, c](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      if (tp.requires_grad_id(xid)) {
        Tensor& gx = tp.grad_mut(xid);
        for (int64_t i = 0; i < g.numel(); ++i) gx.data[i] += g.data[i];
      }
      if (tp.requires_grad_id(bid)) {
        Tensor& gb = tp.grad_mut(bid);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < c; ++j) gb.data[j] += g.data[r * c + j];
      }
    });
  }
  return o;
}

Var reshape(Var x, Shape s) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  ECNET_CHECK(Tensor::numel_of(s) == xv.numel(),
              "reshape: cannot view " + shape_str(xv.shape) + " as " + shape_str(s));
  Tensor out(std::move(s), xv.data);
  bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = o.id;
    t.set_back(o, [xid, oid](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t i = 0; i < g.numel(); ++i) gx.data[i] += g.data[i];
    });
  }
  return o;
}

Var concat_last(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_last");
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  ECNET_CHECK(av.rank() == bv.rank() && av.rank() >= 1,
              "concat_last: rank mismatch " + shape_str(av.shape) + " vs " +
                  shape_str(bv.shape));
  for (int64_t i = 0; i + 1 < av.rank(); ++i)
    ECNET_CHECK(av.shape[static_cast<size_t>(i)] == bv.shape[static_cast<size_t>(i)],
                "concat_last: leading dims differ, " + shape_str(av.shape) + " vs " +
                    shape_str(bv.shape));
  int64_t ca = av.shape.back(), cb = bv.shape.back();
  int64_t rows = av.numel() / std::max<int64_t>(ca, 1);
  Shape os = av.shape;
  os.back() = ca + cb;
  Tensor out(os);
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(&av.data[static_cast<size_t>(r * ca)], ca,
                &out.data[static_cast<size_t>(r * (ca + cb))]);
    std::copy_n(&bv.data[static_cast<size_t>(r * cb)], cb,
                &out.data[static_cast<size_t>(r * (ca + cb) + ca)]);
  }
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t aid = a.id, bid = b.id, oid = o.id;
    t.set_back(o, [aid, bid, oid, rows, ca, cb](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      if (tp.requires_grad_id(aid)) {
        Tensor& ga = tp.grad_mut(aid);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < ca; ++j) ga.data[r * ca + j] += g.data[r * (ca + cb) + j];
      }
      if (tp.requires_grad_id(bid)) {
        Tensor& gb = tp.grad_mut(bid);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < cb; ++j)
            gb.data[r * cb + j] += g.data[r * (ca + cb) + ca + j];
      }
    });
  }
  return o;
}

Var gather_rows(Var x, std::vector<int64_t> idx) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  ECNET_CHECK(xv.rank() >= 1, "gather_rows: rank-0 input");
  int64_t n = xv.shape[0];
  int64_t rowsz = n > 0 ? xv.numel() / n : 0;
  for (int64_t i : idx)
    ECNET_CHECK(i >= 0 && i < n, "gather_rows: index " + std::to_string(i) +
                                     " out of range [0," + std::to_string(n) + ")");
  Shape os = xv.shape;
  os[0] = static_cast<int64_t>(idx.size());
  Tensor out(os);
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy_n(&xv.data[static_cast<size_t>(idx[r] * rowsz)], rowsz,
                &out.data[r * static_cast<size_t>(rowsz)]);
  bool rg = t.requires_grad(x);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = o.id;
    t.set_back(o, [xid, oid, idx = std::move(idx), rowsz](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (size_t r = 0; r < idx.size(); ++r) {
        const double* src = &g.data[r * static_cast<size_t>(rowsz)];
        double* dst = &gx.data[static_cast<size_t>(idx[r] * rowsz)];
        for (int64_t j = 0; j < rowsz; ++j) dst[j] += src[j];
      }
    });
  }
  return o;
}

Var expand_axis(Var x, int axis, int64_t n) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  ECNET_CHECK(axis >= 0 && axis <= static_cast<int>(xv.shape.size()),
              "expand_axis: axis out of range");
  ECNET_CHECK(n >= 1, "expand_axis: repeat count must be >= 1");
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= xv.shape[static_cast<size_t>(i)];
  int64_t inner = xv.numel() / std::max<int64_t>(outer, 1);
  Shape os = xv.shape;
  os.insert(os.begin() + axis, n);
  Tensor out(os);
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t r = 0; r < n; ++r)
      std::copy_n(&xv.data[static_cast<size_t>(o * inner)], inner,
                  &out.data[static_cast<size_t>((o * n + r) * inner)]);
  bool rg = t.requires_grad(x);
  Var ov = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = ov.id;
    t.set_back(ov, [xid, oid, outer, n, inner](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t r = 0; r < n; ++r) {
          const double* src = &g.data[static_cast<size_t>((o * n + r) * inner)];
          double* dst = &gx.data[static_cast<size_t>(o * inner)];
          for (int64_t j = 0; j < inner; ++j) dst[j] += src[j];
        }
    });
  }
  return ov;
}

Var sum_axis(Var x, int axis) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  AxisDims d = axis_dims(xv.shape, axis);
  Tensor out(erase_axis(xv.shape, axis));
  for (int64_t o = 0; o < d.outer; ++o)
    for (int64_t m = 0; m < d.mid; ++m) {
      const double* src = &xv.data[static_cast<size_t>((o * d.mid + m) * d.inner)];
      double* dst = &out.data[static_cast<size_t>(o * d.inner)];
      for (int64_t j = 0; j < d.inner; ++j) dst[j] += src[j];
    }
  bool rg = t.requires_grad(x);
  Var ov = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = ov.id;
    t.set_back(ov, [xid, oid, d](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t o = 0; o < d.outer; ++o)
        for (int64_t m = 0; m < d.mid; ++m) {
          const double* src = &g.data[static_cast<size_t>(o * d.inner)];
          double* dst = &gx.data[static_cast<size_t>((o * d.mid + m) * d.inner)];
          for (int64_t j = 0; j < d.inner; ++j) dst[j] += src[j];
        }
    });
  }
  return ov;
}

Var mean_axis(Var x, int axis) {
  const Tensor& xv = x.tape->value(x);
  AxisDims d = axis_dims(xv.shape, axis);
  ECNET_CHECK(d.mid > 0, "mean_axis: empty axis");
  return scale(sum_axis(x, axis), 1.0 / static_cast<double>(d.mid));
}

Var max_axis(Var x, int axis) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  AxisDims d = axis_dims(xv.shape, axis);
  ECNET_CHECK(d.mid > 0, "max_axis: empty axis");
  Tensor out(erase_axis(xv.shape, axis));
  std::vector<int64_t> arg(static_cast<size_t>(d.outer * d.inner), 0);
  for (int64_t o = 0; o < d.outer; ++o)
    for (int64_t j = 0; j < d.inner; ++j) {
      double best = xv.data[static_cast<size_t>(o * d.mid * d.inner + j)];
      int64_t bi = 0;
      for (int64_t m = 1; m < d.mid; ++m) {
        double v = xv.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)];
        if (v > best) {
          best = v;
          bi = m;
        }
      }
      out.data[static_cast<size_t>(o * d.inner + j)] = best;
      arg[static_cast<size_t>(o * d.inner + j)] = bi;
    }
  bool rg = t.requires_grad(x);
  Var ov = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = ov.id;
    t.set_back(ov, [xid, oid, d, arg = std::move(arg)](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t o = 0; o < d.outer; ++o)
        for (int64_t j = 0; j < d.inner; ++j) {
          int64_t m = arg[static_cast<size_t>(o * d.inner + j)];
          gx.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)] +=
              g.data[static_cast<size_t>(o * d.inner + j)];
        }
    });
  }
  return ov;
}

Var softmax_axis(Var x, int axis) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  AxisDims d = axis_dims(xv.shape, axis);
  ECNET_CHECK(d.mid > 0, "softmax_axis: empty axis");
  Tensor out(xv.shape);
  for (int64_t o = 0; o < d.outer; ++o)
    for (int64_t j = 0; j < d.inner; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t m = 0; m < d.mid; ++m)
        mx = std::max(mx, xv.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)]);
      double z = 0.0;
      for (int64_t m = 0; m < d.mid; ++m) {
        double e = std::exp(xv.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)] - mx);
        out.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)] = e;
        z += e;
      }
      for (int64_t m = 0; m < d.mid; ++m)
        out.data[static_cast<size_t>((o * d.mid + m) * d.inner + j)] /= z;
    }
  bool rg = t.requires_grad(x);
  Var ov = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, oid = ov.id;
    t.set_back(ov, [xid, oid, d](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      const Tensor& y = tp.val_of(oid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t o = 0; o < d.outer; ++o)
        for (int64_t j = 0; j < d.inner; ++j) {
          double dot = 0.0;
          for (int64_t m = 0; m < d.mid; ++m) {
            size_t ix = static_cast<size_t>((o * d.mid + m) * d.inner + j);
            dot += g.data[ix] * y.data[ix];
          }
          for (int64_t m = 0; m < d.mid; ++m) {
            size_t ix = static_cast<size_t>((o * d.mid + m) * d.inner + j);
            gx.data[ix] += y.data[ix] * (g.data[ix] - dot);
          }
        }
    });
  }
  return ov;
}

Var cross_entropy_logits(Var logits, int64_t label) {
  Tape& t = *logits.tape;
  const Tensor& lv = t.value(logits);
  ECNET_CHECK(lv.rank() == 1, "cross_entropy_logits: logits must be rank 1, got " +
                                  shape_str(lv.shape));
  int64_t c = lv.shape[0];
  ECNET_CHECK(label >= 0 && label < c,
              "cross_entropy_logits: label " + std::to_string(label) + " out of range [0," +
                  std::to_string(c) + ")");
  double mx = *std::max_element(lv.data.begin(), lv.data.end());
  double z = 0.0;
  for (double v : lv.data) z += std::exp(v - mx);
  double lse = mx + std::log(z);
  Tensor out = Tensor::scalar(lse - lv.data[static_cast<size_t>(label)]);
  bool rg = t.requires_grad(logits);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = logits.id, oid = o.id;
    t.set_back(o, [xid, oid, label, lse](Tape& tp) {
      double g = tp.grad_of(oid).data[0];
      const Tensor& x = tp.val_of(xid);
      Tensor& gx = tp.grad_mut(xid);
      for (int64_t i = 0; i < x.numel(); ++i) {
        double p = std::exp(x.data[i] - lse);
        gx.data[i] += g * (p - (i == label ? 1.0 : 0.0));
      }
    });
  }
  return o;
}

Var mse_loss(Var pred, Var target) {
  Tape& t = same_tape(pred, target, "mse_loss");
  const Tensor& pv = t.value(pred);
  const Tensor& tv = t.value(target);
  ECNET_CHECK(pv.shape == tv.shape, "mse_loss: shape mismatch " + shape_str(pv.shape) +
                                        " vs " + shape_str(tv.shape));
  int64_t n = pv.numel();
  ECNET_CHECK(n > 0, "mse_loss: empty tensors");
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double dl = pv.data[i] - tv.data[i];
    acc += dl * dl;
  }
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));
  bool rg = t.requires_grad(pred) || t.requires_grad(target);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t pid = pred.id, tid = target.id, oid = o.id;
    t.set_back(o, [pid, tid, oid, n](Tape& tp) {
      double g = tp.grad_of(oid).data[0] * 2.0 / static_cast<double>(n);
      const Tensor& p = tp.val_of(pid);
      const Tensor& tv2 = tp.val_of(tid);
      if (tp.requires_grad_id(pid)) {
        Tensor& gp = tp.grad_mut(pid);
        for (int64_t i = 0; i < n; ++i) gp.data[i] += g * (p.data[i] - tv2.data[i]);
      }
      if (tp.requires_grad_id(tid)) {
        Tensor& gt = tp.grad_mut(tid);
        for (int64_t i = 0; i < n; ++i) gt.data[i] -= g * (p.data[i] - tv2.data[i]);
      }
    });
  }
  return o;
}

GradCheckResult check_gradients(const ScalarFn& f, const std::vector<Tensor>& inputs,
                                double eps, double tol, int64_t max_coords_per_input,
                                uint64_t subsample_seed) {
  ECNET_CHECK(eps >= 1e-7 && eps <= 1e-4,
              "check_gradients: eps must lie in [1e-7, 1e-4]");
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& in : inputs) vars.push_back(tape.leaf(in, true));
  Var loss = f(tape, vars);
  ECNET_CHECK(tape.value(loss).numel() == 1, "check_gradients: f must return a scalar");
  double l0 = tape.value(loss).data[0];
  if (!std::isfinite(l0)) throw ContractError("check_gradients: non-finite loss value");
  tape.backward(loss);
  std::vector<Tensor> ad;
  ad.reserve(inputs.size());
  for (Var v : vars) ad.push_back(tape.grad(v));

  auto eval_loss = [&f](std::vector<Tensor>& xs) {
    Tape t2;
    std::vector<Var> vs;
    vs.reserve(xs.size());
    for (const Tensor& x : xs) vs.push_back(t2.leaf(x, false));
    Var l = f(t2, vs);
    double v = t2.value(l).data[0];
    if (!std::isfinite(v))
      throw ContractError("check_gradients: non-finite loss during finite differences");
    return v;
  };

  GradCheckResult res;
  std::vector<Tensor> work = inputs;
  for (size_t ii = 0; ii < inputs.size(); ++ii) {
    int64_t n = inputs[ii].numel();
    std::vector<int64_t> coords;
    if (max_coords_per_input > 0 && n > max_coords_per_input) {
      std::vector<int64_t> all(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
      Rng rng(subsample_seed + 0x9e3779b97f4a7c15ull * (ii + 1));
      rng.shuffle(all);
      coords.assign(all.begin(), all.begin() + static_cast<size_t>(max_coords_per_input));
    } else {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    }
    for (int64_t c : coords) {
      double orig = work[ii].data[c];
      work[ii].data[c] = orig + eps;
      double fp = eval_loss(work);
      work[ii].data[c] = orig - eps;
      double fm = eval_loss(work);
      work[ii].data[c] = orig;
      double fd = (fp - fm) / (2.0 * eps);
      double av = ad[ii].data[c];
      double rel = std::abs(av - fd) / std::max({1.0, std::abs(av), std::abs(fd)});
      ++res.coords_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = "input " + std::to_string(ii) + " coord " + std::to_string(c);
      }
    }
  }
  res.passed = res.max_rel_err <= tol;
  return res;
}

}  // namespace ecnet
