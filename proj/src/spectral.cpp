#include "ecnet/spectral.hpp"

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "ecnet/dft.hpp"
#include "ecnet/rng.hpp"

namespace ecnet {

namespace {

using Cplx = std::complex<double>;

// contribution weight of one-sided bin k when reassembling a real signal
double bin_weight(size_t k, size_t len, size_t bins) {
  if (k == 0) return 1.0;
  if (len % 2 == 0 && k == bins - 1) return 1.0;
  return 2.0;
}

// Shared forward/backward machinery for both mixing directions. Vectors are
// described by (count, length, stride, base-offset step); spatial mixing uses
// contiguous rows, temporal mixing uses columns.
struct VectorLayout {
  int64_t count;   // number of independent signals
  int64_t length;  // signal length L
  // element i of signal v lives at data[v * vec_step + i * elem_stride]
  int64_t vec_step;
  int64_t elem_stride;
};

void gather_signal(const double* data, const VectorLayout& lay, int64_t v, double* out) {
  const double* p = data + v * lay.vec_step;
  for (int64_t i = 0; i < lay.length; ++i) out[i] = p[i * lay.elem_stride];
}

void scatter_signal(double* data, const VectorLayout& lay, int64_t v, const double* in,
                    bool accumulate) {
  double* p = data + v * lay.vec_step;
  for (int64_t i = 0; i < lay.length; ++i) {
    if (accumulate)
      p[i * lay.elem_stride] += in[i];
    else
      p[i * lay.elem_stride] = in[i];
  }
}

// filter_index(v, k): which (re, im) parameter coordinate filters bin k of
// signal v. Spatial filters are shared across vectors; temporal filters are
// per channel.
Var spectral_mix(Var x, Var v_re, Var v_im, const VectorLayout& lay,
                 const std::function<int64_t(int64_t, int64_t)>& filter_index) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  const Tensor& re = t.value(v_re);
  const Tensor& im = t.value(v_im);
  const Dft& plan = dft_plan(static_cast<size_t>(lay.length));
  const int64_t bins = static_cast<int64_t>(plan.bins());

  Tensor out(xv.shape);
  auto spectra = std::make_shared<std::vector<Cplx>>(
      static_cast<size_t>(lay.count * bins));  // saved for backward
  std::vector<double> sig(static_cast<size_t>(lay.length));
  std::vector<Cplx> filtered(static_cast<size_t>(bins));
  for (int64_t v = 0; v < lay.count; ++v) {
    gather_signal(xv.data.data(), lay, v, sig.data());
    Cplx* spec = spectra->data() + v * bins;
    plan.forward(sig.data(), spec);
    for (int64_t k = 0; k < bins; ++k) {
      int64_t fi = filter_index(v, k);
      filtered[static_cast<size_t>(k)] = Cplx(re.data[fi], im.data[fi]) * spec[k];
    }
    plan.inverse(filtered.data(), sig.data());
    scatter_signal(out.data.data(), lay, v, sig.data(), false);
  }

  bool rg = t.requires_grad(x) || t.requires_grad(v_re) || t.requires_grad(v_im);
  Var o = t.emit(std::move(out), rg);
  if (rg) {
    int32_t xid = x.id, rid = v_re.id, iid = v_im.id, oid = o.id;
    t.set_back(o, [xid, rid, iid, oid, lay, filter_index, spectra](Tape& tp) {
      const Tensor& g = tp.grad_of(oid);
      const Tensor& re2 = tp.val_of(rid);
      const Tensor& im2 = tp.val_of(iid);
      const Dft& plan2 = dft_plan(static_cast<size_t>(lay.length));
      const int64_t bins2 = static_cast<int64_t>(plan2.bins());
      const size_t blen = static_cast<size_t>(bins2);
      const double inv_len = 1.0 / static_cast<double>(lay.length);

      const bool need_x = tp.requires_grad_id(xid);
      const bool need_re = tp.requires_grad_id(rid);
      const bool need_im = tp.requires_grad_id(iid);
      Tensor* gx = need_x ? &tp.grad_mut(xid) : nullptr;
      Tensor* gre = need_re ? &tp.grad_mut(rid) : nullptr;
      Tensor* gim = need_im ? &tp.grad_mut(iid) : nullptr;

      std::vector<double> sig(static_cast<size_t>(lay.length));
      std::vector<Cplx> gspec(blen), tmp(blen);
      for (int64_t v = 0; v < lay.count; ++v) {
        gather_signal(g.data.data(), lay, v, sig.data());
        plan2.forward(sig.data(), gspec.data());
        const Cplx* spec = spectra->data() + v * bins2;
        if (need_re || need_im) {
          for (int64_t k = 0; k < bins2; ++k) {
            double w = bin_weight(static_cast<size_t>(k), static_cast<size_t>(lay.length),
                                  static_cast<size_t>(bins2)) *
                       inv_len;
            const Cplx& s = spec[k];
            const Cplx& gk = gspec[static_cast<size_t>(k)];
            int64_t fi = filter_index(v, k);
            if (need_re)
              gre->data[fi] += w * (s.real() * gk.real() + s.imag() * gk.imag());
            if (need_im)
              gim->data[fi] += w * (s.real() * gk.imag() - s.imag() * gk.real());
          }
        }
        if (need_x) {
          // adjoint of the filtering map: conjugate filter in the spectrum
          for (int64_t k = 0; k < bins2; ++k) {
            int64_t fi = filter_index(v, k);
            tmp[static_cast<size_t>(k)] =
                std::conj(Cplx(re2.data[fi], im2.data[fi])) * gspec[static_cast<size_t>(k)];
          }
          plan2.inverse(tmp.data(), sig.data());
          scatter_signal(gx->data.data(), lay, v, sig.data(), true);
        }
      }
    });
  }
  return o;
}

}  // namespace

Var apply_activation(Var x, Activation act) {
  switch (act) {
    case Activation::gelu:
      return gelu(x);
    case Activation::relu:
      return relu(x);
    case Activation::identity:
      return x;
  }
  throw ContractError("unknown activation");
}

Var spatial_fa(Var x, Var v_re, Var v_im, Activation act) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  ECNET_CHECK(xv.rank() >= 1, "spatial_fa: rank-0 input");
  const int64_t c = xv.shape.back();
  const int64_t bins = c / 2 + 1;
  const Tensor& re = t.value(v_re);
  const Tensor& im = t.value(v_im);
  ECNET_CHECK(re.numel() == bins && im.numel() == bins,
              "spatial_fa: filter has " + std::to_string(re.numel()) + " bins, expected " +
                  std::to_string(bins) + " for channel width " + std::to_string(c));
  VectorLayout lay{xv.numel() / c, c, c, 1};
  Var mixed = spectral_mix(x, v_re, v_im, lay, [](int64_t, int64_t k) { return k; });
  return apply_activation(mixed, act);
}

Var temporal_fa(Var x, Var v_re, Var v_im, Activation act) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  ECNET_CHECK(xv.rank() == 2, "temporal_fa: expected [N,C] input, got " + shape_str(xv.shape));
  const int64_t n = xv.shape[0];
  const int64_t c = xv.shape[1];
  const int64_t bins = n / 2 + 1;
  const Tensor& re = t.value(v_re);
  ECNET_CHECK(re.rank() == 2 && re.shape[0] == bins && re.shape[1] == c,
              "temporal_fa: filter shape " + shape_str(re.shape) + " does not match [" +
                  std::to_string(bins) + "," + std::to_string(c) + "]");
  ECNET_CHECK(t.value(v_im).shape == re.shape, "temporal_fa: re/im filter shapes differ");
  // vector v is channel column v: elements stride C apart, filters indexed [k, v]
  VectorLayout lay{c, n, 1, c};
  Var mixed = spectral_mix(x, v_re, v_im, lay,
                           [c](int64_t v, int64_t k) { return k * c + v; });
  return apply_activation(mixed, act);
}

void init_filter(Tensor& re, Tensor& im, Rng& rng, double noise) {
  for (auto& v : re.data) v = 1.0 + rng.normal(0.0, noise);
  for (auto& v : im.data) v = rng.normal(0.0, noise);
}

MacsSingleOp macs_single_op(int64_t c) {
  ECNET_CHECK(c >= 2, "macs_single_op: channel width must be >= 2");
  MacsSingleOp m;
  m.conv_macs = static_cast<double>(c) * static_cast<double>(c);
  m.freq_macs = static_cast<double>(c) * std::log2(static_cast<double>(c));
  m.ratio = m.conv_macs / m.freq_macs;
  return m;
}

}  // namespace ecnet
