#pragma once

#include <cstdint>

#include "ecnet/tape.hpp"

namespace ecnet {

enum class Activation { gelu, relu, identity };

Var apply_activation(Var x, Activation act);

// Frequency mixing over the last (channel) axis: per vector, one-sided DFT,
// Hadamard product with the learnable complex filter (v_re, v_im of length
// floor(C/2)+1), inverse DFT, then the activation. Gradients reach the input
// and both filter parts.
Var spatial_fa(Var x, Var v_re, Var v_im, Activation act);

// Frequency mixing over the leading (time) axis of an [N,C] map with a
// per-channel filter of shape [floor(N/2)+1, C].
Var temporal_fa(Var x, Var v_re, Var v_im, Activation act);

// All-pass near-identity filter initialisation: real 1 + noise, imag noise.
void init_filter(Tensor& re, Tensor& im, class Rng& rng, double noise = 0.02);

struct MacsSingleOp {
  double conv_macs = 0.0;
  double freq_macs = 0.0;
  double ratio = 0.0;
};

// Cost of one channel-mixing op at width C: C^2 for a dense convolution
// versus C*log2(C) for the frequency route.
MacsSingleOp macs_single_op(int64_t c);

}  // namespace ecnet
