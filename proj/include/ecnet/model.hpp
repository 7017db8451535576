#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ecnet/events.hpp"
#include "ecnet/spectral.hpp"
#include "ecnet/tape.hpp"
#include "ecnet/tensor.hpp"

namespace ecnet {

enum class Task { classification, pose };

// Architecture description. Stage feature widths follow the recurrence
// width[s+1] = 2*width[s] + coord_width and group counts halve per stage.
struct NetworkConfig {
  int stages = 3;
  int64_t points = 1024;       // events per input cloud (T)
  int64_t embed_dim = 64;
  int64_t groups_stage1 = 512;
  int64_t k = 24;
  std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};
  std::vector<std::array<double, 4>> alpha_per_stage;  // optional, size == stages
  Task task = Task::classification;
  int64_t classes = 10;
  int64_t joints = 13;
  Activation act = Activation::gelu;
  int64_t head_hidden = 256;

  // ablation switches
  bool point_based_gs = false;
  bool no_temporal_fa = false;
  bool no_polarity = false;

  int64_t coord_width() const { return no_polarity ? 3 : 4; }
  int64_t output_dim() const {
    return task == Task::classification ? classes : joints * 2;
  }
  // widths[0] is the embedding width, widths[s+1] the output of stage s+1
  std::vector<int64_t> stage_widths() const;
  std::vector<int64_t> stage_groups() const;
  std::array<double, 4> stage_alpha(int stage) const;
  // Throws ContractError naming the offending stage when the schedule cannot
  // be built (too few points, k too large, empty stage).
  void validate() const;
};

// Named parameter set. Iteration order (lexicographic) fixes checkpoint and
// update order.
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  int64_t total_scalars() const;
};

// Decoupled weight decay applies to dense weight matrices only, not biases
// and not spectral filters.
bool weight_decay_applies(const std::string& name);

ModelParams init_params(const NetworkConfig& cfg, uint64_t seed);

struct ModelOutput {
  Tensor logits;  // [classes] or [joints*2]
};

// Builds the full pipeline on the tape: embedding, per stage the event
// grouping + spatial mixing + neighbor aggregation + temporal mixing +
// residual refinement, then mean||max pooling and the task head.
Var forward_tape(Tape& tape, const EventCloud& cloud, const NetworkConfig& cfg,
                 const std::map<std::string, Var>& params);

ModelOutput forward(const EventCloud& cloud, const NetworkConfig& cfg,
                    const ModelParams& params);

// Registers every parameter tensor as a tape leaf.
std::map<std::string, Var> params_on_tape(Tape& tape, const ModelParams& params,
                                          bool requires_grad);

// MACs accounting. Conventions: learnable layers only (distance computations
// in sampling/grouping are excluded); a dense channel mix costs C^2 per
// vector; the frequency route costs C*log2(C) per vector for the channel mix
// and N*log2(N) per channel for the time mix; biases and activations are free.
// The conv_baseline variant replaces both frequency modules by dense C^2
// mixes applied to the same tensors.
struct MacsBreakdown {
  struct Row {
    std::string name;
    double freq = 0.0;
    double conv = 0.0;
  };
  std::vector<Row> rows;
  double total_freq = 0.0;
  double total_conv = 0.0;
  double ratio = 0.0;
};

MacsBreakdown count_macs(const NetworkConfig& cfg);

}  // namespace ecnet
