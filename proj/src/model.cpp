#include "ecnet/model.hpp"

#include <algorithm>
#include <cmath>

#include "ecnet/geometry.hpp"
#include "ecnet/rng.hpp"

namespace ecnet {

std::vector<int64_t> NetworkConfig::stage_widths() const {
  std::vector<int64_t> w{embed_dim};
  for (int s = 0; s < stages; ++s) w.push_back(2 * w.back() + coord_width());
  return w;
}

std::vector<int64_t> NetworkConfig::stage_groups() const {
  std::vector<int64_t> g;
  for (int s = 0; s < stages; ++s) g.push_back(groups_stage1 >> s);
  return g;
}

std::array<double, 4> NetworkConfig::stage_alpha(int stage) const {
  if (!alpha_per_stage.empty()) {
    ECNET_CHECK(static_cast<int>(alpha_per_stage.size()) == stages,
                "alpha_per_stage must list one vector per stage");
    return alpha_per_stage[static_cast<size_t>(stage)];
  }
  return alpha;
}

void NetworkConfig::validate() const {
  ECNET_CHECK(stages >= 1, "network needs at least one stage");
  ECNET_CHECK(points >= 1, "points must be positive");
  ECNET_CHECK(embed_dim >= 1, "embed_dim must be positive");
  ECNET_CHECK(k >= 1, "k must be positive");
  ECNET_CHECK(groups_stage1 >= 1, "groups_stage1 must be positive");
  ECNET_CHECK(output_dim() >= 1, "head output dimension must be positive");
  std::vector<int64_t> g = stage_groups();
  int64_t avail = points;
  for (int s = 0; s < stages; ++s) {
    ECNET_CHECK(g[static_cast<size_t>(s)] >= 1,
                "stage " + std::to_string(s + 1) + ": group count vanished (halving from " +
                    std::to_string(groups_stage1) + ")");
    ECNET_CHECK(g[static_cast<size_t>(s)] <= avail,
                "stage " + std::to_string(s + 1) + ": " +
                    std::to_string(g[static_cast<size_t>(s)]) + " groups from only " +
                    std::to_string(avail) + " points");
    ECNET_CHECK(k <= avail, "stage " + std::to_string(s + 1) + ": k=" + std::to_string(k) +
                                " exceeds " + std::to_string(avail) + " available points");
    avail = g[static_cast<size_t>(s)];
  }
  // the width recurrence is structural; recompute and assert it
  std::vector<int64_t> w = stage_widths();
  for (int s = 0; s + 1 < static_cast<int>(w.size()); ++s)
    ECNET_CHECK(w[static_cast<size_t>(s) + 1] ==
                    2 * w[static_cast<size_t>(s)] + coord_width(),
                "width recurrence violated");
}

int64_t ModelParams::total_scalars() const {
  int64_t n = 0;
  for (const auto& [name, t] : tensors) n += t.numel();
  return n;
}

bool weight_decay_applies(const std::string& name) {
  auto ends_with = [&name](const char* suf) {
    std::string s(suf);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return ends_with(".w") || ends_with(".w1") || ends_with(".w2");
}

namespace {

Tensor dense_init(Rng& rng, int64_t in_dim, int64_t out_dim) {
  Tensor w({in_dim, out_dim});
  double std = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& v : w.data) v = rng.normal(0.0, std);
  return w;
}

std::string stage_prefix(int s) { return "stage" + std::to_string(s + 1) + "."; }

}  // namespace

ModelParams init_params(const NetworkConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams p;
  const auto widths = cfg.stage_widths();
  const auto groups = cfg.stage_groups();

  p.tensors["embed.w"] = dense_init(rng, cfg.coord_width(), cfg.embed_dim);
  p.tensors["embed.b"] = Tensor({cfg.embed_dim});

  for (int s = 0; s < cfg.stages; ++s) {
    const std::string pre = stage_prefix(s);
    const int64_t c = widths[static_cast<size_t>(s) + 1];
    const int64_t g = groups[static_cast<size_t>(s)];
    Tensor sre({c / 2 + 1}), sim({c / 2 + 1});
    init_filter(sre, sim, rng);
    p.tensors[pre + "sfa.vre"] = std::move(sre);
    p.tensors[pre + "sfa.vim"] = std::move(sim);
    p.tensors[pre + "agg.w"] = dense_init(rng, c, 1);
    p.tensors[pre + "agg.b"] = Tensor({1});
    if (!cfg.no_temporal_fa) {
      Tensor tre({g / 2 + 1, c}), tim({g / 2 + 1, c});
      init_filter(tre, tim, rng);
      p.tensors[pre + "tfa.vre"] = std::move(tre);
      p.tensors[pre + "tfa.vim"] = std::move(tim);
    }
    const int64_t hidden = c / 2;
    p.tensors[pre + "res.w1"] = dense_init(rng, c, hidden);
    p.tensors[pre + "res.b1"] = Tensor({hidden});
    p.tensors[pre + "res.w2"] = dense_init(rng, hidden, c);
    p.tensors[pre + "res.b2"] = Tensor({c});
  }

  const int64_t pooled = 2 * widths.back();
  p.tensors["head.w1"] = dense_init(rng, pooled, cfg.head_hidden);
  p.tensors["head.b1"] = Tensor({cfg.head_hidden});
  p.tensors["head.w2"] = dense_init(rng, cfg.head_hidden, cfg.output_dim());
  p.tensors["head.b2"] = Tensor({cfg.output_dim()});
  return p;
}

std::map<std::string, Var> params_on_tape(Tape& tape, const ModelParams& params,
                                          bool requires_grad) {
  std::map<std::string, Var> out;
  for (const auto& [name, t] : params.tensors) out.emplace(name, tape.leaf(t, requires_grad));
  return out;
}

namespace {

const Var& param(const std::map<std::string, Var>& params, const std::string& name) {
  auto it = params.find(name);
  ECNET_CHECK(it != params.end(), "missing parameter \"" + name + "\"");
  return it->second;
}

Var linear(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }

// Strips the polarity column for coordinate-space neighbor search.
Tensor spatial_coords(const Tensor& coords) {
  const int64_t n = coords.shape[0];
  Tensor out({n, 3});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < 3; ++j) out.at(i, j) = coords.at(i, j);
  return out;
}

}  // namespace

Var forward_tape(Tape& tape, const EventCloud& cloud, const NetworkConfig& cfg,
                 const std::map<std::string, Var>& params) {
  cfg.validate();
  ECNET_CHECK(cloud.coords.rank() == 2 && cloud.coords.shape[1] == 4,
              "forward: cloud coords must be [T,4]");
  ECNET_CHECK(cloud.length >= cfg.groups_stage1,
              "forward: stage 1 needs " + std::to_string(cfg.groups_stage1) +
                  " groups but the cloud has " + std::to_string(cloud.length) + " points");
  ECNET_CHECK(cloud.length == cfg.points,
              "forward: cloud length " + std::to_string(cloud.length) +
                  " does not match configured points " + std::to_string(cfg.points));

  const int64_t cw = cfg.coord_width();
  Tensor coords = cloud.coords;
  if (cfg.no_polarity) coords = spatial_coords(coords);

  // embedding: pointwise map coord_width -> embed_dim
  Var features = apply_activation(
      linear(tape.constant(coords), param(params, "embed.w"), param(params, "embed.b")),
      cfg.act);

  const auto groups = cfg.stage_groups();
  for (int s = 0; s < cfg.stages; ++s) {
    const std::string pre = stage_prefix(s);
    const int64_t g = groups[static_cast<size_t>(s)];
    const int64_t k = cfg.k;
    const int64_t d = tape.value(features).shape[1];

    // centroid selection; indices re-sorted so stage outputs stay chronological
    std::array<double, 4> alpha4 = cfg.stage_alpha(s);
    std::vector<double> alpha(alpha4.begin(), alpha4.begin() + cw);
    if (cfg.point_based_gs) std::fill(alpha.begin(), alpha.end(), 1.0);
    std::vector<int64_t> cent = d_fps(coords, alpha, g);
    std::sort(cent.begin(), cent.end());

    Tensor cent_coords = gather_rows_tensor(coords, cent);
    Var cent_feats = gather_rows(features, cent);

    // neighbor search in feature space (coordinate space for the ablation,
    // polarity excluded from the distance)
    std::vector<int64_t> nbr;
    if (cfg.point_based_gs) {
      nbr = ef_knn(spatial_coords(cent_coords), spatial_coords(coords), k);
    } else {
      nbr = ef_knn(tape.value(cent_feats), tape.value(features), k);
    }

    Tensor group_coords = gather_rows_tensor(coords, nbr);
    group_coords.shape = {g, k, cw};
    Var group_feats = reshape(gather_rows(features, nbr), {g, k, d});

    Var grouped = build_group_features(group_feats, group_coords, cent_feats);
    const int64_t c = 2 * d + cw;

    Var mixed = spatial_fa(grouped, param(params, pre + "sfa.vre"),
                           param(params, pre + "sfa.vim"), cfg.act);

    // soft attention over the k neighbors of each group
    Var scores = reshape(
        linear(reshape(mixed, {g * k, c}), param(params, pre + "agg.w"),
               param(params, pre + "agg.b")),
        {g, k});
    Var attn = softmax_axis(scores, 1);
    Var aggregated = sum_axis(mul(mixed, expand_axis(attn, 2, c)), 1);

    Var temporal = cfg.no_temporal_fa
                       ? aggregated
                       : temporal_fa(aggregated, param(params, pre + "tfa.vre"),
                                     param(params, pre + "tfa.vim"), cfg.act);

    Var hidden = apply_activation(
        linear(temporal, param(params, pre + "res.w1"), param(params, pre + "res.b1")),
        cfg.act);
    Var refined = add(
        temporal, linear(hidden, param(params, pre + "res.w2"), param(params, pre + "res.b2")));

    coords = evolve_coords(group_coords);
    features = refined;
  }

  Var pooled = concat_last(mean_axis(features, 0), max_axis(features, 0));
  Var head_in = reshape(pooled, {1, tape.value(pooled).shape[0]});
  Var head_hidden = apply_activation(
      linear(head_in, param(params, "head.w1"), param(params, "head.b1")), cfg.act);
  Var out = linear(head_hidden, param(params, "head.w2"), param(params, "head.b2"));
  return reshape(out, {cfg.output_dim()});
}

ModelOutput forward(const EventCloud& cloud, const NetworkConfig& cfg,
                    const ModelParams& params) {
  Tape tape;
  auto vars = params_on_tape(tape, params, false);
  Var out = forward_tape(tape, cloud, cfg, vars);
  return ModelOutput{tape.value(out)};
}

MacsBreakdown count_macs(const NetworkConfig& cfg) {
  cfg.validate();
  MacsBreakdown b;
  auto push = [&b](const std::string& name, double freq, double conv) {
    b.rows.push_back({name, freq, conv});
    b.total_freq += freq;
    b.total_conv += conv;
  };

  const auto widths = cfg.stage_widths();
  const auto groups = cfg.stage_groups();
  const double embed =
      static_cast<double>(cfg.points) * static_cast<double>(cfg.coord_width()) *
      static_cast<double>(cfg.embed_dim);
  push("embed", embed, embed);

  for (int s = 0; s < cfg.stages; ++s) {
    const std::string pre = stage_prefix(s);
    const double g = static_cast<double>(groups[static_cast<size_t>(s)]);
    const double k = static_cast<double>(cfg.k);
    const double c = static_cast<double>(widths[static_cast<size_t>(s) + 1]);

    MacsSingleOp op = macs_single_op(static_cast<int64_t>(c));
    push(pre + "spatial_fa", g * k * op.freq_macs, g * k * op.conv_macs);
    push(pre + "agg", g * k * c, g * k * c);
    if (!cfg.no_temporal_fa) {
      double tfa_freq = c * g * std::log2(g);
      push(pre + "temporal_fa", tfa_freq, g * c * c);
    }
    // two dense layers through a half-width hidden: 2 * g * c * (c/2)
    double res = g * c * std::floor(c / 2.0) * 2.0;
    push(pre + "res", res, res);
  }

  const double pooled = 2.0 * static_cast<double>(widths.back());
  const double head = pooled * static_cast<double>(cfg.head_hidden) +
                      static_cast<double>(cfg.head_hidden) *
                          static_cast<double>(cfg.output_dim());
  push("head", head, head);
  b.ratio = b.total_freq > 0.0 ? b.total_conv / b.total_freq : 0.0;
  return b;
}

}  // namespace ecnet
