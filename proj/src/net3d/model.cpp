// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/model.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace baggagedet::net3d {

std::array<int, 4> block_counts(int depth) {
  switch (depth) {
    case 10: return {1, 1, 1, 1};
    case 18: return {2, 2, 2, 2};
    case 34: return {3, 4, 6, 3};
    case 50: return {3, 4, 6, 3};
    case 101: return {3, 4, 23, 3};
    default: throw std::invalid_argument("model.depth must be one of 10, 18, 34, 50, 101");
  }
}

bool uses_bottleneck(int depth) { return depth >= 50; }

int stage_channels(const ModelConfig& cfg, int stage) {
  return cfg.widths[static_cast<std::size_t>(stage)] * (uses_bottleneck(cfg.depth) ? 4 : 1);
}

void validate(const ModelConfig& cfg) {
  block_counts(cfg.depth);
  for (int w : cfg.widths)
    if (w < 1) throw std::invalid_argument("model.widths must be positive");
  if (cfg.in_channels < 1 || cfg.in_channels > 2) throw std::invalid_argument("data.channels must give 1 or 2 channels");
  if (cfg.fpn_width < 1) throw std::invalid_argument("model.fpn_width must be positive");
  if (cfg.num_classes < 1) throw std::invalid_argument("model.num_classes must be positive");
  if (cfg.num_anchors < 1) throw std::invalid_argument("anchors.multipliers must not be empty");
  if (cfg.norm_groups < 1) throw std::invalid_argument("model.groups must be positive");
  if (cfg.head_convs < 0) throw std::invalid_argument("model.head_convs must be non-negative");
  if (cfg.levels.empty()) throw std::invalid_argument("anchors.levels must not be empty");
  for (std::size_t i = 0; i < cfg.levels.size(); ++i)
    if (cfg.levels[i] < 0 || cfg.levels[i] > 3 || (i > 0 && cfg.levels[i] <= cfg.levels[i - 1]))
      throw std::invalid_argument("anchors.levels must be ascending within 0..3");
}

std::string to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["depth"] = cfg.depth;
  j["widths"] = cfg.widths;
  j["in_channels"] = cfg.in_channels;
  j["fpn_width"] = cfg.fpn_width;
  j["num_classes"] = cfg.num_classes;
  j["num_anchors"] = cfg.num_anchors;
  j["levels"] = cfg.levels;
  j["norm_groups"] = cfg.norm_groups;
  j["head_convs"] = cfg.head_convs;
  j["seed"] = cfg.seed;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig cfg;
  cfg.depth = j.at("depth").get<int>();
  cfg.widths = j.at("widths").get<std::array<int, 4>>();
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.fpn_width = j.at("fpn_width").get<int>();
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.num_anchors = j.at("num_anchors").get<int>();
  cfg.levels = j.at("levels").get<std::vector<int>>();
  cfg.norm_groups = j.at("norm_groups").get<int>();
  cfg.head_convs = j.at("head_convs").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  validate(cfg);
  return cfg;
}

template <class T>
std::vector<T> flatten_cls(const HeadOutputs<T>& h) {
  std::vector<T> out;
  for (const auto& t : h.cls) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

template <class T>
std::vector<T> flatten_reg(const HeadOutputs<T>& h) {
  std::vector<T> out;
  for (const auto& t : h.reg) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

namespace {

// Residual block: a chain of conv+GN with ReLU between, summed with the (projected) input,
// then ReLU. Basic: 3x3 -> 3x3. Bottleneck: 1x1 -> 3x3 -> 1x1 (x4 expansion).
template <class T>
struct ResBlock {
  std::vector<Conv3d<T>> convs;
  std::vector<GroupNorm<T>> norms;
  bool has_proj = false;
  Conv3d<T> proj;
  GroupNorm<T> proj_norm;

  struct Cache {
    std::vector<Tensor<T>> in;  // input of each conv (in[0] is the block input)
    std::vector<Tensor<T>> pre; // conv outputs, needed by GN backward
    Tensor<T> proj_pre;
    Tensor<T> out;
  };

  ResBlock(const std::string& name, int cin, int width, int stride, bool bottleneck, int groups) {
    const int cout = bottleneck ? width * 4 : width;
    if (bottleneck) {
      convs.emplace_back(name + ".conv1", cin, width, 1, 1, 0, false);
      convs.emplace_back(name + ".conv2", width, width, 3, stride, 1, false);
      convs.emplace_back(name + ".conv3", width, cout, 1, 1, 0, false);
      norms.emplace_back(name + ".norm1", width, groups);
      norms.emplace_back(name + ".norm2", width, groups);
      norms.emplace_back(name + ".norm3", cout, groups);
    } else {
      convs.emplace_back(name + ".conv1", cin, width, 3, stride, 1, false);
      convs.emplace_back(name + ".conv2", width, width, 3, 1, 1, false);
      norms.emplace_back(name + ".norm1", width, groups);
      norms.emplace_back(name + ".norm2", width, groups);
    }
    if (stride != 1 || cin != cout) {
      has_proj = true;
      proj = Conv3d<T>(name + ".proj", cin, cout, 1, stride, 0, false);
      proj_norm = GroupNorm<T>(name + ".proj_norm", cout, groups);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const std::size_t n = convs.size();
    if (cache) {
      cache->in.assign(n, {});
      cache->pre.assign(n, {});
    }
    Tensor<T> h = x;
    Tensor<T> sum;
    for (std::size_t i = 0; i < n; ++i) {
      Tensor<T> a = convs[i].forward(h);
      Tensor<T> z = norms[i].forward(a);
      if (cache) {
        cache->in[i] = std::move(h);
        cache->pre[i] = std::move(a);
      }
      if (i + 1 < n) {
        relu_inplace(z);
        h = std::move(z);
      } else {
        sum = std::move(z);
      }
    }
    if (has_proj) {
      Tensor<T> s = proj.forward(x);
      add_inplace(sum, proj_norm.forward(s));
      if (cache) cache->proj_pre = std::move(s);
    } else {
      add_inplace(sum, x);
    }
    relu_inplace(sum);
    if (cache) cache->out = sum;
    return sum;
  }

  Tensor<T> backward(const Cache& c, const Tensor<T>& dout) {
    const Tensor<T> d = relu_backward(c.out, dout);
    Tensor<T> g = d;
    for (std::size_t i = convs.size(); i-- > 0;) {
      const Tensor<T> da = norms[i].backward(c.pre[i], g);
      Tensor<T> din = convs[i].backward(c.in[i], da, true);
      g = i > 0 ? relu_backward(c.in[i], din) : std::move(din);
    }
    if (has_proj) {
      const Tensor<T> ds = proj_norm.backward(c.proj_pre, d);
      add_inplace(g, proj.backward(c.in[0], ds, true));
    } else {
      add_inplace(g, d);
    }
    return g;
  }

  void collect(std::vector<Param<T>*>& out) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      convs[i].collect(out);
      norms[i].collect(out);
    }
    if (has_proj) {
      proj.collect(out);
      proj_norm.collect(out);
    }
  }

  void init(Rng& rng) {
    for (auto& c : convs) c.init_he(rng);
    if (has_proj) proj.init_he(rng);
  }
};

// conv stack with ReLU after each hidden conv and a linear output conv
template <class T>
struct HeadTower {
  std::vector<Conv3d<T>> hidden;
  Conv3d<T> out;

  struct Cache {
    std::vector<Tensor<T>> in;  // input of hidden[i]; in.back() feeds `out`
  };

  HeadTower(const std::string& name, int width, int n_hidden, int out_channels) {
    for (int i = 0; i < n_hidden; ++i)
      hidden.emplace_back(name + "." + std::to_string(i), width, width, 3, 1, 1, true);
    out = Conv3d<T>(name + ".out", width, out_channels, 3, 1, 1, true);
  }

  Tensor<T> forward(const Tensor<T>& p, Cache* cache) const {
    if (cache) cache->in.clear();
    Tensor<T> h = p;
    for (const auto& conv : hidden) {
      Tensor<T> next = conv.forward(h);
      relu_inplace(next);
      if (cache) cache->in.push_back(std::move(h));
      h = std::move(next);
    }
    Tensor<T> y = out.forward(h);
    if (cache) cache->in.push_back(std::move(h));
    return y;
  }

  Tensor<T> backward(const Cache& c, const Tensor<T>& dy) {
    Tensor<T> g = out.backward(c.in.back(), dy, true);
    for (std::size_t i = hidden.size(); i-- > 0;) {
      const Tensor<T> da = relu_backward(c.in[i + 1], g);
      g = hidden[i].backward(c.in[i], da, true);
    }
    return g;
  }

  void collect(std::vector<Param<T>*>& o) {
    for (auto& c : hidden) c.collect(o);
    out.collect(o);
  }

  void init(Rng& rng) {
    for (auto& c : hidden) c.init_he(rng);
    out.init_normal(rng, 0.01);
  }
};

}  // namespace

template <class T>
struct Model<T>::Impl {
  // stem
  Conv3d<T> stem_conv;
  GroupNorm<T> stem_norm;
  std::array<std::vector<ResBlock<T>>, 4> stages;
  std::array<Conv3d<T>, 4> lateral;
  HeadTower<T> cls_head;
  HeadTower<T> reg_head;
  int min_level = 0;

  struct Cache {
    Tensor<T> x, stem_pre, stem_act;
    std::array<std::vector<typename ResBlock<T>::Cache>, 4> blocks;
    std::array<Tensor<T>, 4> C;
    std::vector<typename HeadTower<T>::Cache> cls, reg;
    std::vector<std::array<int, 3>> level_dims;
    bool valid = false;
  } cache;

  explicit Impl(const ModelConfig& cfg)
      : stem_conv("stem.conv", cfg.in_channels, cfg.widths[0], 7, 2, 3, false),
        stem_norm("stem.norm", cfg.widths[0], cfg.norm_groups),
        cls_head("head.cls", cfg.fpn_width, cfg.head_convs, cfg.cls_channels()),
        reg_head("head.reg", cfg.fpn_width, cfg.head_convs, cfg.reg_channels()),
        min_level(cfg.levels.front()) {
    const auto counts = block_counts(cfg.depth);
    const bool bottleneck = uses_bottleneck(cfg.depth);
    int cin = cfg.widths[0];
    for (int s = 0; s < 4; ++s) {
      for (int b = 0; b < counts[s]; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        stages[s].emplace_back("layer" + std::to_string(s + 1) + "." + std::to_string(b), cin, cfg.widths[s], stride,
                               bottleneck, cfg.norm_groups);
        cin = stage_channels(cfg, s);
      }
    }
    for (int l = 0; l < 4; ++l)
      lateral[l] = Conv3d<T>("fpn.lateral" + std::to_string(l + 2), stage_channels(cfg, l), cfg.fpn_width, 3, 1, 1, true);
  }

  void collect(std::vector<Param<T>*>& out) {
    stem_conv.collect(out);
    stem_norm.collect(out);
    for (auto& st : stages)
      for (auto& b : st) b.collect(out);
    for (int l = min_level; l < 4; ++l) lateral[l].collect(out);
    cls_head.collect(out);
    reg_head.collect(out);
  }

  void init(Rng& rng) {
    stem_conv.init_he(rng);
    for (auto& st : stages)
      for (auto& b : st) b.init(rng);
    for (int l = min_level; l < 4; ++l) lateral[l].init_he(rng);
    cls_head.init(rng);
    reg_head.init(rng);
  }
};

template <class T>
Model<T>::Model(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  impl_ = std::make_unique<Impl>(cfg_);
  Rng rng = make_rng(cfg_.seed, {0x1e1});
  impl_->init(rng);
}

template <class T>
Model<T>::~Model() = default;
template <class T>
Model<T>::Model(Model&&) noexcept = default;
template <class T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;

template <class T>
ForwardResult<T> Model<T>::forward(const Tensor<T>& x, bool train) {
  for (int a = 0; a < 3; ++a)
    if (x.dims[a] <= 0 || x.dims[a] % 32 != 0) throw std::invalid_argument("input dims must be multiples of 32");
  if (x.c != cfg_.in_channels)
    throw std::invalid_argument("input has " + std::to_string(x.c) + " channels, model expects " +
                                std::to_string(cfg_.in_channels));
  Impl& m = *impl_;
  auto& c = m.cache;
  c.valid = false;
  ForwardResult<T> r;

  Tensor<T> pre = m.stem_conv.forward(x);
  Tensor<T> act = m.stem_norm.forward(pre);
  relu_inplace(act);
  Tensor<T> h = maxpool3(act);
  if (train) {
    c.x = x;
    c.stem_pre = std::move(pre);
    c.stem_act = std::move(act);
  }
  for (int s = 0; s < 4; ++s) {
    auto& bc = c.blocks[s];
    if (train) bc.assign(m.stages[s].size(), {});
    for (std::size_t b = 0; b < m.stages[s].size(); ++b)
      h = m.stages[s][b].forward(h, train ? &bc[b] : nullptr);
    r.C[s] = h;
  }

  r.P[3] = m.lateral[3].forward(r.C[3]);
  for (int l = 2; l >= m.min_level; --l) {
    r.P[l] = upsample2(r.P[l + 1]);
    add_inplace(r.P[l], m.lateral[l].forward(r.C[l]));
  }

  const std::size_t nl = cfg_.levels.size();
  if (train) {
    c.cls.assign(nl, {});
    c.reg.assign(nl, {});
    c.level_dims.clear();
    c.C = r.C;
  }
  for (std::size_t i = 0; i < nl; ++i) {
    const Tensor<T>& p = r.P[cfg_.levels[i]];
    r.heads.cls.push_back(m.cls_head.forward(p, train ? &c.cls[i] : nullptr));
    r.heads.reg.push_back(m.reg_head.forward(p, train ? &c.reg[i] : nullptr));
    if (train) c.level_dims.push_back(p.dims);
  }
  c.valid = train;
  return r;
}

template <class T>
void Model<T>::backward(const std::vector<T>& d_cls, const std::vector<T>& d_reg) {
  Impl& m = *impl_;
  auto& c = m.cache;
  if (!c.valid) throw std::logic_error("backward() requires a preceding training forward()");
  const int kc = cfg_.cls_channels(), kr = cfg_.reg_channels();
  std::size_t total = 0;
  for (const auto& d : c.level_dims) total += static_cast<std::size_t>(d[0]) * d[1] * d[2];
  if (d_cls.size() != total * kc || d_reg.size() != total * kr)
    throw std::invalid_argument("gradient size does not match the anchor count");

  // gradients w.r.t. each P level from the shared heads
  std::array<Tensor<T>, 4> dP;
  std::size_t off = 0;
  for (std::size_t i = 0; i < cfg_.levels.size(); ++i) {
    const auto& dims = c.level_dims[i];
    const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    Tensor<T> gc(dims, kc), gr(dims, kr);
    std::copy(d_cls.begin() + off * kc, d_cls.begin() + (off + n) * kc, gc.data.begin());
    std::copy(d_reg.begin() + off * kr, d_reg.begin() + (off + n) * kr, gr.data.begin());
    off += n;
    Tensor<T> dp = m.cls_head.backward(c.cls[i], gc);
    add_inplace(dp, m.reg_head.backward(c.reg[i], gr));
    dP[cfg_.levels[i]] = std::move(dp);
  }

  // top-down pathway, walked bottom-up
  std::array<Tensor<T>, 4> dC;
  for (int l = m.min_level; l < 4; ++l) {
    if (dP[l].data.empty()) dP[l] = Tensor<T>(c.C[l].dims, cfg_.fpn_width);
    dC[l] = m.lateral[l].backward(c.C[l], dP[l], true);
    if (l < 3) {
      Tensor<T> up = upsample2_backward(dP[l]);
      if (dP[l + 1].data.empty())
        dP[l + 1] = std::move(up);
      else
        add_inplace(dP[l + 1], up);
    }
  }

  // backbone, top stage first; dC of a stage adds to the gradient flowing down from above
  Tensor<T> g;
  for (int s = 3; s >= 0; --s) {
    if (g.data.empty()) {
      g = dC[s].data.empty() ? Tensor<T>(c.C[s].dims, c.C[s].c) : dC[s];
    } else if (!dC[s].data.empty()) {
      add_inplace(g, dC[s]);
    }
    for (std::size_t b = m.stages[s].size(); b-- > 0;) g = m.stages[s][b].backward(c.blocks[s][b], g);
  }
  const Tensor<T> d_pool = maxpool3_backward(c.stem_act, g);
  const Tensor<T> d_act = relu_backward(c.stem_act, d_pool);
  const Tensor<T> d_pre = m.stem_norm.backward(c.stem_pre, d_act);
  m.stem_conv.backward(c.x, d_pre, false);
}

template <class T>
std::vector<Param<T>*> Model<T>::params() {
  std::vector<Param<T>*> out;
  impl_->collect(out);
  return out;
}

template <class T>
std::vector<const Param<T>*> Model<T>::params() const {
  std::vector<Param<T>*> tmp;
  impl_->collect(tmp);
  return {tmp.begin(), tmp.end()};
}

template <class T>
std::size_t Model<T>::num_params() const {
  std::size_t n = 0;
  for (const auto* p : params()) n += p->size();
  return n;
}

template <class T>
std::size_t Model<T>::head_param_count() const {
  std::vector<Param<T>*> tmp;
  impl_->cls_head.collect(tmp);
  impl_->reg_head.collect(tmp);
  std::size_t n = 0;
  for (const auto* p : tmp) n += p->size();
  return n;
}

template <class T>
void Model<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template class Model<float>;
template class Model<double>;
template std::vector<float> flatten_cls<float>(const HeadOutputs<float>&);
template std::vector<double> flatten_cls<double>(const HeadOutputs<double>&);
template std::vector<float> flatten_reg<float>(const HeadOutputs<float>&);
template std::vector<double> flatten_reg<double>(const HeadOutputs<double>&);

}  // namespace baggagedet::net3d
