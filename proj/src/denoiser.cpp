#include "dcmr/denoiser.hpp"

#include <cmath>
#include <numeric>

#include "dcmr/rng.hpp"

namespace dcmr {

void DenoiserConfig::validate() const {
  require(base_channels >= 1, "denoiser: base_channels must be >= 1");
  require(depth() >= 1, "denoiser: channel_multipliers must be nonempty");
  for (int m : channel_multipliers) require(m >= 1, "denoiser: channel multipliers must be >= 1");
  require(n_rrdb >= 0, "denoiser: n_rrdb must be >= 0");
  require(time_embed_dim >= 0, "denoiser: time_embed_dim must be >= 0");
  require(T_max >= 1, "denoiser: T_max must be >= 1");
  const int f = 1 << (depth() - 1);
  require(in_h >= 1 && in_w >= 1 && in_h % f == 0 && in_w % f == 0,
          "denoiser: input size must be divisible by 2^(depth-1) = " + std::to_string(f));
}

DenoiserConfig full_scale_config(int T_max, int size) {
  DenoiserConfig c;
  c.base_channels = 128;
  c.channel_multipliers = {1, 1, 2, 2, 4, 4};
  c.n_rrdb = 10;
  c.T_max = T_max;
  c.in_h = c.in_w = size;
  return c;
}

std::size_t TensorSpec::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

namespace {

struct LayoutBuilder {
  std::vector<TensorSpec> specs;

  void conv(const std::string& name, int cin, int cout, int k, bool zero = false) {
    specs.push_back({name + ".w", {cout, cin, k, k}, zero ? InitKind::zeros : InitKind::fan_in_uniform, cin * k * k});
    specs.push_back({name + ".b", {cout}, InitKind::zeros, 1});
  }
  void norm(const std::string& name, int c) {
    specs.push_back({name + ".g", {c}, InitKind::ones, 1});
    specs.push_back({name + ".b", {c}, InitKind::zeros, 1});
  }
  void linear(const std::string& name, int in, int out) {
    specs.push_back({name + ".w", {out, in}, InitKind::fan_in_uniform, in});
    specs.push_back({name + ".b", {out}, InitKind::zeros, 1});
  }
  void resblock(const std::string& name, int cin, int cout, int emb) {
    norm(name + ".gn1", cin);
    conv(name + ".conv1", cin, cout, 3);
    linear(name + ".temb", emb, cout);
    norm(name + ".gn2", cout);
    conv(name + ".conv2", cout, cout, 3);
    if (cin != cout) conv(name + ".skip", cin, cout, 1);
  }
};

}  // namespace

std::vector<TensorSpec> parameter_layout(const DenoiserConfig& cfg) {
  cfg.validate();
  LayoutBuilder b;
  const int C = cfg.base_channels, D = cfg.embed_dim(), g = cfg.growth(), d = cfg.depth();
  b.conv("F.conv", 1, C, 3);
  b.conv("G.conv", 1, C, 3);
  for (int i = 0; i < cfg.n_rrdb; ++i) {
    const std::string n = "G.rrdb" + std::to_string(i);
    b.conv(n + ".c0", C, g, 3);
    b.conv(n + ".c1", C + g, g, 3);
    b.conv(n + ".c2", C + 2 * g, C, 3);
  }
  b.specs.push_back({"H.table", {cfg.T_max, D}, InitKind::normal, 1});
  int prev = C;
  for (int l = 0; l < d; ++l) {
    b.resblock("E.enc" + std::to_string(l), prev, cfg.channels(l), D);
    prev = cfg.channels(l);
  }
  for (int l = d - 1; l >= 0; --l) {
    b.resblock("E.dec" + std::to_string(l), prev + cfg.channels(l), cfg.channels(l), D);
    prev = cfg.channels(l);
  }
  b.norm("E.out.gn", prev);
  b.conv("E.out.conv", prev, 1, 3, /*zero=*/true);
  return b.specs;
}

std::size_t param_count(const DenoiserConfig& cfg) {
  cfg.validate();
  auto conv = [](std::size_t cin, std::size_t cout, std::size_t k) { return cout * cin * k * k + cout; };
  auto res = [&](std::size_t cin, std::size_t cout, std::size_t emb) {
    return 2 * cin + conv(cin, cout, 3) + (emb * cout + cout) + 2 * cout + conv(cout, cout, 3) +
           (cin != cout ? conv(cin, cout, 1) : 0);
  };
  const std::size_t C = cfg.base_channels, D = cfg.embed_dim(), g = cfg.growth();
  std::size_t n = 2 * conv(1, C, 3);
  n += cfg.n_rrdb * (conv(C, g, 3) + conv(C + g, g, 3) + conv(C + 2 * g, C, 3));
  n += static_cast<std::size_t>(cfg.T_max) * D;
  const int d = cfg.depth();
  for (int l = 0; l < d; ++l) {
    const std::size_t c = cfg.channels(l), in = l == 0 ? C : cfg.channels(l - 1);
    n += res(in, c, D);
  }
  const std::size_t top = cfg.channels(d - 1);
  for (int l = d - 1; l >= 0; --l) {
    const std::size_t c = cfg.channels(l), in = l == d - 1 ? top : cfg.channels(l + 1);
    n += res(in + c, c, D);
  }
  n += 2 * static_cast<std::size_t>(cfg.channels(0)) + conv(cfg.channels(0), 1, 3);
  return n;
}

template <typename T>
std::size_t ParamSet<T>::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.data.size();
  return n;
}

template <typename T>
void ParamSet<T>::reindex() {
  index.clear();
  for (std::size_t i = 0; i < tensors.size(); ++i) index.emplace(tensors[i].name, i);
}

template <typename T>
std::size_t ParamSet<T>::index_of(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw InvalidInput("unknown parameter tensor: " + name);
  return it->second;
}

template <typename T>
std::vector<std::vector<T>> ParamSet<T>::zeros_like() const {
  std::vector<std::vector<T>> out;
  out.reserve(tensors.size());
  for (const auto& t : tensors) out.emplace_back(t.data.size(), T(0));
  return out;
}

template <typename T>
bool ParamSet<T>::all_finite() const {
  for (const auto& t : tensors)
    for (T v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
ParamSet<T> init_params(const DenoiserConfig& cfg, std::uint64_t seed) {
  ParamSet<T> p;
  p.config = cfg;
  for (const auto& spec : parameter_layout(cfg)) {
    ParamTensor<T> t{spec.name, spec.shape, std::vector<T>(spec.numel(), T(0))};
    Rng rng(seed, spec.name);
    switch (spec.init) {
      case InitKind::fan_in_uniform: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
      case InitKind::ones:
        std::fill(t.data.begin(), t.data.end(), T(1));
        break;
      case InitKind::normal:
        rng.fill_normal(std::span<T>(t.data));
        break;
      case InitKind::zeros:
        break;
    }
    p.tensors.push_back(std::move(t));
  }
  p.reindex();
  return p;
}

template <typename To, typename From>
ParamSet<To> cast_params(const ParamSet<From>& p) {
  ParamSet<To> out;
  out.config = p.config;
  for (const auto& t : p.tensors) out.tensors.push_back({t.name, t.shape, std::vector<To>(t.data.begin(), t.data.end())});
  out.reindex();
  return out;
}

namespace {

template <typename T>
class Builder {
 public:
  using Id = typename Graph<T>::Id;

  Builder(Graph<T>& g, const ParamSet<T>& p, std::vector<std::vector<T>>* grads) : g_(g), p_(p), grads_(grads) {}

  Id param(const std::string& name) {
    const std::size_t i = p_.index_of(name);
    const auto& t = p_.tensors[i];
    T* gbuf = grads_ ? (*grads_)[i].data() : nullptr;
    return g_.parameter({static_cast<int>(t.data.size()), 1, 1}, t.data.data(), gbuf);
  }

  Id conv(const std::string& name, Id x, int stride = 1) {
    const auto& w = p_.get(name + ".w");
    return g_.conv2d(x, param(name + ".w"), param(name + ".b"), w.shape[0], w.shape[2], stride);
  }

  Id norm(const std::string& name, Id x) {
    return g_.group_norm(x, param(name + ".g"), param(name + ".b"), norm_groups(g_.shape(x).c));
  }

  Id resblock(const std::string& name, Id x, Id emb) {
    const auto& w1 = p_.get(name + ".conv1.w");
    const int cout = w1.shape[0];
    Id h = conv(name + ".conv1", g_.silu(norm(name + ".gn1", x)));
    h = g_.add_channel_bias(h, g_.linear(emb, param(name + ".temb.w"), param(name + ".temb.b"), cout));
    h = conv(name + ".conv2", g_.silu(norm(name + ".gn2", h)));
    const Id skip = g_.shape(x).c == cout ? x : conv(name + ".skip", x);
    return g_.add(skip, h);
  }

  Id condition(Id cond) {
    const auto& cfg = p_.config;
    Id h = conv("G.conv", cond);
    for (int i = 0; i < cfg.n_rrdb; ++i) {
      const std::string n = "G.rrdb" + std::to_string(i);
      const Id h1 = g_.silu(conv(n + ".c0", h));
      const Id h2 = g_.silu(conv(n + ".c1", g_.concat(h, h1)));
      const Id h3 = conv(n + ".c2", g_.concat(g_.concat(h, h1), h2));
      h = g_.add_scaled(h, h3, T(0.2));
    }
    return h;
  }

  Id unet(Id x_t, Id cond_features, int t) {
    const auto& cfg = p_.config;
    const int d = cfg.depth();
    Id h = g_.add(conv("F.conv", x_t), cond_features);
    const Id emb = g_.row(param("H.table"), t - 1, cfg.embed_dim());
    std::vector<Id> skips;
    for (int l = 0; l < d; ++l) {
      const std::string n = "E.enc" + std::to_string(l);
      h = resblock(n, h, emb);
      skips.push_back(h);
      if (l < d - 1) h = g_.avg_pool2x(h);
    }
    for (int l = d - 1; l >= 0; --l) {
      const std::string n = "E.dec" + std::to_string(l);
      h = resblock(n, g_.concat(h, skips[l]), emb);
      if (l > 0) h = g_.upsample2x(h);
    }
    return conv("E.out.conv", g_.silu(norm("E.out.gn", h)));
  }

 private:
  Graph<T>& g_;
  const ParamSet<T>& p_;
  std::vector<std::vector<T>>* grads_;
};

template <typename T>
void check_inputs(const ParamSet<T>& p, const Image<T>& x_t, const Image<T>* cond, int t) {
  const auto& cfg = p.config;
  if (x_t.height != cfg.in_h || x_t.width != cfg.in_w)
    throw InvalidInput("denoiser: input is " + std::to_string(x_t.height) + "x" + std::to_string(x_t.width) +
                       ", config expects " + std::to_string(cfg.in_h) + "x" + std::to_string(cfg.in_w));
  if (cond) require_same_shape(x_t, *cond, "denoiser");
  require(t >= 1 && t <= cfg.T_max,
          "denoiser: timestep " + std::to_string(t) + " outside embedding table [1, " + std::to_string(cfg.T_max) + "]");
}

template <typename T>
Shape image_shape(const Image<T>& img) {
  return {1, img.height, img.width};
}

template <typename T>
Image<T> to_image(const Graph<T>& g, typename Graph<T>::Id id) {
  const Shape s = g.shape(id);
  auto v = g.value(id);
  return Image<T>(s.h, s.w, std::vector<T>(v.begin(), v.end()));
}

}  // namespace

template <typename T>
Image<T> forward(const ParamSet<T>& p, const Image<T>& x_t, const Image<T>& cond, int t) {
  check_inputs(p, x_t, &cond, t);
  Graph<T> g(false);
  Builder<T> b(g, p, nullptr);
  const auto c = b.condition(g.constant(image_shape(cond), cond.data));
  return to_image(g, b.unet(g.constant(image_shape(x_t), x_t.data), c, t));
}

template <typename T>
ConditionFeatures<T> encode_condition(const ParamSet<T>& p, const Image<T>& cond) {
  check_inputs<T>(p, cond, nullptr, 1);
  Graph<T> g(false);
  Builder<T> b(g, p, nullptr);
  const auto id = b.condition(g.constant(image_shape(cond), cond.data));
  auto v = g.value(id);
  return {g.shape(id), std::vector<T>(v.begin(), v.end())};
}

template <typename T>
Image<T> forward_with(const ParamSet<T>& p, const Image<T>& x_t, const ConditionFeatures<T>& cond, int t) {
  check_inputs<T>(p, x_t, nullptr, t);
  Graph<T> g(false);
  Builder<T> b(g, p, nullptr);
  const auto c = g.constant(cond.shape, cond.data);
  return to_image(g, b.unet(g.constant(image_shape(x_t), x_t.data), c, t));
}

template <typename T>
void check_batch(const ParamSet<T>& p, const Batch<T>& batch) {
  require(batch.size() > 0, "batch is empty");
  require(batch.x_t.size() == batch.size() && batch.cond.size() == batch.size() && batch.eps.size() == batch.size(),
          "batch: member sizes differ");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_inputs(p, batch.x_t[i], &batch.cond[i], batch.t[i]);
    require_same_shape(batch.x_t[i], batch.eps[i], "batch eps");
  }
}

template <typename T>
T mse_eps_loss(const ParamSet<T>& p, const Batch<T>& batch) {
  check_batch(p, batch);
  T total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Image<T> out = forward(p, batch.x_t[i], batch.cond[i], batch.t[i]);
    T s = 0;
    for (std::size_t k = 0; k < out.size(); ++k) s += (out.data[k] - batch.eps[i].data[k]) * (out.data[k] - batch.eps[i].data[k]);
    total += s / static_cast<T>(out.size());
  }
  return total / static_cast<T>(batch.size());
}

template <typename T>
LossAndGrads<T> grads(const ParamSet<T>& p, const Batch<T>& batch) {
  check_batch(p, batch);
  LossAndGrads<T> out;
  out.grads = p.zeros_like();
  const T weight = T(1) / static_cast<T>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Graph<T> g(true);
    Builder<T> b(g, p, &out.grads);
    const auto c = b.condition(g.constant(image_shape(batch.cond[i]), batch.cond[i].data));
    const auto y = b.unet(g.constant(image_shape(batch.x_t[i]), batch.x_t[i].data), c, batch.t[i]);
    out.loss += g.mse(y, batch.eps[i].data, weight) * weight;
    g.backward();
  }
  return out;
}

#define DCMR_INSTANTIATE(T)                                                                                   \
  template struct ParamSet<T>;                                                                                \
  template ParamSet<T> init_params<T>(const DenoiserConfig&, std::uint64_t);                                  \
  template Image<T> forward<T>(const ParamSet<T>&, const Image<T>&, const Image<T>&, int);                    \
  template ConditionFeatures<T> encode_condition<T>(const ParamSet<T>&, const Image<T>&);                     \
  template Image<T> forward_with<T>(const ParamSet<T>&, const Image<T>&, const ConditionFeatures<T>&, int);   \
  template T mse_eps_loss<T>(const ParamSet<T>&, const Batch<T>&);                                            \
  template LossAndGrads<T> grads<T>(const ParamSet<T>&, const Batch<T>&);

DCMR_INSTANTIATE(float)
DCMR_INSTANTIATE(double)
template ParamSet<double> cast_params<double, float>(const ParamSet<float>&);
template ParamSet<float> cast_params<float, double>(const ParamSet<double>&);
template ParamSet<float> cast_params<float, float>(const ParamSet<float>&);
template ParamSet<double> cast_params<double, double>(const ParamSet<double>&);

}  // namespace dcmr
