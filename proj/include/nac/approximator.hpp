#pragma once

// Convolutional policy / value network over 2×k×k ranked-state tensors, with
// hand-written backward pass and Adam.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nac/common.hpp"

namespace nac {

enum class OutputMode { kLogits, kValues };

struct NetSpec {
  std::size_t k = 64;
  std::size_t in_channels = 2;
  std::size_t channels = 64;
  std::size_t conv_layers = 3;
  std::size_t kernel = 3;
  OutputMode mode = OutputMode::kLogits;

  void validate() const {
    require<ConfigError>(k >= 1, "network k must be >= 1");
    require<ConfigError>(in_channels >= 1 && channels >= 1, "channel counts must be >= 1");
    require<ConfigError>(conv_layers >= 1, "need at least one convolution layer");
    require<ConfigError>(kernel % 2 == 1, "kernel size must be odd, got ", kernel);
  }

  std::size_t pixels() const { return k * k; }
  std::size_t input_size() const { return in_channels * pixels(); }
  std::size_t layer_in(std::size_t l) const { return l == 0 ? in_channels : channels; }

  std::string canonical() const {
    return concat("k=", k, ";in=", in_channels, ";ch=", channels, ";layers=", conv_layers, ";kernel=", kernel,
                  ";mode=", mode == OutputMode::kLogits ? "logits" : "values");
  }

  /// FNV-1a of the canonical description; stored with checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;

  std::size_t size() const {
    std::size_t s = 1;
    for (auto d : shape) s *= d;
    return s;
  }
  friend bool operator==(const ParamSlice&, const ParamSlice&) = default;
};

inline std::vector<ParamSlice> param_layout(const NetSpec& spec) {
  std::vector<ParamSlice> out;
  std::size_t off = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    ParamSlice s{std::move(name), off, std::move(shape)};
    off += s.size();
    out.push_back(std::move(s));
  };
  for (std::size_t l = 0; l < spec.conv_layers; ++l) {
    add(concat("conv", l, ".weight"), {spec.channels, spec.layer_in(l), spec.kernel, spec.kernel});
    add(concat("conv", l, ".bias"), {spec.channels});
  }
  add("head.weight", {spec.k, spec.channels * spec.pixels()});
  add("head.bias", {spec.k});
  return out;
}

/// All weights and biases in one flat vector, with a name → slice registry.
template <typename Scalar>
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(const NetSpec& spec) : layout_(param_layout(spec)) {
    values_.assign(layout_.empty() ? 0 : layout_.back().offset + layout_.back().size(), Scalar(0));
  }

  static ParamSet from_flat(const NetSpec& spec, std::vector<Scalar> flat) {
    ParamSet p(spec);
    require(flat.size() == p.values_.size(), "flat vector has ", flat.size(), " entries, layout needs ",
            p.values_.size());
    p.values_ = std::move(flat);
    return p;
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<ParamSlice>& layout() const { return layout_; }
  std::vector<Scalar>& flat() { return values_; }
  const std::vector<Scalar>& flat() const { return values_; }

  const ParamSlice& slice(const std::string& name) const {
    for (const auto& s : layout_)
      if (s.name == name) return s;
    throw ContractError("no parameter named '" + name + "'");
  }
  std::span<Scalar> tensor(const std::string& name) {
    const auto& s = slice(name);
    return {values_.data() + s.offset, s.size()};
  }
  std::span<const Scalar> tensor(const std::string& name) const {
    const auto& s = slice(name);
    return {values_.data() + s.offset, s.size()};
  }
  Scalar* at(std::size_t offset) { return values_.data() + offset; }
  const Scalar* at(std::size_t offset) const { return values_.data() + offset; }

  void zero() { std::fill(values_.begin(), values_.end(), Scalar(0)); }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    out.layout_ = layout_;
    out.values_.assign(values_.begin(), values_.end());
    return out;
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  template <typename>
  friend class ParamSet;
  std::vector<ParamSlice> layout_;
  std::vector<Scalar> values_;
};

/// Seeded fan-in scaled uniform initialisation; biases start at zero.
template <typename Scalar>
ParamSet<Scalar> init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamSet<Scalar> p(spec);
  Rng rng(seed);
  for (const auto& s : p.layout()) {
    if (s.shape.size() == 1) continue;
    std::size_t fan_in = s.size() / s.shape[0];
    bool head = s.name.rfind("head", 0) == 0;
    // He-uniform before rectifiers, plain 1/sqrt(fan_in) for the linear head
    double bound = head ? 1.0 / std::sqrt(double(fan_in)) : std::sqrt(6.0 / double(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < s.size(); ++i) *p.at(s.offset + i) = static_cast<Scalar>(dist(rng));
  }
  return p;
}

/// Activations kept by forward() for the backward pass.
template <typename Scalar>
struct Tape {
  std::vector<std::vector<Scalar>> cols;  // im2col buffer per conv layer
  std::vector<std::vector<Scalar>> acts;  // post-rectifier output per conv layer
  std::vector<std::uint8_t> mask;
};

template <typename Scalar>
class Network {
 public:
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MapMat = Eigen::Map<RowMat>;
  using ConstMapMat = Eigen::Map<const RowMat>;
  using MapVec = Eigen::Map<Vec>;
  using ConstMapVec = Eigen::Map<const Vec>;

  // Masked VALUES slots; only ever excluded via the mask.
  static constexpr Scalar kMaskedValue = Scalar(-1e30);

  explicit Network(NetSpec spec) : spec_(spec), layout_(param_layout(spec)) { spec_.validate(); }

  const NetSpec& spec() const { return spec_; }
  std::size_t param_count() const { return layout_.back().offset + layout_.back().size(); }

  std::vector<Scalar> forward(const ParamSet<Scalar>& params, std::span<const Scalar> x,
                              std::span<const std::uint8_t> mask, Tape<Scalar>* tape = nullptr) const {
    require(x.size() == spec_.input_size(), "input has ", x.size(), " entries, network expects ",
            spec_.input_size());
    require(mask.size() == spec_.k, "mask has ", mask.size(), " entries, network expects ", spec_.k);
    require(params.size() == param_count(), "parameter set does not match network layout");
    const std::size_t P = spec_.pixels();
    Tape<Scalar> local;
    Tape<Scalar>& t = tape ? *tape : local;
    t.cols.resize(spec_.conv_layers);
    t.acts.resize(spec_.conv_layers);
    t.mask.assign(mask.begin(), mask.end());

    std::span<const Scalar> in = x;
    for (std::size_t l = 0; l < spec_.conv_layers; ++l) {
      const std::size_t cin = spec_.layer_in(l), kk = spec_.kernel * spec_.kernel;
      im2col(in, cin, t.cols[l]);
      ConstMapMat w(params.at(layout_[2 * l].offset), spec_.channels, cin * kk);
      ConstMapVec b(params.at(layout_[2 * l + 1].offset), spec_.channels);
      ConstMapMat col(t.cols[l].data(), cin * kk, P);
      t.acts[l].resize(spec_.channels * P);
      MapMat out(t.acts[l].data(), spec_.channels, P);
      out.noalias() = w * col;
      out.colwise() += b;
      out = out.cwiseMax(Scalar(0));
      in = t.acts[l];
    }
    const auto& hw = layout_[2 * spec_.conv_layers];
    const auto& hb = layout_[2 * spec_.conv_layers + 1];
    ConstMapMat w(params.at(hw.offset), spec_.k, spec_.channels * P);
    ConstMapVec b(params.at(hb.offset), spec_.k);
    ConstMapVec feat(in.data(), static_cast<Eigen::Index>(in.size()));
    Vec y = w * feat + b;
    std::vector<Scalar> out(y.data(), y.data() + y.size());
    for (std::size_t i = 0; i < spec_.k; ++i)
      if (!mask[i])
        out[i] = spec_.mode == OutputMode::kLogits ? -std::numeric_limits<Scalar>::infinity() : kMaskedValue;
    return out;
  }

  /// Adds d(upstream · output)/d(params) into `grad`. Upstream entries on
  /// masked slots are ignored, so masked outputs carry no gradient.
  void backward(const ParamSet<Scalar>& params, const Tape<Scalar>& t, std::span<const Scalar> upstream,
                ParamSet<Scalar>& grad) const {
    require(upstream.size() == spec_.k, "upstream gradient length mismatch");
    require(t.acts.size() == spec_.conv_layers && t.mask.size() == spec_.k, "backward called without a forward tape");
    require(grad.size() == param_count(), "gradient set does not match network layout");
    const std::size_t P = spec_.pixels();
    Vec g(spec_.k);
    for (std::size_t i = 0; i < spec_.k; ++i) g[i] = t.mask[i] ? upstream[i] : Scalar(0);

    const auto& hw = layout_[2 * spec_.conv_layers];
    const auto& hb = layout_[2 * spec_.conv_layers + 1];
    const auto& last = t.acts.back();
    ConstMapVec feat(last.data(), static_cast<Eigen::Index>(last.size()));
    MapMat(grad.at(hw.offset), spec_.k, spec_.channels * P).noalias() += g * feat.transpose();
    MapVec(grad.at(hb.offset), spec_.k) += g;
    ConstMapMat w_head(params.at(hw.offset), spec_.k, spec_.channels * P);
    Vec d_act = w_head.transpose() * g;

    std::vector<Scalar> d_in;
    for (std::size_t l = spec_.conv_layers; l-- > 0;) {
      const std::size_t cin = spec_.layer_in(l), kk = spec_.kernel * spec_.kernel;
      ConstMapVec act(t.acts[l].data(), static_cast<Eigen::Index>(t.acts[l].size()));
      d_act = (act.array() > Scalar(0)).select(d_act, Scalar(0));
      ConstMapMat dz(d_act.data(), spec_.channels, P);
      ConstMapMat col(t.cols[l].data(), cin * kk, P);
      MapMat(grad.at(layout_[2 * l].offset), spec_.channels, cin * kk).noalias() += dz * col.transpose();
      MapVec(grad.at(layout_[2 * l + 1].offset), spec_.channels) += dz.rowwise().sum().transpose();
      if (l == 0) break;
      ConstMapMat w(params.at(layout_[2 * l].offset), spec_.channels, cin * kk);
      RowMat d_col = w.transpose() * dz;
      d_in.assign(cin * P, Scalar(0));
      col2im(d_col.data(), cin, d_in);
      d_act = ConstMapVec(d_in.data(), static_cast<Eigen::Index>(d_in.size()));
    }
  }

 private:
  // col[(c*K*K + ky*K + kx) * P + (y*k + x)] = in[c][y+ky-r][x+kx-r], zero outside.
  void im2col(std::span<const Scalar> in, std::size_t cin, std::vector<Scalar>& col) const {
    const std::size_t k = spec_.k, K = spec_.kernel, P = k * k;
    const auto r = static_cast<std::ptrdiff_t>(K / 2);
    col.assign(cin * K * K * P, Scalar(0));
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t ky = 0; ky < K; ++ky)
        for (std::size_t kx = 0; kx < K; ++kx) {
          Scalar* dst = col.data() + ((c * K + ky) * K + kx) * P;
          const auto dy = static_cast<std::ptrdiff_t>(ky) - r, dx = static_cast<std::ptrdiff_t>(kx) - r;
          for (std::size_t y = 0; y < k; ++y) {
            const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(k)) continue;
            const Scalar* src = in.data() + c * P + static_cast<std::size_t>(sy) * k;
            const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
            const std::size_t x1 = dx > 0 ? k - static_cast<std::size_t>(dx) : k;
            for (std::size_t x = x0; x < x1; ++x) dst[y * k + x] = src[static_cast<std::ptrdiff_t>(x) + dx];
          }
        }
  }

  void col2im(const Scalar* col, std::size_t cin, std::vector<Scalar>& out) const {
    const std::size_t k = spec_.k, K = spec_.kernel, P = k * k;
    const auto r = static_cast<std::ptrdiff_t>(K / 2);
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t ky = 0; ky < K; ++ky)
        for (std::size_t kx = 0; kx < K; ++kx) {
          const Scalar* src = col + ((c * K + ky) * K + kx) * P;
          const auto dy = static_cast<std::ptrdiff_t>(ky) - r, dx = static_cast<std::ptrdiff_t>(kx) - r;
          for (std::size_t y = 0; y < k; ++y) {
            const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(k)) continue;
            Scalar* dst = out.data() + c * P + static_cast<std::size_t>(sy) * k;
            const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
            const std::size_t x1 = dx > 0 ? k - static_cast<std::size_t>(dx) : k;
            for (std::size_t x = x0; x < x1; ++x) dst[static_cast<std::ptrdiff_t>(x) + dx] += src[y * k + x];
          }
        }
  }

  NetSpec spec_;
  std::vector<ParamSlice> layout_;
};

/// Masked softmax with log-sum-exp stabilisation. Masked slots get exactly 0.
template <typename Scalar>
std::vector<double> softmax_policy(std::span<const Scalar> logits, std::span<const std::uint8_t> mask) {
  require(logits.size() == mask.size(), "logits and mask differ in length");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) top = std::max(top, static_cast<double>(logits[i]));
  require(std::isfinite(top), "softmax over an empty or non-finite action set");
  std::vector<double> p(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) z += p[i] = std::exp(static_cast<double>(logits[i]) - top);
  for (auto& v : p) v /= z;
  return p;
}

inline double policy_entropy(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs)
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

template <typename Scalar>
struct AdamState {
  std::vector<Scalar> m, v;
  std::uint64_t t = 0;
  double lr = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : m(n, Scalar(0)), v(n, Scalar(0)), lr(learning_rate) {}
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

template <typename Scalar>
void adam_step(AdamState<Scalar>& st, ParamSet<Scalar>& params, const ParamSet<Scalar>& grad) {
  auto& w = params.flat();
  const auto& g = grad.flat();
  require(st.m.size() == w.size() && g.size() == w.size(), "Adam state, parameters and gradient differ in size");
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.t));
  const auto b1 = static_cast<Scalar>(st.beta1), b2 = static_cast<Scalar>(st.beta2);
  const auto step = static_cast<Scalar>(st.lr / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  const auto eps = static_cast<Scalar>(st.eps);
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (Scalar(1) - b1) * g[i];
    st.v[i] = b2 * st.v[i] + (Scalar(1) - b2) * g[i] * g[i];
    w[i] -= step * st.m[i] / (std::sqrt(st.v[i] * inv_c2) + eps);
  }
}

// Checkpoint: `path` holds the raw little-endian float64 parameters,
// `path.shapes` the network spec hash and the slice registry as plain text.
template <typename Scalar>
void save_checkpoint(const std::string& path, const NetSpec& spec, const ParamSet<Scalar>& params) {
  require(params.size() == ParamSet<Scalar>(spec).size(), "parameters do not match spec");
  std::vector<double> flat(params.flat().begin(), params.flat().end());
  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  require<ConfigError>(bool(bin), "cannot write checkpoint ", path);
  bin.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double)));
  std::ofstream txt(path + ".shapes", std::ios::trunc);
  txt << "spec_hash " << std::hex << std::setw(16) << std::setfill('0') << spec.hash() << std::dec << '\n';
  txt << "spec " << spec.canonical() << '\n';
  txt << "count " << flat.size() << '\n';
  for (const auto& s : params.layout()) {
    txt << s.name << ' ' << s.offset;
    for (auto d : s.shape) txt << ' ' << d;
    txt << '\n';
  }
  require<ConfigError>(bool(bin) && bool(txt), "failed writing checkpoint ", path);
}

template <typename Scalar>
ParamSet<Scalar> load_checkpoint(const std::string& path, const NetSpec& spec) {
  std::ifstream txt(path + ".shapes");
  require<ConfigError>(bool(txt), "missing checkpoint registry ", path, ".shapes");
  std::string key, hash_hex;
  txt >> key >> hash_hex;
  require<ParseError>(key == "spec_hash", path, ".shapes: expected spec_hash line");
  std::uint64_t stored = std::stoull(hash_hex, nullptr, 16);
  require<ConfigError>(stored == spec.hash(), "checkpoint ", path, " was written for a different network (",
                       hash_hex, " vs expected spec ", spec.canonical(), ")");
  ParamSet<double> p(spec);
  std::ifstream bin(path, std::ios::binary);
  require<ConfigError>(bool(bin), "cannot read checkpoint ", path);
  bin.read(reinterpret_cast<char*>(p.flat().data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  require<ParseError>(bin.gcount() == static_cast<std::streamsize>(p.size() * sizeof(double)),
                      "checkpoint ", path, " is truncated");
  char extra;
  require<ParseError>(!bin.read(&extra, 1), "checkpoint ", path, " has trailing bytes");
  return p.template cast<Scalar>();
}

}  // namespace nac
