// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace abslab::model {

namespace {

// Offsets inside one layer block. Encoder layers hold self-attention then
// feed-forward (10 tensors); decoder layers add cross-attention (16).
constexpr int kLn1G = 0, kLn1B = 1, kWq = 2;
constexpr int kEncLn2G = 6;
constexpr int kDecLn2G = 6, kDecLn2B = 7, kCq = 8, kDecLn3G = 12;

constexpr std::array<Strategy, 6> kAll = {
    Strategy::kBaseline, Strategy::kEmbSum, Strategy::kEmbCat,
    Strategy::kEncSum,   Strategy::kEncCat, Strategy::kDecLoss};
constexpr std::array<std::string_view, 6> kNames = {
    "baseline", "emb-sum", "emb-cat", "enc-sum", "enc-cat", "dec-loss"};

constexpr std::string_view kCheckpointFormat = "abslab-checkpoint";

bool UsesEncoderTwice(Strategy s) {
  return s == Strategy::kEncSum || s == Strategy::kEncCat;
}

// 0..length-1; throws when the sequence does not fit the position table.
std::vector<int> Positions(std::size_t length, int max_len) {
  if (length > static_cast<std::size_t>(max_len)) {
    throw std::invalid_argument("sequence of length " +
                                std::to_string(length) + " exceeds max_len " +
                                std::to_string(max_len));
  }
  std::vector<int> out(length);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::string Hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

}  // namespace

std::string_view StrategyName(Strategy s) {
  return kNames[static_cast<int>(s)];
}

Strategy ParseStrategy(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAll[i];
  }
  throw std::invalid_argument(
      "unknown strategy '" + std::string(name) +
      "' (expected baseline, emb-sum, emb-cat, enc-sum, enc-cat, dec-loss)");
}

std::span<const Strategy> AllStrategies() { return kAll; }

void ModelDims::validate() const {
  if (e <= 0 || d <= 0 || v <= 0 || heads <= 0 || layers <= 0 || ff <= 0 ||
      kv <= 0 || max_len <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (e != d) throw std::invalid_argument("model requires e == d");
  if (d != heads * kv) {
    throw std::invalid_argument("model requires d == heads * kv");
  }
}

// --------------------------------------------------------------- Gradients

void Gradients::zero() {
  for (auto& buf : g) std::fill(buf.begin(), buf.end(), 0.0);
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const auto& buf : g) {
    for (double x : buf) total += x * x;
  }
  return total;
}

void Gradients::scale(double factor) {
  for (auto& buf : g) {
    for (double& x : buf) x *= factor;
  }
}

// ------------------------------------------------------------------- Model

int Model::add(std::string name, nk::Shape shape) {
  params_.push_back(Param{std::move(name), nk::Tensor(std::move(shape))});
  return static_cast<int>(params_.size()) - 1;
}

Model::Model(const ModelDims& dims, Strategy strategy, std::uint64_t init_seed,
             std::optional<int> grounded_id)
    : dims_(dims), strategy_(strategy), grounded_id_(grounded_id) {
  dims_.validate();
  if (strategy == Strategy::kEmbCat &&
      (!grounded_id || *grounded_id < 0 || *grounded_id >= dims.v)) {
    throw std::invalid_argument("emb-cat needs a <grounded> vocabulary id");
  }
  const std::size_t d = dims.d, v = dims.v, ff = dims.ff;

  tok_ = add("embed.token", {v, d});
  pos_ = add("embed.position", {static_cast<std::size_t>(dims.max_len), d});
  auto ln = [&](const std::string& prefix) {
    add(prefix + ".gain", {d});
    add(prefix + ".bias", {d});
  };
  for (int l = 0; l < dims.layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    enc_layer_.push_back(static_cast<int>(params_.size()));
    ln(p + ".attn.norm");
    for (const char* w : {"wq", "wk", "wv", "wo"}) add(p + ".attn." + w, {d, d});
    ln(p + ".ff.norm");
    add(p + ".ff.w1", {d, ff});
    add(p + ".ff.w2", {ff, d});
  }
  enc_ln_g_ = add("encoder.norm.gain", {d});
  enc_ln_b_ = add("encoder.norm.bias", {d});
  for (int l = 0; l < dims.layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    dec_layer_.push_back(static_cast<int>(params_.size()));
    ln(p + ".self.norm");
    for (const char* w : {"wq", "wk", "wv", "wo"}) add(p + ".self." + w, {d, d});
    ln(p + ".cross.norm");
    for (const char* w : {"wq", "wk", "wv", "wo"}) {
      add(p + ".cross." + w, {d, d});
    }
    ln(p + ".ff.norm");
    add(p + ".ff.w1", {d, ff});
    add(p + ".ff.w2", {ff, d});
  }
  dec_ln_g_ = add("decoder.norm.gain", {d});
  dec_ln_b_ = add("decoder.norm.bias", {d});
  w_lm_ = add("head.lm", {d, v});
  switch (strategy) {
    case Strategy::kEmbCat:
      w1_ = add("inject.w1", {2 * d, d});
      b1_ = add("inject.b1", {d});
      break;
    case Strategy::kEncCat:
      w2_ = add("combine.w2", {2 * d, d});
      break;
    case Strategy::kDecLoss:
      w_abs_ = add("head.abs", {d, v});
      break;
    default:
      break;
  }

  std::mt19937_64 rng(init_seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (Param& p : params_) {
    const bool is_gain = p.name.ends_with(".gain");
    const bool is_bias = p.name.ends_with(".bias") || p.name == "inject.b1";
    for (double& x : p.value.data()) {
      x = is_gain ? 1.0 : is_bias ? 0.0 : normal(rng);
    }
  }
  if (w_abs_ >= 0) {
    auto src = params_[w_lm_].value.data();
    std::copy(src.begin(), src.end(), params_[w_abs_].value.data().begin());
  }
}

int Model::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  throw std::out_of_range("no parameter named " + std::string(name));
}

nk::Tensor& Model::param(std::string_view name) {
  return params_[index_of(name)].value;
}

const nk::Tensor& Model::param(std::string_view name) const {
  return params_[index_of(name)].value;
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const Param& p : params_) n += p.value.size();
  return n;
}

Gradients Model::make_gradients() const {
  Gradients g;
  for (const Param& p : params_) g.g.emplace_back(p.value.size(), 0.0);
  return g;
}

void Model::set_special_ids(int pad, int bos, int eos) {
  for (int id : {pad, bos, eos}) {
    if (id < 0 || id >= dims_.v) {
      throw std::invalid_argument("special id outside the vocabulary");
    }
  }
  pad_ = pad;
  bos_ = bos;
  eos_ = eos;
}

std::vector<int> Model::decoder_input(std::span<const int> y) const {
  std::vector<int> out{bos_};
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

std::vector<int> Model::decoder_targets(std::span<const int> y) const {
  std::vector<int> out(y.begin(), y.end());
  out.push_back(eos_);
  return out;
}

std::vector<int> Model::abstraction_targets(std::span<const int> x_s,
                                            std::size_t length) const {
  std::vector<int> out(length, pad_);
  std::copy_n(x_s.begin(), std::min(length, x_s.size()), out.begin());
  return out;
}

std::size_t ExpectedExtraParams(Strategy s, const ModelDims& dims) {
  const std::size_t e = dims.e, d = dims.d, v = dims.v;
  switch (s) {
    case Strategy::kEmbCat:
      return 2 * e * e + e;
    case Strategy::kEncCat:
      return 2 * d * d;
    case Strategy::kDecLoss:
      return d * v;
    default:
      return 0;
  }
}

// -------------------------------------------------------------------- Pass

Pass::Pass(const Model& model, nk::Tape& tape, Gradients* grads,
           ForwardOptions options)
    : model_(model),
      tape_(tape),
      grads_(grads),
      options_(options),
      bound_(model.params().size(), -1) {
  if (options_.train && options_.dropout > 0.0 && options_.rng == nullptr) {
    throw std::invalid_argument("training pass with dropout needs an rng");
  }
}

nk::Var Pass::param(int index) {
  int& id = bound_.at(index);
  if (id < 0) {
    std::vector<double>* sink = grads_ ? &grads_->g[index] : nullptr;
    id = tape_.param(model_.params_[index].value, sink).id;
  }
  return nk::Var{&tape_, id};
}

nk::Var Pass::drop(nk::Var x) {
  if (!options_.train || options_.dropout <= 0.0) return x;
  return nk::dropout(x, options_.dropout, *options_.rng);
}

nk::Var Pass::embed(std::span<const int> ids) {
  const std::vector<int> positions = Positions(ids.size(), model_.dims_.max_len);
  return nk::add(nk::embedding_lookup(param(model_.tok_), ids),
                 nk::embedding_lookup(param(model_.pos_), positions));
}

nk::Var Pass::embed_inject(const AbstractedExample& ex) {
  const std::size_t t = ex.x.size();
  const Strategy s = model_.strategy_;
  if (s == Strategy::kEmbSum || s == Strategy::kEmbCat) {
    if (ex.x_s.size() != t || ex.mask.size() != t) {
      throw std::invalid_argument("X, X_s and mask lengths differ");
    }
  }
  if (s == Strategy::kEmbSum) {
    const std::vector<int> positions = Positions(t, model_.dims_.max_len);
    const std::size_t e = model_.dims_.e;
    nk::Tensor mask({t, e});
    for (std::size_t i = 0; i < t; ++i) {
      std::fill_n(mask.raw() + i * e, e, ex.mask[i] ? 1.0 : 0.0);
    }
    nk::Var tok = param(model_.tok_);
    nk::Var sum = nk::add(
        nk::embedding_lookup(tok, ex.x),
        nk::mul(tape_.constant(std::move(mask)),
                nk::embedding_lookup(tok, ex.x_s)));
    return nk::add(sum, nk::embedding_lookup(param(model_.pos_), positions));
  }
  if (s == Strategy::kEmbCat) {
    std::vector<int> grounded(t);
    for (std::size_t i = 0; i < t; ++i) {
      grounded[i] = ex.mask[i] ? ex.x_s[i] : *model_.grounded_id_;
    }
    const std::vector<int> positions = Positions(t, model_.dims_.max_len);
    nk::Var tok = param(model_.tok_);
    nk::Var cat = nk::concat_last_axis(nk::embedding_lookup(tok, ex.x),
                                       nk::embedding_lookup(tok, grounded));
    nk::Var proj = nk::add_row(nk::matmul(cat, param(model_.w1_)),
                               param(model_.b1_));
    return nk::add(proj, nk::embedding_lookup(param(model_.pos_), positions));
  }
  return embed(ex.x);
}

nk::Var Pass::attention_block(nk::Var x, nk::Var kv_source, int base,
                              bool causal, bool self) {
  const int q_off = self ? kWq : kCq;
  const int norm_g = self ? kLn1G : kDecLn2G;
  const int norm_b = self ? kLn1B : kDecLn2B;
  nk::Var h = nk::layernorm(x, param(base + norm_g), param(base + norm_b));
  nk::Var src = self ? h : kv_source;
  nk::Var q = nk::matmul(h, param(base + q_off));
  nk::Var k = nk::matmul(src, param(base + q_off + 1));
  nk::Var v = nk::matmul(src, param(base + q_off + 2));
  nk::Var a = nk::attention(q, k, v, model_.dims_.heads, causal);
  return nk::add(x, drop(nk::matmul(a, param(base + q_off + 3))));
}

nk::Var Pass::feed_forward(nk::Var x, int base) {
  nk::Var h = nk::layernorm(x, param(base), param(base + 1));
  nk::Var inner = nk::relu(nk::matmul(h, param(base + 2)));
  return nk::add(x, drop(nk::matmul(inner, param(base + 3))));
}

nk::Var Pass::encode(nk::Var input) {
  nk::Var x = drop(input);
  for (int base : model_.enc_layer_) {
    x = attention_block(x, x, base, /*causal=*/false, /*self=*/true);
    x = feed_forward(x, base + kEncLn2G);
  }
  return nk::layernorm(x, param(model_.enc_ln_g_), param(model_.enc_ln_b_));
}

nk::Var Pass::combine(nk::Var h, std::optional<nk::Var> h_s) {
  switch (model_.strategy_) {
    case Strategy::kEncSum:
      return nk::add(h, h_s.value());
    case Strategy::kEncCat:
      return nk::matmul(nk::concat_last_axis(h, h_s.value()),
                        param(model_.w2_));
    default:
      return h;
  }
}

nk::Var Pass::memory(const AbstractedExample& ex) {
  nk::Var h = encode(embed_inject(ex));
  if (!UsesEncoderTwice(model_.strategy_)) return h;
  if (ex.x_s.size() != ex.x.size()) {
    throw std::invalid_argument("X and X_s lengths differ");
  }
  return combine(h, encode(embed(ex.x_s)));
}

nk::Var Pass::decode(nk::Var memory, std::span<const int> input_ids) {
  nk::Var x = drop(embed(input_ids));
  for (int base : model_.dec_layer_) {
    x = attention_block(x, x, base, /*causal=*/true, /*self=*/true);
    x = attention_block(x, memory, base, /*causal=*/false, /*self=*/false);
    x = feed_forward(x, base + kDecLn3G);
  }
  return nk::layernorm(x, param(model_.dec_ln_g_), param(model_.dec_ln_b_));
}

nk::Var Pass::lm_logits(nk::Var h_dec) {
  return nk::matmul(h_dec, param(model_.w_lm_));
}

nk::Var Pass::abs_logits(nk::Var h_dec) {
  if (model_.w_abs_ < 0) {
    throw std::logic_error("abstraction head exists only for dec-loss");
  }
  return nk::matmul(h_dec, param(model_.w_abs_));
}

LossParts Pass::loss(const AbstractedExample& ex) {
  nk::Var mem = memory(ex);
  const std::vector<int> input = model_.decoder_input(ex.y);
  const std::vector<int> targets = model_.decoder_targets(ex.y);
  nk::Var h = decode(mem, input);
  nk::Var lm = nk::cross_entropy(nk::softmax(lm_logits(h)), targets,
                                 model_.pad_);
  LossParts out;
  out.lm = lm.value()[0];
  if (model_.strategy_ != Strategy::kDecLoss) {
    out.total = lm;
    return out;
  }
  const std::vector<int> abs_targets =
      model_.abstraction_targets(ex.x_s, input.size());
  nk::Var abs = nk::cross_entropy(nk::softmax(abs_logits(h)), abs_targets,
                                  model_.pad_);
  out.abs = abs.value()[0];
  out.total = nk::add(nk::scale(abs, 0.5), nk::scale(lm, 0.5));
  return out;
}

// -------------------------------------------------------------- Generation

std::vector<int> Nucleus(std::span<const double> probs, double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("top-p must lie in (0, 1]");
  }
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
  double mass = 0.0;
  std::vector<int> out;
  for (int i : order) {
    out.push_back(i);
    mass += probs[i];
    if (mass >= p) break;
  }
  return out;
}

int SampleTopP(std::span<const double> logits, double p, double temperature,
               std::mt19937_64& rng) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - peak) / temperature);
    z += probs[i];
  }
  for (double& q : probs) q /= z;
  const std::vector<int> keep = Nucleus(probs, p);
  double kept = 0.0;
  for (int i : keep) kept += probs[i];
  double u = std::uniform_real_distribution<double>(0.0, kept)(rng);
  for (int i : keep) {
    u -= probs[i];
    if (u <= 0.0) return i;
  }
  return keep.back();
}

std::vector<int> Model::generate(const AbstractedExample& ex,
                                 const DecodeOptions& options) const {
  if (options.mode == DecodeMode::kTopP && options.rng == nullptr) {
    throw std::invalid_argument("top-p decoding needs an rng");
  }
  nk::Tape tape(/*record_grads=*/false);
  Pass pass(*this, tape, nullptr);
  nk::Var mem = pass.memory(ex);
  std::vector<int> prefix{bos_};
  std::vector<int> out;
  const int limit = std::min(options.max_new, dims_.max_len - 1);
  for (int step = 0; step < limit; ++step) {
    nk::Var h = pass.decode(mem, prefix);
    nk::Var logits = pass.lm_logits(h);
    auto last = logits.value().row(prefix.size() - 1);
    int next;
    if (options.mode == DecodeMode::kGreedy) {
      next = static_cast<int>(std::max_element(last.begin(), last.end()) -
                              last.begin());
    } else {
      next = SampleTopP(last, options.top_p, options.temperature,
                        *options.rng);
    }
    if (next == eos_) break;
    out.push_back(next);
    prefix.push_back(next);
  }
  return out;
}

// -------------------------------------------------------------- Checkpoint

void SaveCheckpoint(const std::filesystem::path& path, const Model& model,
                    std::uint64_t vocab_hash) {
  const ModelDims& d = model.dims();
  nlohmann::ordered_json header;
  header["format"] = kCheckpointFormat;
  header["version"] = 1;
  header["strategy"] = StrategyName(model.strategy());
  header["dims"] = {{"e", d.e},         {"d", d.d},       {"v", d.v},
                    {"heads", d.heads}, {"layers", d.layers},
                    {"ff", d.ff},       {"kv", d.kv},     {"max_len", d.max_len}};
  header["special"] = {{"pad", model.pad_id()},
                       {"bos", model.bos_id()},
                       {"eos", model.eos_id()}};
  header["grounded_id"] = model.grounded_id()
                              ? nlohmann::ordered_json(*model.grounded_id())
                              : nlohmann::ordered_json(nullptr);
  header["vocab_hash"] = Hex(vocab_hash);
  auto& params = header["params"] = nlohmann::ordered_json::array();
  for (const Param& p : model.params()) {
    params.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header.dump() << '\n';
  for (const Param& p : model.params()) {
    out.write(reinterpret_cast<const char*>(p.value.raw()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

LoadedModel ReadCheckpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint header is not JSON: " +
                             std::string(e.what()));
  }
  if (header.value("format", "") != kCheckpointFormat) {
    throw std::runtime_error(path.string() + " is not an abslab checkpoint");
  }
  const std::uint64_t hash =
      std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
  if (expected_vocab_hash && *expected_vocab_hash != hash) {
    throw std::runtime_error("checkpoint vocabulary hash " + Hex(hash) +
                             " does not match vocabulary " +
                             Hex(*expected_vocab_hash));
  }
  const auto& jd = header.at("dims");
  ModelDims dims;
  dims.e = jd.at("e");
  dims.d = jd.at("d");
  dims.v = jd.at("v");
  dims.heads = jd.at("heads");
  dims.layers = jd.at("layers");
  dims.ff = jd.at("ff");
  dims.kv = jd.at("kv");
  dims.max_len = jd.at("max_len");
  std::optional<int> grounded;
  if (!header.at("grounded_id").is_null()) {
    grounded = header.at("grounded_id").get<int>();
  }
  Model model(dims, ParseStrategy(header.at("strategy").get<std::string>()), 0,
              grounded);
  const auto& sp = header.at("special");
  model.set_special_ids(sp.at("pad"), sp.at("bos"), sp.at("eos"));
  const auto& names = header.at("params");
  if (names.size() != model.params().size()) {
    throw std::runtime_error("checkpoint parameter list does not match model");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    Param& p = model.params()[i];
    if (names[i].at("name").get<std::string>() != p.name ||
        names[i].at("shape").get<nk::Shape>() != p.value.shape()) {
      throw std::runtime_error("checkpoint parameter " + p.name +
                               " does not match model layout");
    }
    in.read(reinterpret_cast<char*>(p.value.raw()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint truncated at " + p.name);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint has trailing bytes");
  }
  return LoadedModel{std::move(model), hash};
}

}  // namespace

LoadedModel LoadCheckpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash) {
  try {
    return ReadCheckpoint(path, expected_vocab_hash);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint header in " +
                             path.string() + ": " + e.what());
  }
}

}  // namespace abslab::model
