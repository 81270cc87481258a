// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Encoder-decoder transformer with six ways of feeding the abstracted input
// X_s to the model.
//
//   baseline   E[X] + P
//   emb-sum    E[X] + mask * E[X_s] + P
//   emb-cat    [E[X] ; E[X_s']] W1 + b1 + P   (X_s' = X_s with <grounded>
//                                              at untagged positions)
//   enc-sum    enc(X) + enc(X_s)
//   enc-cat    [enc(X) ; enc(X_s)] W2
//   dec-loss   0.5 CE(X_s, H W_abs) + 0.5 CE(Y, H W_lm)
//
// Pre-norm layers, learned absolute positions shared by encoder and decoder,
// ReLU feed-forward, no biases outside layer norms (and b1).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abslab/abstraction.hpp"
#include "abslab/numkit/ops.hpp"
#include "abslab/numkit/tape.hpp"
#include "abslab/numkit/tensor.hpp"

namespace abslab::model {

enum class Strategy { kBaseline, kEmbSum, kEmbCat, kEncSum, kEncCat, kDecLoss };

std::string_view StrategyName(Strategy s);
Strategy ParseStrategy(std::string_view name);  // throws std::invalid_argument
std::span<const Strategy> AllStrategies();

struct ModelDims {
  int e = 64;
  int d = 64;
  int v = 0;
  int heads = 4;
  int layers = 2;
  int ff = 256;
  int kv = 16;
  int max_len = 256;

  // Throws std::invalid_argument unless e == d == heads * kv and all sizes
  // are positive.
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

struct Param {
  std::string name;
  nk::Tensor value;
};

// Per-parameter gradient buffers, index-aligned with Model::params().
struct Gradients {
  std::vector<std::vector<double>> g;

  void zero();
  double squared_norm() const;
  void scale(double factor);
};

struct ForwardOptions {
  bool train = false;
  double dropout = 0.1;
  std::mt19937_64* rng = nullptr;  // required when train && dropout > 0
};

struct LossParts {
  nk::Var total;
  double lm = 0.0;
  std::optional<double> abs;  // dec-loss only
};

enum class DecodeMode { kGreedy, kTopP };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  double top_p = 0.9;
  double temperature = 1.0;
  int max_new = 32;
  std::mt19937_64* rng = nullptr;  // required for kTopP
};

class Model;

// One forward pass on a tape. Parameters are bound to the tape lazily; with
// a Gradients sink the backward sweep accumulates into it.
class Pass {
 public:
  Pass(const Model& model, nk::Tape& tape, Gradients* grads,
       ForwardOptions options = {});

  nk::Var param(int index);

  // Encoder input for X (and X_s where the strategy uses it).
  nk::Var embed_inject(const AbstractedExample& ex);
  // Token + position embedding of an id sequence.
  nk::Var embed(std::span<const int> ids);
  nk::Var encode(nk::Var input);
  // Decoder memory: H, H + H_s or [H ; H_s] W2 depending on the strategy.
  nk::Var memory(const AbstractedExample& ex);
  nk::Var combine(nk::Var h, std::optional<nk::Var> h_s);
  // Final decoder states for the teacher-forced input ids.
  nk::Var decode(nk::Var memory, std::span<const int> input_ids);
  nk::Var lm_logits(nk::Var h_dec);
  nk::Var abs_logits(nk::Var h_dec);

  LossParts loss(const AbstractedExample& ex);

  nk::Tape& tape() { return tape_; }

 private:
  nk::Var drop(nk::Var x);
  nk::Var attention_block(nk::Var x, nk::Var kv_source, int layer_base,
                          bool causal, bool self);
  nk::Var feed_forward(nk::Var x, int layer_base);

  const Model& model_;
  nk::Tape& tape_;
  Gradients* grads_;
  ForwardOptions options_;
  std::vector<int> bound_;
};

class Model {
 public:
  // grounded_id is the vocabulary id of <grounded>; required for emb-cat.
  Model(const ModelDims& dims, Strategy strategy, std::uint64_t init_seed,
        std::optional<int> grounded_id = std::nullopt);

  const ModelDims& dims() const { return dims_; }
  Strategy strategy() const { return strategy_; }
  std::optional<int> grounded_id() const { return grounded_id_; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  int index_of(std::string_view name) const;  // throws when absent
  nk::Tensor& param(std::string_view name);
  const nk::Tensor& param(std::string_view name) const;
  std::size_t param_count() const;

  Gradients make_gradients() const;

  // Decoder input [bos] + y and targets y + [eos].
  std::vector<int> decoder_input(std::span<const int> y) const;
  std::vector<int> decoder_targets(std::span<const int> y) const;
  // X_s truncated or padded to `length`.
  std::vector<int> abstraction_targets(std::span<const int> x_s,
                                       std::size_t length) const;

  // Autoregressive decoding; returns the generated ids without bos/eos.
  std::vector<int> generate(const AbstractedExample& ex,
                            const DecodeOptions& options) const;

  // Special ids used by the decoder.
  void set_special_ids(int pad, int bos, int eos);
  int pad_id() const { return pad_; }
  int bos_id() const { return bos_; }
  int eos_id() const { return eos_; }

 private:
  friend class Pass;

  int add(std::string name, nk::Shape shape);

  ModelDims dims_;
  Strategy strategy_;
  std::optional<int> grounded_id_;
  std::vector<Param> params_;
  int pad_ = 0, bos_ = 1, eos_ = 2;

  // Indices of fixed parameters.
  int tok_ = -1, pos_ = -1, enc_ln_g_ = -1, enc_ln_b_ = -1, dec_ln_g_ = -1,
      dec_ln_b_ = -1, w_lm_ = -1, w1_ = -1, b1_ = -1, w2_ = -1, w_abs_ = -1;
  std::vector<int> enc_layer_, dec_layer_;  // first index of each layer
};

// Parameters added by a strategy over the baseline at the same dims.
std::size_t ExpectedExtraParams(Strategy s, const ModelDims& dims);

// Indices of the smallest set of most probable tokens whose mass reaches p
// (ties broken by lower id).
std::vector<int> Nucleus(std::span<const double> probs, double p);
// Samples from softmax(logits / temperature) restricted to its nucleus.
int SampleTopP(std::span<const double> logits, double p, double temperature,
               std::mt19937_64& rng);

// Checkpoint: one JSON header line, then raw float64 parameter blocks in
// header order.
void SaveCheckpoint(const std::filesystem::path& path, const Model& model,
                    std::uint64_t vocab_hash);
struct LoadedModel {
  Model model;
  std::uint64_t vocab_hash;
};
// Throws std::runtime_error on malformed files or, when expected_vocab_hash
// is given, on a hash mismatch.
LoadedModel LoadCheckpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash =
                               std::nullopt);

}  // namespace abslab::model
