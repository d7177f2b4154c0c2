#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "parskit/matrix.hpp"

namespace parskit {

// Parameter accounting and low-rank adapter arithmetic for decoder-only
// transformer shapes (untied output head optional, RMS-norm weights,
// gate/up/down feed-forward).

struct ModelShape {
  int64_t layers = 0;
  int64_t hidden = 0;
  int64_t heads = 0;
  int64_t ffn_hidden = 0;
  int64_t vocab = 0;
  bool tied_embeddings = false;

  void validate() const;  // positive dims, hidden divisible by heads
  static ModelShape from_config_file(const std::string& path);
};

enum class LoraTarget { q, k, v, o, mlp_gate, mlp_up, mlp_down };

const char* lora_target_name(LoraTarget t);
LoraTarget lora_target_from_name(std::string_view name);  // throws invalid_config

struct LoraSpec {
  int64_t rank = 0;
  double alpha = 0.0;
  double dropout = 0.0;
  std::set<LoraTarget> targets;
  bool train_embeddings = false;
  bool train_lm_head = false;

  double scaling() const { return alpha / static_cast<double>(rank); }
  void validate() const;  // rank > 0, alpha > 0, 0 <= dropout < 1
  static LoraSpec from_config_file(const std::string& path);
};

// Training hyperparameters carried as data; validation only checks the
// obviously broken (non-positive lr, lengths, counts).
struct TrainConfig {
  double learning_rate = 0.0;
  int64_t max_length = 0;
  std::string scheduler = "cosine";
  double decay = 0.0;  // final-to-peak learning rate ratio
  double dropout = 0.0;
  std::string dtype_label;
  int64_t epochs = 1;
  int64_t batch_size = 1;
  int64_t warmup_steps = 0;

  void validate() const;
  static TrainConfig from_config_file(const std::string& path);
};

struct TensorInfo {
  std::string name;
  int64_t rows = 0;
  int64_t cols = 0;  // 1 for vectors
  int64_t elements() const { return rows * cols; }
};

// Full per-tensor enumeration of the model: embedding, per layer q/k/v/o,
// gate/up/down, two norm vectors, the final norm, and the output head when
// embeddings are untied.
std::vector<TensorInfo> model_tensors(const ModelShape& shape);

// Closed-form total; equal to summing model_tensors by construction, and
// cross-checked against an independent enumeration in the tests.
int64_t count_params(const ModelShape& shape);

// Adapter factor pairs per targeted matrix per layer, plus the full
// embedding / head tensors when the corresponding train flags are set.
std::vector<TensorInfo> adapter_tensors(const ModelShape& shape, const LoraSpec& spec);

// Per targeted matrix: rank * (d_in + d_out), summed over layers.
int64_t lora_param_count(const ModelShape& shape, const LoraSpec& spec);

// Percentage in [0, 100]; throws errc::zero_total when total == 0 and
// errc::invalid_range on negative inputs.
double trainable_fraction(int64_t trainable, int64_t total);

struct ReconCandidate {
  std::string label;
  int64_t trainable = 0;
  double fraction = 0.0;  // percent of count_params(shape)
};

// Candidate decompositions of a reported trainable-parameter figure:
// adapters alone, adapters plus embedding/head rows added for new
// vocabulary, adapters plus the full embedding, adapters plus full
// embedding and head.
std::vector<ReconCandidate> reconciliation_candidates(const ModelShape& shape,
                                                      const LoraSpec& spec,
                                                      int64_t new_vocab_rows);

struct AdapterPair {
  Matrix a;      // rank x d_in
  Matrix b;      // d_out x rank
  double scaling = 1.0;  // alpha / rank
};

// W x + scaling * B (A x); throws errc::shape_mismatch.
std::vector<double> adapter_forward(const Matrix& w, const AdapterPair& adapter,
                                    std::span<const double> x);

// W + scaling * B A; same shape as W.
Matrix merge_adapter(const Matrix& w, const AdapterPair& adapter);

// Linear warmup from 0 to peak over warmup_steps, then cosine decay to
// peak * min_ratio at total_steps.  Continuous at the boundary; throws
// errc::invalid_range on out-of-range arguments.
double cosine_lr(int64_t step, int64_t total_steps, double peak_lr,
                 double min_ratio, int64_t warmup_steps);

}  // namespace parskit
