#include "parskit/adapter.hpp"

#include <cmath>
#include <numbers>

#include "parskit/error.hpp"
#include "parskit/util.hpp"

namespace parskit {

namespace {

std::vector<std::string> split_csv(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    std::string item = trim_ascii_ws(s.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

// d_in, d_out of the targeted projection
std::pair<int64_t, int64_t> target_dims(const ModelShape& shape, LoraTarget t) {
  switch (t) {
    case LoraTarget::q:
    case LoraTarget::k:
    case LoraTarget::v:
    case LoraTarget::o:
      return {shape.hidden, shape.hidden};
    case LoraTarget::mlp_gate:
    case LoraTarget::mlp_up:
      return {shape.hidden, shape.ffn_hidden};
    case LoraTarget::mlp_down:
      return {shape.ffn_hidden, shape.hidden};
  }
  raise(errc::invalid_config, "bad lora target");
}

void check_adapter(const Matrix& w, const AdapterPair& adapter) {
  if (adapter.a.rows() == 0 || adapter.b.cols() == 0)
    raise(errc::shape_mismatch, "adapter factors must be non-empty");
  if (adapter.a.rows() != adapter.b.cols())
    raise(errc::shape_mismatch, "A rows must equal B cols (the adapter rank)");
  if (adapter.a.cols() != w.cols())
    raise(errc::shape_mismatch, "A cols must equal the base matrix input dim");
  if (adapter.b.rows() != w.rows())
    raise(errc::shape_mismatch, "B rows must equal the base matrix output dim");
}

}  // namespace

void ModelShape::validate() const {
  if (layers <= 0 || hidden <= 0 || heads <= 0 || ffn_hidden <= 0 || vocab <= 0)
    raise(errc::invalid_range, "shape dimensions must be positive");
  if (hidden % heads != 0)
    raise(errc::invalid_range, "hidden must be divisible by heads");
}

ModelShape ModelShape::from_config_file(const std::string& path) {
  auto kv = parse_kv_file(path);
  ModelShape s;
  s.layers = kv_int(kv, "layers");
  s.hidden = kv_int(kv, "hidden");
  s.heads = kv_int(kv, "heads");
  s.ffn_hidden = kv_int(kv, "ffn_hidden");
  s.vocab = kv_int(kv, "vocab");
  if (kv_opt(kv, "tied_embeddings")) s.tied_embeddings = kv_bool(kv, "tied_embeddings");
  s.validate();
  return s;
}

const char* lora_target_name(LoraTarget t) {
  switch (t) {
    case LoraTarget::q: return "q";
    case LoraTarget::k: return "k";
    case LoraTarget::v: return "v";
    case LoraTarget::o: return "o";
    case LoraTarget::mlp_gate: return "mlp_gate";
    case LoraTarget::mlp_up: return "mlp_up";
    case LoraTarget::mlp_down: return "mlp_down";
  }
  return "unknown";
}

LoraTarget lora_target_from_name(std::string_view name) {
  if (name == "q") return LoraTarget::q;
  if (name == "k") return LoraTarget::k;
  if (name == "v") return LoraTarget::v;
  if (name == "o") return LoraTarget::o;
  if (name == "mlp_gate") return LoraTarget::mlp_gate;
  if (name == "mlp_up") return LoraTarget::mlp_up;
  if (name == "mlp_down") return LoraTarget::mlp_down;
  raise(errc::invalid_config, "unknown lora target: " + std::string(name));
}

void LoraSpec::validate() const {
  if (rank <= 0) raise(errc::invalid_range, "rank must be positive");
  if (alpha <= 0.0) raise(errc::invalid_range, "alpha must be positive");
  if (dropout < 0.0 || dropout >= 1.0) raise(errc::invalid_range, "dropout must be in [0, 1)");
}

LoraSpec LoraSpec::from_config_file(const std::string& path) {
  auto kv = parse_kv_file(path);
  LoraSpec spec;
  spec.rank = kv_int(kv, "rank");
  spec.alpha = kv_double(kv, "alpha");
  if (kv_opt(kv, "dropout")) spec.dropout = kv_double(kv, "dropout");
  auto targets = kv_opt(kv, "targets");
  if (!targets) raise(errc::invalid_config, "missing key: targets");
  for (const std::string& name : split_csv(*targets))
    spec.targets.insert(lora_target_from_name(name));
  if (kv_opt(kv, "train_embeddings")) spec.train_embeddings = kv_bool(kv, "train_embeddings");
  if (kv_opt(kv, "train_lm_head")) spec.train_lm_head = kv_bool(kv, "train_lm_head");
  spec.validate();
  return spec;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) raise(errc::invalid_range, "learning_rate must be positive");
  if (max_length <= 0) raise(errc::invalid_range, "max_length must be positive");
  if (decay < 0.0 || decay > 1.0) raise(errc::invalid_range, "decay must be in [0, 1]");
  if (dropout < 0.0 || dropout >= 1.0) raise(errc::invalid_range, "dropout must be in [0, 1)");
  if (epochs <= 0 || batch_size <= 0) raise(errc::invalid_range, "epochs/batch_size must be positive");
  if (warmup_steps < 0) raise(errc::invalid_range, "warmup_steps must be non-negative");
}

TrainConfig TrainConfig::from_config_file(const std::string& path) {
  auto kv = parse_kv_file(path);
  TrainConfig cfg;
  cfg.learning_rate = kv_double(kv, "learning_rate");
  cfg.max_length = kv_int(kv, "max_length");
  if (auto v = kv_opt(kv, "scheduler")) cfg.scheduler = *v;
  if (kv_opt(kv, "decay")) cfg.decay = kv_double(kv, "decay");
  if (kv_opt(kv, "dropout")) cfg.dropout = kv_double(kv, "dropout");
  if (auto v = kv_opt(kv, "dtype")) cfg.dtype_label = *v;
  if (kv_opt(kv, "epochs")) cfg.epochs = kv_int(kv, "epochs");
  if (kv_opt(kv, "batch_size")) cfg.batch_size = kv_int(kv, "batch_size");
  if (kv_opt(kv, "warmup_steps")) cfg.warmup_steps = kv_int(kv, "warmup_steps");
  cfg.validate();
  return cfg;
}

std::vector<TensorInfo> model_tensors(const ModelShape& shape) {
  shape.validate();
  std::vector<TensorInfo> out;
  out.push_back({"embed_tokens", shape.vocab, shape.hidden});
  for (int64_t i = 0; i < shape.layers; ++i) {
    std::string p = "layers." + std::to_string(i) + ".";
    out.push_back({p + "attn_q", shape.hidden, shape.hidden});
    out.push_back({p + "attn_k", shape.hidden, shape.hidden});
    out.push_back({p + "attn_v", shape.hidden, shape.hidden});
    out.push_back({p + "attn_o", shape.hidden, shape.hidden});
    out.push_back({p + "mlp_gate", shape.ffn_hidden, shape.hidden});
    out.push_back({p + "mlp_up", shape.ffn_hidden, shape.hidden});
    out.push_back({p + "mlp_down", shape.hidden, shape.ffn_hidden});
    out.push_back({p + "attn_norm", shape.hidden, 1});
    out.push_back({p + "mlp_norm", shape.hidden, 1});
  }
  out.push_back({"norm", shape.hidden, 1});
  if (!shape.tied_embeddings) out.push_back({"lm_head", shape.vocab, shape.hidden});
  return out;
}

int64_t count_params(const ModelShape& shape) {
  shape.validate();
  int64_t h = shape.hidden;
  int64_t per_layer = 4 * h * h + 3 * shape.ffn_hidden * h + 2 * h;
  int64_t total = shape.vocab * h + shape.layers * per_layer + h;
  if (!shape.tied_embeddings) total += shape.vocab * h;
  return total;
}

std::vector<TensorInfo> adapter_tensors(const ModelShape& shape, const LoraSpec& spec) {
  shape.validate();
  spec.validate();
  std::vector<TensorInfo> out;
  for (int64_t i = 0; i < shape.layers; ++i) {
    std::string p = "layers." + std::to_string(i) + ".";
    for (LoraTarget t : spec.targets) {
      auto [d_in, d_out] = target_dims(shape, t);
      std::string base = p + (t == LoraTarget::q || t == LoraTarget::k ||
                                      t == LoraTarget::v || t == LoraTarget::o
                                  ? std::string("attn_") + lora_target_name(t)
                                  : lora_target_name(t));
      out.push_back({base + ".lora_A", spec.rank, d_in});
      out.push_back({base + ".lora_B", d_out, spec.rank});
    }
  }
  if (spec.train_embeddings) out.push_back({"embed_tokens", shape.vocab, shape.hidden});
  // With tied embeddings the head is the embedding, so the flag adds nothing.
  if (spec.train_lm_head && !shape.tied_embeddings)
    out.push_back({"lm_head", shape.vocab, shape.hidden});
  return out;
}

int64_t lora_param_count(const ModelShape& shape, const LoraSpec& spec) {
  shape.validate();
  spec.validate();
  int64_t per_layer = 0;
  for (LoraTarget t : spec.targets) {
    auto [d_in, d_out] = target_dims(shape, t);
    per_layer += spec.rank * (d_in + d_out);
  }
  int64_t total = per_layer * shape.layers;
  if (spec.train_embeddings) total += shape.vocab * shape.hidden;
  if (spec.train_lm_head && !shape.tied_embeddings) total += shape.vocab * shape.hidden;
  return total;
}

double trainable_fraction(int64_t trainable, int64_t total) {
  if (total == 0) raise(errc::zero_total, "total parameter count is zero");
  if (total < 0 || trainable < 0) raise(errc::invalid_range, "parameter counts must be non-negative");
  return 100.0 * static_cast<double>(trainable) / static_cast<double>(total);
}

std::vector<ReconCandidate> reconciliation_candidates(const ModelShape& shape,
                                                      const LoraSpec& spec,
                                                      int64_t new_vocab_rows) {
  if (new_vocab_rows < 0) raise(errc::invalid_range, "new_vocab_rows must be non-negative");
  LoraSpec adapters_only = spec;
  adapters_only.train_embeddings = false;
  adapters_only.train_lm_head = false;

  int64_t base = lora_param_count(shape, adapters_only);
  int64_t total = count_params(shape);
  int64_t vh = shape.vocab * shape.hidden;

  std::vector<ReconCandidate> out;
  auto push = [&](std::string label, int64_t trainable) {
    out.push_back({std::move(label), trainable, trainable_fraction(trainable, total)});
  };
  push("adapters_only", base);
  push("adapters_plus_new_vocab_rows", base + 2 * new_vocab_rows * shape.hidden);
  push("adapters_plus_full_embeddings", base + vh);
  push("adapters_plus_full_embeddings_and_head", base + 2 * vh);
  return out;
}

std::vector<double> adapter_forward(const Matrix& w, const AdapterPair& adapter,
                                    std::span<const double> x) {
  check_adapter(w, adapter);
  std::vector<double> wx = matvec(w, x);
  std::vector<double> ax = matvec(adapter.a, x);
  std::vector<double> bax = matvec(adapter.b, ax);
  for (size_t i = 0; i < wx.size(); ++i) wx[i] += adapter.scaling * bax[i];
  return wx;
}

Matrix merge_adapter(const Matrix& w, const AdapterPair& adapter) {
  check_adapter(w, adapter);
  Matrix delta = matmul(adapter.b, adapter.a);
  delta.scale(adapter.scaling);
  return add(w, delta);
}

double cosine_lr(int64_t step, int64_t total_steps, double peak_lr,
                 double min_ratio, int64_t warmup_steps) {
  if (total_steps <= 0) raise(errc::invalid_range, "total_steps must be positive");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    raise(errc::invalid_range, "warmup_steps must be in [0, total_steps)");
  if (step < 0 || step > total_steps)
    raise(errc::invalid_range, "step must be in [0, total_steps]");
  if (peak_lr <= 0.0) raise(errc::invalid_range, "peak_lr must be positive");
  if (min_ratio < 0.0 || min_ratio > 1.0)
    raise(errc::invalid_range, "min_ratio must be in [0, 1]");

  if (step < warmup_steps)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);

  double progress = static_cast<double>(step - warmup_steps) /
                    static_cast<double>(total_steps - warmup_steps);
  return peak_lr *
         (min_ratio + (1.0 - min_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

}  // namespace parskit
