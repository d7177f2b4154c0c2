// parskit command line: normalization, tokenizer training, vocabulary
// merging, adapter math and evaluation metrics behind one binary.

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "parskit/adapter.hpp"
#include "parskit/bpe.hpp"
#include "parskit/error.hpp"
#include "parskit/metrics.hpp"
#include "parskit/normalize.hpp"
#include "parskit/tensor_file.hpp"
#include "parskit/util.hpp"
#include "parskit/vocab_merge.hpp"

namespace {

using json = nlohmann::json;
using namespace parskit;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUnknownCommand = 64;
constexpr int kExitBadFlag = 65;
constexpr int kExitIo = 66;

int log_level() {
  static int level = [] {
    const char* v = std::getenv("PARSKIT_LOG");
    if (!v) return 1;
    std::string s = v;
    if (s == "quiet") return 0;
    if (s == "debug") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[parskit] " << msg << "\n";
}

std::string fmt_double(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string to_hex(const unsigned char* data, size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

struct DigestCtx {
  EVP_MD_CTX* ctx;
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      raise(errc::io_error, "sha256 init failed");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  void update(const char* data, size_t len) {
    if (EVP_DigestUpdate(ctx, data, len) != 1) raise(errc::io_error, "sha256 update failed");
  }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1) raise(errc::io_error, "sha256 final failed");
    return to_hex(md, len);
  }
};

std::string sha256_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(errc::io_error, "cannot open: " + path);
  DigestCtx d;
  char buf[1 << 16];
  while (true) {
    f.read(buf, sizeof buf);
    std::streamsize n = f.gcount();
    if (n <= 0) break;
    d.update(buf, static_cast<size_t>(n));
  }
  return d.finish();
}

std::string sha256_string(std::string_view s) {
  DigestCtx d;
  d.update(s.data(), s.size());
  return d.finish();
}

DocumentSource file_source(const std::string& path) {
  auto f = std::make_shared<std::ifstream>(path, std::ios::binary);
  if (!*f) raise(errc::io_error, "cannot open: " + path);
  return [f]() -> std::optional<std::string> {
    std::string line;
    if (std::getline(*f, line)) return line;
    return std::nullopt;
  };
}

NormalizerConfig resolve_normalizer(const std::string& config_path) {
  if (config_path.empty()) return NormalizerConfig::default_v1();
  return NormalizerConfig::load(config_path);
}

json parse_record(const std::string& line, const std::string& path) {
  json rec = json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object())
    raise(errc::invalid_record, "bad record in " + path + ": " + line.substr(0, 80));
  return rec;
}

std::string record_id(const json& rec) {
  if (!rec.contains("id")) return "";
  const json& id = rec.at("id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

std::string record_text(const json& rec, const std::string& path) {
  if (!rec.contains("text") || !rec.at("text").is_string())
    raise(errc::invalid_record, "record missing string 'text' in " + path);
  return rec.at("text").get<std::string>();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(errc::io_error, "cannot open for writing: " + path);
  return out;
}

// ---------------------------------------------------------------- normalize

void normalize_stream(const NormalizerConfig& cfg, const std::string& in_path,
                      const std::string& out_path, bool jsonl) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open: " + in_path);
  std::ofstream out = open_out(out_path);

  std::string line;
  uint64_t kept = 0, dropped = 0;
  while (std::getline(in, line)) {
    if (jsonl) {
      json rec = parse_record(line, in_path);
      NormalizedDocument doc =
          normalize_document(record_text(rec, in_path), cfg, record_id(rec));
      json outrec;
      if (rec.contains("id")) outrec["id"] = rec.at("id");
      if (doc.dropped) {
        outrec["dropped"] = true;
        dropped++;
      } else {
        outrec["text"] = doc.text;
        kept++;
      }
      out << outrec.dump() << "\n";
    } else {
      NormalizedDocument doc = normalize_document(line, cfg);
      if (doc.dropped) {
        dropped++;
      } else {
        out << doc.text << "\n";
        kept++;
      }
    }
  }
  if (!out) raise(errc::io_error, "write failed: " + out_path);
  std::cout << "documents " << kept + dropped << "\nkept " << kept << "\ndropped "
            << dropped << "\n";
}

// ------------------------------------------------------------------- train

TrainResult train_from_file(const std::string& in_path, size_t vocab_size,
                            const NormalizerConfig& cfg, const TrainOptions& opts) {
  return train_tokenizer(file_source(in_path), vocab_size, cfg, opts);
}

// ------------------------------------------------------------------- stats

std::string stats_text(const TokenizerModel& model, DocumentSource source) {
  CorpusStats s = corpus_stats(model, std::move(source));
  std::string out;
  out += "documents " + std::to_string(s.documents) + "\n";
  out += "tokens " + std::to_string(s.token_count) + "\n";
  out += "words " + std::to_string(s.word_count) + "\n";
  out += "bytes " + std::to_string(s.byte_count) + "\n";
  if (s.fertility) out += "fertility " + fmt_double(*s.fertility) + "\n";
  if (s.bytes_per_token) out += "bytes_per_token " + fmt_double(*s.bytes_per_token) + "\n";
  return out;
}

// ------------------------------------------------------------- merge-vocab

std::string merge_stats_text(const MergeVocabStats& stats) {
  std::string out;
  out += "base_size " + std::to_string(stats.base_size) + "\n";
  out += "aux_size " + std::to_string(stats.aux_size) + "\n";
  out += "overlap " + std::to_string(stats.overlap) + "\n";
  out += "merged_size " + std::to_string(stats.merged_size) + "\n";
  out += "aux_merges_kept " + std::to_string(stats.aux_merges_kept) + "\n";
  out += "aux_merges_dropped " + std::to_string(stats.aux_merges_dropped) + "\n";
  return out;
}

void write_merge_report(const std::string& path, const std::vector<MergeRecord>& records) {
  std::ofstream out = open_out(path);
  for (const MergeRecord& r : records) {
    json rec;
    rec["token"] = r.token;
    rec["kind"] = token_kind_name(r.kind);
    rec["aux_id"] = r.aux_id;
    rec["merged_id"] = r.merged_id;
    rec["overlap"] = r.overlap;
    out << rec.dump() << "\n";
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

// ------------------------------------------------------------- lora-params

std::string lora_params_text(const ModelShape& shape, const LoraSpec& spec,
                             int64_t new_vocab_rows) {
  int64_t total = count_params(shape);
  int64_t trainable = lora_param_count(shape, spec);
  std::string out;
  out += "total_params " + std::to_string(total) + "\n";
  out += "trainable_params " + std::to_string(trainable) + "\n";
  out += "trainable_fraction " + fmt_double(trainable_fraction(trainable, total), 4) + "\n";
  for (const TensorInfo& t : adapter_tensors(shape, spec))
    out += "tensor " + t.name + " " + std::to_string(t.rows) + " " +
           std::to_string(t.cols) + " " + std::to_string(t.elements()) + "\n";
  for (const ReconCandidate& c : reconciliation_candidates(shape, spec, new_vocab_rows))
    out += "candidate " + c.label + " " + std::to_string(c.trainable) + " " +
           fmt_double(c.fraction, 4) + "\n";
  if (new_vocab_rows > 0) {
    EmbeddingResizePlan plan =
        embedding_resize_plan(shape.vocab, shape.vocab + new_vocab_rows, shape.hidden);
    out += "resize_rows_to_add " + std::to_string(plan.rows_to_add) + "\n";
    out += "resize_added_params " + std::to_string(plan.added_params) + "\n";
    out += "resize_init " + plan.init_rule + "\n";
  }
  return out;
}

// -------------------------------------------------------------- lora-merge

void run_lora_merge(const std::string& weights_path, const std::string& adapter_path,
                    const std::string& out_path, double alpha_flag) {
  std::vector<NamedTensor> base = read_tensor_file(weights_path);
  std::vector<NamedTensor> adapter = read_tensor_file(adapter_path);

  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : adapter) by_name[t.name] = &t;
  std::set<std::string> consumed;

  size_t merged_count = 0;
  std::vector<NamedTensor> out;
  out.reserve(base.size());
  for (const NamedTensor& t : base) {
    auto a_it = by_name.find(t.name + ".lora_A");
    auto b_it = by_name.find(t.name + ".lora_B");
    if (a_it == by_name.end() && b_it == by_name.end()) {
      out.push_back(t);
      continue;
    }
    if (a_it == by_name.end() || b_it == by_name.end())
      raise(errc::invalid_record, "adapter has only one factor for tensor " + t.name);
    const Matrix& a = a_it->second->values;
    const Matrix& b = b_it->second->values;
    consumed.insert(a_it->first);
    consumed.insert(b_it->first);

    double rank = static_cast<double>(a.rows());
    double alpha = rank;  // scaling 1 unless the file or the flag says otherwise
    auto alpha_it = by_name.find(t.name + ".lora_alpha");
    if (alpha_it != by_name.end()) {
      const Matrix& av = alpha_it->second->values;
      if (av.rows() != 1 || av.cols() != 1)
        raise(errc::invalid_record, "lora_alpha for " + t.name + " must be 1x1");
      alpha = av.at(0, 0);
      consumed.insert(alpha_it->first);
    } else if (alpha_flag > 0.0) {
      alpha = alpha_flag;
    }

    AdapterPair pair{a, b, alpha / rank};
    out.push_back({t.name, merge_adapter(t.values, pair)});
    merged_count++;
  }
  for (const NamedTensor& t : adapter)
    if (!consumed.count(t.name))
      raise(errc::invalid_record, "adapter tensor has no matching base tensor: " + t.name);

  write_tensor_file(out_path, out);
  std::cout << "tensors " << out.size() << "\nmerged " << merged_count << "\n";
}

// -------------------------------------------------------------------- eval

std::vector<std::pair<std::string, std::string>> read_text_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim_ascii_ws(line).empty()) continue;
    json rec = parse_record(line, path);
    out.emplace_back(record_id(rec), record_text(rec, path));
  }
  return out;
}

std::vector<LabeledPair> join_pairs(const std::string& pred_path, const std::string& gold_path) {
  auto preds = read_text_records(pred_path);
  auto golds = read_text_records(gold_path);
  std::map<std::string, std::string> pred_by_id(preds.begin(), preds.end());
  if (pred_by_id.size() != preds.size())
    raise(errc::invalid_record, "duplicate prediction ids in " + pred_path);
  std::vector<LabeledPair> pairs;
  pairs.reserve(golds.size());
  for (const auto& [id, gold] : golds) {
    auto it = pred_by_id.find(id);
    if (it == pred_by_id.end())
      raise(errc::invalid_record, "no prediction for id '" + id + "'");
    pairs.push_back({id, it->second, gold});
  }
  return pairs;
}

void write_score_rows(const std::string& path, const std::vector<ScoreRow>& rows) {
  std::ofstream out = open_out(path);
  for (const ScoreRow& r : rows) {
    json rec;
    rec["system"] = r.system;
    rec["dataset"] = r.dataset;
    rec["metric"] = r.metric;
    rec["value"] = r.value;
    out << rec.dump() << "\n";
  }
  if (!out) raise(errc::io_error, "write failed: " + path);
}

void run_eval(const std::string& metric, const std::string& pred_path,
              const std::string& gold_path, const std::string& emb_path,
              const std::string& config_path, const std::string& system,
              const std::string& dataset, const std::string& out_path) {
  std::vector<ScoreRow> rows;
  if (metric == "f1") {
    std::vector<LabeledPair> pairs = join_pairs(pred_path, gold_path);
    F1Breakdown b = f1_breakdown(pairs);
    std::cout << "metric f1\nmacro_f1 " << fmt_double(b.macro_f1) << "\nweighted_f1 "
              << fmt_double(b.weighted_f1) << "\nsupport " << b.support << "\n";
    for (const ClassScore& c : b.classes)
      std::cout << "class " << c.label << " precision " << fmt_double(c.precision)
                << " recall " << fmt_double(c.recall) << " f1 " << fmt_double(c.f1)
                << " support " << c.support << "\n";
    rows.push_back({system, dataset, "f1", b.macro_f1});
  } else if (metric == "accuracy") {
    std::vector<LabeledPair> pairs = join_pairs(pred_path, gold_path);
    NormalizerConfig cfg = resolve_normalizer(config_path);
    double acc = containment_accuracy(pairs, cfg);
    std::cout << "metric accuracy\naccuracy " << fmt_double(acc) << "\nsupport "
              << pairs.size() << "\n";
    for (const LabeledPair& p : pairs) {
      std::vector<LabeledPair> one{p};
      rows.push_back({system, dataset, "accuracy", containment_accuracy(one, cfg)});
    }
  } else if (metric == "semantic") {
    if (emb_path.empty()) raise(errc::invalid_config, "semantic eval needs --emb");
    std::ifstream in(emb_path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open: " + emb_path);
    std::string line;
    double psum = 0, rsum = 0, fsum = 0;
    size_t n = 0;
    while (std::getline(in, line)) {
      if (trim_ascii_ws(line).empty()) continue;
      json rec = parse_record(line, emb_path);
      EmbeddedSequence cand{rec.at("prediction").get<std::vector<std::vector<double>>>()};
      EmbeddedSequence ref{rec.at("gold").get<std::vector<std::vector<double>>>()};
      SemanticScore s = greedy_semantic_f1(cand, ref);
      psum += s.precision;
      rsum += s.recall;
      fsum += s.f1;
      n++;
      rows.push_back({system, dataset, "semantic", s.f1});
    }
    if (n == 0) raise(errc::empty_input, "no embedding records in " + emb_path);
    std::cout << "metric semantic\nprecision " << fmt_double(psum / n) << "\nrecall "
              << fmt_double(rsum / n) << "\nf1 " << fmt_double(fsum / n) << "\nsupport "
              << n << "\n";
  }
  if (!out_path.empty()) write_score_rows(out_path, rows);
}

// ------------------------------------------------------------ judge-prompt

std::string read_text_body(const std::string& path) {
  std::string s = read_file(path);
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

// ------------------------------------------------------------------ report

void run_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open: " + in_path);
  std::vector<ScoreRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim_ascii_ws(line).empty()) continue;
    json rec = parse_record(line, in_path);
    rows.push_back({rec.at("system").get<std::string>(),
                    rec.at("dataset").get<std::string>(),
                    rec.at("metric").get<std::string>(),
                    rec.at("value").get<double>()});
  }
  ScoreReport report = aggregate_scores(rows);
  std::ofstream out = open_out(out_path);
  out << "system\tdataset\tmetric\tmean\tsupport\n";
  for (const ScoreAggregate& a : report.rows)
    out << a.system << "\t" << a.dataset << "\t" << a.metric << "\t"
        << fmt_double(a.mean) << "\t" << a.support << "\n";
  if (!out) raise(errc::io_error, "write failed: " + out_path);
  std::cout << "rows " << report.rows.size() << "\n";
}

// ---------------------------------------------------------------- pipeline

json input_entry(const std::string& path) {
  json j;
  j["path"] = path;
  j["sha256"] = sha256_file(path);
  return j;
}

json builtin_normalizer_entry(const NormalizerConfig& cfg) {
  json j;
  j["path"] = "builtin:default_v1";
  j["sha256"] = sha256_string(cfg.to_json());
  return j;
}

void run_pipeline(const std::string& mode, const std::string& in_path,
                  const std::string& base_path, const std::string& out_dir,
                  size_t vocab_size, const std::string& config_path,
                  const std::string& shape_path, const std::string& spec_path,
                  const TrainOptions& opts) {
  std::filesystem::create_directories(out_dir);
  auto out = [&](const std::string& name) { return out_dir + "/" + name; };

  json manifest;
  manifest["command"] = "pipeline " + mode;
  manifest["flags"]["vocab_size"] = vocab_size;
  manifest["inputs"]["corpus"] = input_entry(in_path);

  NormalizerConfig cfg;
  if (!config_path.empty()) {
    cfg = NormalizerConfig::load(config_path);
    manifest["inputs"]["normalizer"] = input_entry(config_path);
  } else if (mode == "adapt") {
    cfg = TokenizerModel::load(base_path).normalizer();
    json j;
    j["path"] = "base-model-normalizer";
    j["sha256"] = sha256_string(cfg.to_json());
    manifest["inputs"]["normalizer"] = j;
  } else {
    cfg = NormalizerConfig::default_v1();
    manifest["inputs"]["normalizer"] = builtin_normalizer_entry(cfg);
  }

  log_info("normalizing " + in_path);
  normalize_stream(cfg, in_path, out("normalized.txt"), false);

  log_info("training tokenizer (target " + std::to_string(vocab_size) + ")");
  TrainResult trained = train_from_file(out("normalized.txt"), vocab_size, cfg, opts);
  std::cout << "merges_learned " << trained.merges_learned << "\nsaturated "
            << (trained.saturated ? "true" : "false") << "\n";

  if (mode == "scratch") {
    trained.model.save(out("tokenizer.model"));
    write_file(out("stats.txt"),
               stats_text(trained.model, file_source(out("normalized.txt"))));
    manifest["outputs"]["normalized.txt"] = sha256_file(out("normalized.txt"));
    manifest["outputs"]["tokenizer.model"] = sha256_file(out("tokenizer.model"));
    manifest["outputs"]["stats.txt"] = sha256_file(out("stats.txt"));
  } else {
    manifest["inputs"]["base_model"] = input_entry(base_path);
    trained.model.save(out("aux.model"));

    log_info("merging vocabularies");
    TokenizerModel base = TokenizerModel::load(base_path);
    MergeVocabStats stats;
    std::vector<MergeRecord> records;
    TokenizerModel merged = merge_vocab(base, trained.model, &stats, &records);
    merged.save(out("merged.model"));
    write_merge_report(out("merge_report.jsonl"), records);
    write_file(out("merge_stats.txt"), merge_stats_text(stats));
    std::cout << merge_stats_text(stats);

    manifest["outputs"]["normalized.txt"] = sha256_file(out("normalized.txt"));
    manifest["outputs"]["aux.model"] = sha256_file(out("aux.model"));
    manifest["outputs"]["merged.model"] = sha256_file(out("merged.model"));
    manifest["outputs"]["merge_report.jsonl"] = sha256_file(out("merge_report.jsonl"));
    manifest["outputs"]["merge_stats.txt"] = sha256_file(out("merge_stats.txt"));

    if (!shape_path.empty()) {
      log_info("computing adapter parameter report");
      ModelShape shape = ModelShape::from_config_file(shape_path);
      LoraSpec spec = LoraSpec::from_config_file(spec_path);
      manifest["inputs"]["shape"] = input_entry(shape_path);
      manifest["inputs"]["spec"] = input_entry(spec_path);
      int64_t new_rows =
          static_cast<int64_t>(stats.merged_size) - static_cast<int64_t>(stats.base_size);
      write_file(out("params_report.txt"), lora_params_text(shape, spec, new_rows));
      manifest["outputs"]["params_report.txt"] = sha256_file(out("params_report.txt"));
    }
  }

  write_file(out("manifest.json"), manifest.dump(2) + "\n");
  log_info("wrote " + out("manifest.json"));
}

// -------------------------------------------------------------------- main

const char* kUsage =
    "usage: parskit <command> [flags]\n"
    "\n"
    "commands:\n"
    "  normalize        clean a corpus line by line\n"
    "  train-tokenizer  learn a byte-fallback BPE model\n"
    "  tokenize         encode lines to ids or pieces\n"
    "  stats            corpus statistics under a model\n"
    "  merge-vocab      graft an auxiliary vocabulary onto a base model\n"
    "  lora-params      adapter parameter accounting for a model shape\n"
    "  lora-merge       fold low-rank adapters into base weights\n"
    "  eval             f1 | accuracy | semantic scoring\n"
    "  judge-prompt     render the comparative judging prompt\n"
    "  report           aggregate score rows into a table\n"
    "  pipeline         scratch | adapt end-to-end runs\n"
    "\n"
    "run 'parskit <command> --help' for flags; set PARSKIT_LOG=quiet|info|debug\n";

int dispatch(int argc, char** argv) {
  std::string cmd = argv[1];
  CLI::App app{std::string("parskit ") + cmd};
  app.name("parskit " + cmd);

  std::string in_path, out_path, config_path, model_path, base_path, aux_path;
  std::string report_path, shape_path, spec_path, weights_path, adapter_path;
  std::string pred_path, gold_path, emb_path, prompt_path, system_name = "system";
  std::string dataset_name = "dataset", metric, mode, out_dir;
  std::vector<std::string> system_paths;
  size_t vocab_size = 0;
  int64_t new_vocab_rows = 0;
  double alpha_flag = 0.0;
  bool jsonl = false, ids_mode = false, pieces_mode = false;
  TrainOptions opts;

  if (cmd == "normalize") {
    app.add_option("--config", config_path, "normalizer config json");
    app.add_option("--in", in_path)->required();
    app.add_option("--out", out_path)->required();
    app.add_flag("--jsonl", jsonl, "records with a text field instead of plain lines");
  } else if (cmd == "train-tokenizer") {
    app.add_option("--vocab-size", vocab_size)->required();
    app.add_option("--in", in_path)->required();
    app.add_option("--out", out_path)->required();
    app.add_option("--config", config_path, "normalizer config json");
    app.add_option("--threads", opts.threads);
    app.add_option("--shard-docs", opts.shard_docs);
  } else if (cmd == "tokenize") {
    app.add_option("--model", model_path)->required();
    app.add_option("--in", in_path)->required();
    app.add_option("--out", out_path, "default: stdout");
    app.add_flag("--ids", ids_mode);
    app.add_flag("--pieces", pieces_mode);
  } else if (cmd == "stats") {
    app.add_option("--model", model_path)->required();
    app.add_option("--in", in_path)->required();
  } else if (cmd == "merge-vocab") {
    app.add_option("--base", base_path)->required();
    app.add_option("--aux", aux_path)->required();
    app.add_option("--out", out_path)->required();
    app.add_option("--report", report_path)->required();
  } else if (cmd == "lora-params") {
    app.add_option("--shape", shape_path)->required();
    app.add_option("--spec", spec_path)->required();
    app.add_option("--new-vocab-rows", new_vocab_rows);
  } else if (cmd == "lora-merge") {
    app.add_option("--weights", weights_path)->required();
    app.add_option("--adapter", adapter_path)->required();
    app.add_option("--out", out_path)->required();
    app.add_option("--alpha", alpha_flag, "fallback alpha when the file has none");
  } else if (cmd == "eval") {
    app.add_option("metric", metric)->required()->check(CLI::IsMember({"f1", "accuracy", "semantic"}));
    app.add_option("--pred", pred_path);
    app.add_option("--gold", gold_path);
    app.add_option("--emb", emb_path);
    app.add_option("--config", config_path, "normalizer for containment accuracy");
    app.add_option("--system", system_name);
    app.add_option("--dataset", dataset_name);
    app.add_option("--out", out_path, "score rows jsonl");
  } else if (cmd == "judge-prompt") {
    app.add_option("--prompt", prompt_path)->required();
    app.add_option("--systems", system_paths)->required()->expected(-1);
    app.add_option("--out", out_path, "default: stdout");
  } else if (cmd == "report") {
    app.add_option("--in", in_path)->required();
    app.add_option("--out", out_path)->required();
  } else if (cmd == "pipeline") {
    app.add_option("mode", mode)->required()->check(CLI::IsMember({"scratch", "adapt"}));
    app.add_option("--in", in_path)->required();
    app.add_option("--out-dir", out_dir)->required();
    app.add_option("--vocab-size", vocab_size)->required();
    app.add_option("--config", config_path);
    app.add_option("--base", base_path, "base tokenizer model (adapt)");
    app.add_option("--shape", shape_path);
    app.add_option("--spec", spec_path);
    app.add_option("--threads", opts.threads);
    app.add_option("--shard-docs", opts.shard_docs);
  }

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: bad_flag: " << e.what() << "\n";
    return kExitBadFlag;
  }

  if (cmd == "normalize") {
    normalize_stream(resolve_normalizer(config_path), in_path, out_path, jsonl);
  } else if (cmd == "train-tokenizer") {
    TrainResult r =
        train_from_file(in_path, vocab_size, resolve_normalizer(config_path), opts);
    r.model.save(out_path);
    std::cout << "vocab_size " << r.model.vocab_size() << "\nmerges_learned "
              << r.merges_learned << "\nsaturated " << (r.saturated ? "true" : "false")
              << "\n";
  } else if (cmd == "tokenize") {
    if (ids_mode && pieces_mode) raise(errc::invalid_config, "--ids and --pieces are exclusive");
    TokenizerModel model = TokenizerModel::load(model_path);
    std::ifstream in(in_path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open: " + in_path);
    std::ostream* os = &std::cout;
    std::ofstream file_out;
    if (!out_path.empty()) {
      file_out = open_out(out_path);
      os = &file_out;
    }
    std::string line;
    while (std::getline(in, line)) {
      std::vector<int32_t> ids = model.encode(line);
      for (size_t i = 0; i < ids.size(); ++i) {
        if (i) *os << ' ';
        if (pieces_mode)
          *os << model.piece_display(ids[i]);
        else
          *os << ids[i];
      }
      *os << '\n';
    }
  } else if (cmd == "stats") {
    std::cout << stats_text(TokenizerModel::load(model_path), file_source(in_path));
  } else if (cmd == "merge-vocab") {
    TokenizerModel base = TokenizerModel::load(base_path);
    TokenizerModel aux = TokenizerModel::load(aux_path);
    MergeVocabStats stats;
    std::vector<MergeRecord> records;
    TokenizerModel merged = merge_vocab(base, aux, &stats, &records);
    merged.save(out_path);
    write_merge_report(report_path, records);
    std::cout << merge_stats_text(stats);
  } else if (cmd == "lora-params") {
    ModelShape shape = ModelShape::from_config_file(shape_path);
    LoraSpec spec = LoraSpec::from_config_file(spec_path);
    std::cout << lora_params_text(shape, spec, new_vocab_rows);
  } else if (cmd == "lora-merge") {
    run_lora_merge(weights_path, adapter_path, out_path, alpha_flag);
  } else if (cmd == "eval") {
    if (metric != "semantic" && (pred_path.empty() || gold_path.empty()))
      raise(errc::invalid_config, "eval " + metric + " needs --pred and --gold");
    run_eval(metric, pred_path, gold_path, emb_path, config_path, system_name,
             dataset_name, out_path);
  } else if (cmd == "judge-prompt") {
    std::vector<std::pair<std::string, std::string>> outputs;
    for (const std::string& p : system_paths)
      outputs.emplace_back(std::filesystem::path(p).stem().string(), read_text_body(p));
    std::string rendered = render_judge_prompt(JudgePromptTemplate::default_template(),
                                               read_text_body(prompt_path), outputs);
    if (out_path.empty())
      std::cout << rendered;
    else
      write_file(out_path, rendered);
  } else if (cmd == "report") {
    run_report(in_path, out_path);
  } else if (cmd == "pipeline") {
    if (mode == "adapt" && base_path.empty())
      raise(errc::invalid_config, "pipeline adapt needs --base");
    if (shape_path.empty() != spec_path.empty())
      raise(errc::invalid_config, "--shape and --spec go together");
    run_pipeline(mode, in_path, base_path, out_dir, vocab_size, config_path,
                 shape_path, spec_path, opts);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return kExitUnknownCommand;
  }
  std::string cmd = argv[1];
  if (cmd == "help" || cmd == "--help" || cmd == "-h") {
    std::cout << kUsage;
    return kExitOk;
  }
  static const std::set<std::string> known = {
      "normalize", "train-tokenizer", "tokenize", "stats", "merge-vocab",
      "lora-params", "lora-merge", "eval", "judge-prompt", "report", "pipeline"};
  if (!known.count(cmd)) {
    std::cerr << "error: unknown_command: " << cmd << "\n";
    return kExitUnknownCommand;
  }

  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == errc::io_error ? kExitIo : kExitFailure;
  } catch (const json::exception& e) {
    std::cerr << "error: invalid_record: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
