// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wakavt/attention/layers.hpp"
#include "wakavt/models/config.hpp"

namespace wakavt::cli {

/// Bad flags or inputs; the binary maps this to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SHA-1 of "blob <size>\0<content>", as git computes for file contents.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::string& path);

struct RunManifest {
  std::string command;
  nlohmann::json config;  // null when the command has none
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, blob hash

  void add_input(const std::string& path);
  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

// Files written by `train` into its output directory.
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kVocabFile = "vocab.tsv";
inline constexpr const char* kLogFile = "train_log.csv";
inline constexpr const char* kManifestFile = "manifest.json";

struct TrainOptions {
  std::string config_path;  // empty: defaults of `model`
  std::string corpus_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string resume_checkpoint;
  std::optional<models::ModelKind> model;
  std::optional<attention::AttentionKind> attention;
  std::optional<std::size_t> steps;  // overrides train_steps
};

/**
 * Trains on the training partition of a seeded split of the corpus.
 * Writes vocab.tsv, split.json, train/validation/test corpus files, a
 * rejection report, train_log.csv, model.ckpt (plus step checkpoints when
 * checkpoint_every > 0) and manifest.json. Returns the exit code.
 */
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

struct GenerateOptions {
  std::string checkpoint;
  std::string vocab_path;  // empty: vocab.tsv next to the checkpoint
  std::vector<std::string> keywords;
  std::string keywords_file;
  std::string out_path;  // empty: `out`
  std::size_t beam_width = 20;
  std::uint64_t seed = 0;
  std::string dump_attention_dir;
  bool strict_keyword = false;
};

/// One interchange line per keyword. Exit code 0 when every keyword
/// produced a poem, 1 when none did, 3 when only some did.
int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);

struct EvaluateOptions {
  std::string generated_path;
  std::string train_corpus;
  std::string test_corpus;  // with checkpoint: adds ppl and kld
  std::string checkpoint;
  std::string vocab_path;  // empty: next to the checkpoint, else built from the train corpus
  std::uint64_t seed = 0;
  bool multiset_dice = false;
  std::string manifest_path;
};

/// Writes the JSON metric report to `out`.
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);

struct SynthesizeOptions {
  std::size_t poems = 200;
  std::size_t words = 30;
  std::uint64_t seed = 0;
  std::string out_path;
};

int cmd_synthesize(const SynthesizeOptions& options, std::ostream& out, std::ostream& err);

}  // namespace wakavt::cli
