// SPDX-License-Identifier: Apache-2.0
#include "wakavt/cli/commands.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "wakavt/corpus/corpus.hpp"
#include "wakavt/corpus/synthetic.hpp"
#include "wakavt/decoding/beam_search.hpp"
#include "wakavt/decoding/interchange.hpp"
#include "wakavt/metrics/metrics.hpp"
#include "wakavt/models/training.hpp"

namespace wakavt::cli {

namespace fs = std::filesystem;
using corpus::Poem;
using corpus::Vocabulary;

// ---- manifest --------------------------------------------------------------

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string git_blob_sha1_file(const std::string& path) { return git_blob_sha1(read_file(path)); }

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, git_blob_sha1_file(path));
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"blob_sha1", hash}});
  return {{"command", command},
          {"config", config},
          {"seed", seed},
          {"checkpoint", checkpoint},
          {"inputs", in}};
}

void RunManifest::write(const std::string& path) const {
  auto out = open_out(path);
  out << to_json().dump(2) << '\n';
}

namespace {

void emit_manifest(const RunManifest& m, const std::string& path, std::ostream& err) {
  if (path.empty()) {
    err << "manifest " << m.to_json().dump() << '\n';
  } else {
    m.write(path);
  }
}

// Seeded epoch permutations; batch k of the run is a pure function of k.
class BatchSchedule {
 public:
  BatchSchedule(const std::vector<Poem>& poems, std::size_t batch, std::uint64_t seed)
      : poems_(poems), batch_(batch), seed_(seed) {}

  std::vector<Poem> at(std::size_t step) {
    std::vector<Poem> out;
    const std::size_t n = poems_.size();
    for (std::size_t k = 0; k < batch_; ++k) {
      const std::size_t g = step * batch_ + k;
      out.push_back(poems_[permutation(g / n)[g % n]]);
    }
    return out;
  }

 private:
  const std::vector<std::size_t>& permutation(std::size_t epoch) {
    auto it = cache_.find(epoch);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 4) cache_.erase(cache_.begin());
    std::vector<std::size_t> p(poems_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
    numerics::Rng rng(seed_, epoch);
    for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.uniform_int(i)]);
    return cache_.emplace(epoch, std::move(p)).first->second;
  }

  const std::vector<Poem>& poems_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::map<std::size_t, std::vector<std::size_t>> cache_;
};

std::vector<Poem> pick(const std::vector<Poem>& poems, const std::vector<std::size_t>& idx) {
  std::vector<Poem> out;
  for (std::size_t i : idx) out.push_back(poems[i]);
  return out;
}

void write_corpus(const fs::path& path, const std::vector<Poem>& poems, const Vocabulary& vocab) {
  auto out = open_out(path);
  for (const auto& p : poems) out << corpus::format_corpus_line(p, vocab) << '\n';
}

Vocabulary vocab_for(const std::string& explicit_path, const std::string& checkpoint) {
  if (!explicit_path.empty()) return Vocabulary::load(explicit_path);
  const fs::path sibling = fs::path(checkpoint).parent_path() / kVocabFile;
  if (!fs::exists(sibling)) {
    throw UsageError("no vocabulary next to " + checkpoint + " (expected " + sibling.string() + ")");
  }
  return Vocabulary::load(sibling.string());
}

}  // namespace

// ---- train -----------------------------------------------------------------

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  if (o.corpus_path.empty()) throw UsageError("train needs --corpus");
  if (o.out_dir.empty()) throw UsageError("train needs --out");
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  models::ModelConfig config;
  if (!o.config_path.empty()) {
    config = models::load_config(o.config_path);
  } else {
    config = models::ModelConfig::defaults(o.model.value_or(models::ModelKind::WakaVT));
  }
  if (o.model) config.kind = *o.model;
  if (o.attention) config.attention = *o.attention;
  if (o.steps) config.train_steps = *o.steps;
  config.validate();

  const auto loaded = corpus::load_corpus(o.corpus_path);
  {
    auto report = open_out(dir / "rejected.txt");
    corpus::write_rejection_report(report, o.corpus_path, loaded.encoded.rejected);
  }
  if (!loaded.encoded.rejected.empty()) {
    err << loaded.encoded.rejected.size() << " corpus lines rejected, see "
        << (dir / "rejected.txt").string() << '\n';
  }
  const auto& poems = loaded.encoded.poems;
  const auto split = corpus::split_dataset(poems.size(), numerics::mix_seed(o.seed, 0));
  {
    auto s = open_out(dir / "split.json");
    s << corpus::split_manifest_json(split, loaded.encoded.source_lines) << '\n';
  }
  const auto train = pick(poems, split.train);
  write_corpus(dir / "train.txt", train, loaded.vocab);
  write_corpus(dir / "validation.txt", pick(poems, split.validation), loaded.vocab);
  write_corpus(dir / "test.txt", pick(poems, split.test), loaded.vocab);
  loaded.vocab.save((dir / kVocabFile).string());

  std::unique_ptr<models::Model> model;
  models::TrainState state;
  if (!o.resume_checkpoint.empty()) {
    auto resumed = models::load_model(o.resume_checkpoint);
    if (resumed.model->vocab_size() != loaded.vocab.size()) {
      throw UsageError("checkpoint vocabulary size " + std::to_string(resumed.model->vocab_size()) +
                       " does not match the corpus vocabulary " +
                       std::to_string(loaded.vocab.size()));
    }
    model = std::move(resumed.model);
    state = std::move(resumed.state);
    models::ModelConfig c = model->config();
    if (c.kind != config.kind || c.attention != config.attention) {
      throw UsageError("checkpoint architecture differs from the requested configuration");
    }
    if (!o.config_path.empty()) {
      c.train_steps = config.train_steps;
      c.log_every = config.log_every;
      c.checkpoint_every = config.checkpoint_every;
    }
    config = c;
    if (o.steps) config.train_steps = *o.steps;
    out << "resuming at step " << state.step << '\n';
  } else {
    model = std::make_unique<models::Model>(config, loaded.vocab.size(),
                                            numerics::mix_seed(o.seed, 1));
  }

  std::ofstream log(dir / kLogFile, state.step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw UsageError("cannot write " + (dir / kLogFile).string());
  if (state.step == 0) log << "step,nll,kl,aux,anneal_weight\n";

  BatchSchedule schedule(train, config.batch_size, numerics::mix_seed(o.seed, 2));
  const std::uint64_t noise_seed = numerics::mix_seed(o.seed, 3);
  while (state.step < config.train_steps) {
    const auto report = models::train_step(*model, state, schedule.at(state.step), noise_seed);
    log << models::format_log_line(report) << '\n';
    if (report.step % config.log_every == 0) out << models::format_log_line(report) << '\n';
    if (config.checkpoint_every && report.step % config.checkpoint_every == 0) {
      models::save_model((dir / ("checkpoint_" + std::to_string(report.step) + ".ckpt")).string(),
                         *model, &state);
    }
  }
  log.close();
  const std::string ckpt = (dir / kCheckpointFile).string();
  models::save_model(ckpt, *model, &state);

  const auto val = pick(poems, split.validation);
  const auto eval = metrics::eval_ppl_kld(*model, val, numerics::mix_seed(o.seed, 4));
  out << "validation ppl " << eval.ppl;
  if (eval.kld) out << " kld " << *eval.kld;
  out << '\n';

  RunManifest m;
  m.command = "train";
  m.config = models::to_json(config);
  m.seed = o.seed;
  m.checkpoint = ckpt;
  m.add_input(o.corpus_path);
  if (!o.config_path.empty()) m.add_input(o.config_path);
  if (!o.resume_checkpoint.empty()) m.add_input(o.resume_checkpoint);
  m.write((dir / kManifestFile).string());
  return 0;
}

// ---- generate --------------------------------------------------------------

int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err) {
  if (o.checkpoint.empty()) throw UsageError("generate needs --checkpoint");
  std::vector<std::string> keywords = o.keywords;
  if (!o.keywords_file.empty()) {
    std::istringstream in(read_file(o.keywords_file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) keywords.push_back(line);
    }
  }
  if (keywords.empty()) throw UsageError("generate needs --keyword or --keywords-file");

  const auto loaded = models::load_model(o.checkpoint);
  const auto& model = *loaded.model;
  const auto vocab = vocab_for(o.vocab_path, o.checkpoint);
  if (vocab.size() != model.vocab_size()) {
    throw UsageError("vocabulary has " + std::to_string(vocab.size()) + " entries, checkpoint " +
                     std::to_string(model.vocab_size()));
  }
  const auto table = vocab.morae_table();

  std::ofstream file;
  if (!o.out_path.empty()) file = open_out(o.out_path);
  std::ostream& sink = o.out_path.empty() ? out : file;
  if (!o.dump_attention_dir.empty()) fs::create_directories(o.dump_attention_dir);

  decoding::GenerationConfig gc;
  gc.beam_width = o.beam_width;
  gc.strict_keyword = o.strict_keyword;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    const auto id = vocab.find(keywords[i]);
    if (!id || Vocabulary::is_special(*id)) {
      err << "keyword " << i + 1 << " '" << keywords[i] << "': not in the vocabulary\n";
      continue;
    }
    gc.seed = numerics::mix_seed(o.seed, i);
    try {
      const auto result = decoding::beam_search_generate(model, table, *id, gc);
      sink << decoding::format_interchange(result.poem, vocab) << '\n';
      ++ok;
      if (!o.dump_attention_dir.empty()) {
        const numerics::Tensor z = decoding::result_latents(result);
        attention::AlignmentSink alignments;
        models::ForwardOptions opt;
        opt.latents = z.empty() ? nullptr : &z;
        opt.alignments = &alignments;
        numerics::NoGradGuard guard;
        model.forward(result.poem, opt);
        auto dump = open_out(fs::path(o.dump_attention_dir) /
                             ("poem_" + std::to_string(i + 1) + ".txt"));
        dump << "# keyword " << keywords[i] << '\n';
        attention::write_alignment_dump(dump, alignments);
      }
    } catch (const decoding::GenerationError& e) {
      err << "keyword " << i + 1 << " '" << keywords[i] << "': " << e.what() << '\n';
    }
  }

  RunManifest m;
  m.command = "generate";
  m.config = models::to_json(model.config());
  m.seed = o.seed;
  m.checkpoint = o.checkpoint;
  m.add_input(o.checkpoint);
  if (!o.keywords_file.empty()) m.add_input(o.keywords_file);
  emit_manifest(m, o.out_path.empty() ? "" : o.out_path + ".manifest.json", err);
  if (ok == keywords.size()) return 0;
  return ok == 0 ? 1 : 3;
}

// ---- evaluate --------------------------------------------------------------

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  if (o.generated_path.empty()) throw UsageError("evaluate needs --generated");
  if (o.train_corpus.empty()) throw UsageError("evaluate needs --corpus");

  Vocabulary vocab;
  if (!o.vocab_path.empty() || !o.checkpoint.empty()) {
    vocab = vocab_for(o.vocab_path, o.checkpoint);
  } else {
    vocab = corpus::build_vocab(corpus::read_corpus_file(o.train_corpus));
  }
  auto encode_file = [&](const std::string& path) {
    auto encoded = corpus::encode_corpus(corpus::read_corpus_file(path), vocab);
    if (!encoded.rejected.empty()) {
      err << encoded.rejected.size() << " lines of " << path << " rejected\n";
      corpus::write_rejection_report(err, path, encoded.rejected);
    }
    return encoded.poems;
  };
  const auto train = encode_file(o.train_corpus);
  if (train.empty()) throw UsageError(o.train_corpus + ": no usable poems");

  std::istringstream gen_in(read_file(o.generated_path));
  const auto generated = decoding::read_interchange(gen_in, vocab, o.generated_path);
  if (generated.unknown_words) {
    err << generated.unknown_words << " generated words are not in the vocabulary\n";
  }

  auto report = metrics::evaluate_generations(
      generated.poems, train, vocab.morae_table(),
      o.multiset_dice ? metrics::DiceMode::Multiset : metrics::DiceMode::Set);
  if (report.skipped) err << report.skipped << " generated poems break the morae pattern, skipped\n";

  RunManifest m;
  m.command = "evaluate";
  m.seed = o.seed;
  m.add_input(o.generated_path);
  m.add_input(o.train_corpus);
  if (!o.checkpoint.empty() && !o.test_corpus.empty()) {
    const auto loaded = models::load_model(o.checkpoint);
    const auto test = encode_file(o.test_corpus);
    if (test.empty()) throw UsageError(o.test_corpus + ": no usable poems");
    const auto pk = metrics::eval_ppl_kld(*loaded.model, test, o.seed);
    report.ppl = pk.ppl;
    report.kld = pk.kld;
    m.config = models::to_json(loaded.model->config());
    m.checkpoint = o.checkpoint;
    m.add_input(o.checkpoint);
    m.add_input(o.test_corpus);
  } else if (!o.test_corpus.empty() || !o.checkpoint.empty()) {
    err << "ppl and kld need both --checkpoint and --test-corpus\n";
  }
  out << metrics::to_json(report).dump(2) << '\n';
  emit_manifest(m, o.manifest_path, err);
  return 0;
}

// ---- synthesize ------------------------------------------------------------

int cmd_synthesize(const SynthesizeOptions& o, std::ostream& out, std::ostream& err) {
  (void)err;
  if (o.out_path.empty()) throw UsageError("synthesize needs --out");
  const auto spec = corpus::make_toy_vocab(o.words, numerics::mix_seed(o.seed, 0));
  {
    auto file = open_out(o.out_path);
    file << corpus::generate_synthetic_corpus(o.poems, spec, numerics::mix_seed(o.seed, 1));
  }
  out << "wrote " << o.poems << " poems over " << spec.words.size() << " words to " << o.out_path
      << '\n';
  RunManifest m;
  m.command = "synthesize";
  m.config = {{"poems", o.poems}, {"words", o.words}};
  m.seed = o.seed;
  m.write(o.out_path + ".manifest.json");
  return 0;
}

}  // namespace wakavt::cli
