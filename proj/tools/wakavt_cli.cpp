// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <iostream>

#include "wakavt/cli/commands.hpp"

namespace {

using namespace wakavt;

const std::map<std::string, models::ModelKind> kModels{
    {"tlm", models::ModelKind::Tlm},
    {"tvae", models::ModelKind::Tvae},
    {"wakavt", models::ModelKind::WakaVT}};
const std::map<std::string, attention::AttentionKind> kAttention{
    {"standard", attention::AttentionKind::Standard},
    {"fmsa", attention::AttentionKind::Fmsa}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword-conditioned waka generation: train, generate, evaluate"};
  app.require_subcommand(1);

  cli::TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a model on a corpus");
  t->add_option("--config", train.config_path, "JSON model configuration")->check(CLI::ExistingFile);
  t->add_option("--corpus", train.corpus_path, "Training corpus")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train.out_dir, "Output directory")->required();
  t->add_option("--seed", train.seed, "Master seed");
  t->add_option("--checkpoint", train.resume_checkpoint, "Resume from this checkpoint")
      ->check(CLI::ExistingFile);
  t->add_option("--model", train.model, "Model kind")
      ->transform(CLI::CheckedTransformer(kModels, CLI::ignore_case));
  t->add_option("--attention", train.attention, "Attention kind")
      ->transform(CLI::CheckedTransformer(kAttention, CLI::ignore_case));
  t->add_option("--steps", train.steps, "Override the number of training steps");

  cli::GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Generate one poem per keyword");
  g->add_option("--checkpoint", gen.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  g->add_option("--vocab", gen.vocab_path, "Vocabulary file (default: next to the checkpoint)")
      ->check(CLI::ExistingFile);
  g->add_option("--keyword", gen.keywords, "Keyword (repeatable)");
  g->add_option("--keywords-file", gen.keywords_file, "One keyword per line")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out_path, "Output file (default: standard output)");
  g->add_option("--beam-width", gen.beam_width, "Beam width")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--dump-attention", gen.dump_attention_dir, "Directory for per-poem attention dumps");
  g->add_flag("--strict-keyword", gen.strict_keyword, "Fail when no finished poem contains the keyword");

  cli::EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Score generated poems; JSON report on standard output");
  e->add_option("--generated", ev.generated_path, "Generated poems")->required()->check(CLI::ExistingFile);
  e->add_option("--corpus", ev.train_corpus, "Training corpus")->required()->check(CLI::ExistingFile);
  e->add_option("--test-corpus", ev.test_corpus, "Held-out corpus for ppl and kld")->check(CLI::ExistingFile);
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint for ppl and kld")->check(CLI::ExistingFile);
  e->add_option("--vocab", ev.vocab_path, "Vocabulary file")->check(CLI::ExistingFile);
  e->add_option("--seed", ev.seed, "Seed for latent sampling");
  e->add_flag("--multiset-dice", ev.multiset_dice, "Count repeated words in the Dice overlap");
  e->add_option("--manifest", ev.manifest_path, "Write the run manifest here (default: standard error)");

  cli::SynthesizeOptions syn;
  auto* s = app.add_subcommand("synthesize", "Write a synthetic corpus");
  s->alias("synthesize-corpus");
  s->add_option("--poems", syn.poems, "Number of poems")->capture_default_str();
  s->add_option("--words", syn.words, "Vocabulary size")->capture_default_str();
  s->add_option("--seed", syn.seed, "Master seed");
  s->add_option("--out", syn.out_path, "Output corpus file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    if (*t) return cli::cmd_train(train, std::cout, std::cerr);
    if (*g) return cli::cmd_generate(gen, std::cout, std::cerr);
    if (*e) return cli::cmd_evaluate(ev, std::cout, std::cerr);
    if (*s) return cli::cmd_synthesize(syn, std::cout, std::cerr);
  } catch (const cli::UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const models::ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
