// Command-line front end: training-set construction, training, scoring,
// defeasibility/COPA evaluation, and distribution-shift reports.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "causal/checkpoint.hpp"
#include "causal/cli_support.hpp"
#include "causal/ctcw_http.hpp"
#include "causal/data.hpp"
#include "causal/eval.hpp"
#include "causal/gradients.hpp"
#include "causal/training.hpp"

using namespace causal;

namespace {

std::string percent1(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * fraction);
  return buf;
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Fill a flag's value from the config file when the user did not pass it.
template <typename T>
void config_fallback(const CLI::Option* opt, T& value, const JsonConfig& cfg,
                     const std::string& key) {
  if (opt != nullptr && opt->count() > 0) return;
  if (auto v = cfg.get<T>(key)) value = *v;
}

struct CommonOptions {
  std::string config_path;
  JsonConfig config;
  unsigned jobs = 1;
  std::uint64_t seed = 42;
};

struct MetricOptions {
  std::string metric = "cesar";
  std::string model_path;
  std::string vocab_path;
  std::string corpus_path;
  double ceq_alpha = 0.66;
  std::string rock_config_path;
  std::string provider = "mock";
  std::string fixtures_path;
  std::string ctcw_template = "fact";
  bool ctcw_no_clamp = false;
  std::string ctcw_model = "gpt-3.5-turbo";
  double ctcw_temperature = 0.9;
};

void add_metric_flags(CLI::App* cmd, MetricOptions& opts,
                      std::map<std::string, CLI::Option*>& flags) {
  flags["metric"] = cmd->add_option("--metric", opts.metric,
                                    "Metric to evaluate: cesar|ceq|rock|ctcw")
                        ->check(CLI::IsMember({"cesar", "ceq", "rock", "ctcw"}));
  flags["model"] = cmd->add_option("--model", opts.model_path, "Checkpoint file (cesar)");
  flags["vocab"] = cmd->add_option("--vocab", opts.vocab_path,
                                   "Vocabulary file (cesar; default <model>.vocab)");
  flags["corpus"] =
      cmd->add_option("--corpus", opts.corpus_path, "Causal-statement JSONL corpus (ceq)");
  flags["alpha"] = cmd->add_option("--alpha", opts.ceq_alpha, "Effect-count exponent (ceq)");
  flags["rock-config"] =
      cmd->add_option("--rock-config", opts.rock_config_path, "Oracle wiring JSON (rock)");
  flags["provider"] = cmd->add_option("--provider", opts.provider,
                                      "Probability provider: mock|http (ctcw)")
                          ->check(CLI::IsMember({"mock", "http"}));
  flags["fixtures"] =
      cmd->add_option("--fixtures", opts.fixtures_path, "Mock fixture JSONL (ctcw)");
  flags["template"] = cmd->add_option("--template", opts.ctcw_template,
                                      "Splice rule for additions: and|fact|and_later (ctcw)")
                          ->check(CLI::IsMember({"and", "fact", "and_later"}));
  flags["no-clamp"] = cmd->add_flag("--no-clamp", opts.ctcw_no_clamp,
                                    "Keep raw scores when probabilities sum past 1 (ctcw)");
}

void apply_metric_config(MetricOptions& opts, const JsonConfig& cfg,
                         const std::map<std::string, CLI::Option*>& flags) {
  config_fallback(flags.at("metric"), opts.metric, cfg, "metric");
  config_fallback(flags.at("model"), opts.model_path, cfg, "model.checkpoint");
  config_fallback(flags.at("vocab"), opts.vocab_path, cfg, "model.vocab");
  config_fallback(flags.at("corpus"), opts.corpus_path, cfg, "ceq.corpus");
  config_fallback(flags.at("alpha"), opts.ceq_alpha, cfg, "ceq.alpha");
  config_fallback(flags.at("rock-config"), opts.rock_config_path, cfg, "rock.config");
  config_fallback(flags.at("provider"), opts.provider, cfg, "ctcw.provider");
  config_fallback(flags.at("fixtures"), opts.fixtures_path, cfg, "ctcw.fixtures");
  config_fallback(flags.at("template"), opts.ctcw_template, cfg, "ctcw.template");
  config_fallback(flags.at("no-clamp"), opts.ctcw_no_clamp, cfg, "ctcw.no_clamp");
  if (auto v = cfg.get<std::string>("ctcw.model")) opts.ctcw_model = *v;
  if (auto v = cfg.get<double>("ctcw.temperature")) opts.ctcw_temperature = *v;
}

MetricHandle build_metric(const MetricOptions& opts) {
  if (opts.metric == "cesar") {
    if (opts.model_path.empty()) {
      throw ValidationError("cesar metric needs --model");
    }
    const std::string vocab_path =
        opts.vocab_path.empty() ? opts.model_path + ".vocab" : opts.vocab_path;
    auto state = std::make_shared<CesarMetricState>();
    state->vocab = Vocabulary::load(vocab_path);
    state->model = load_checkpoint(opts.model_path, state->vocab);
    return make_cesar_metric(std::move(state));
  }
  if (opts.metric == "ceq") {
    if (opts.corpus_path.empty()) {
      throw ValidationError("ceq metric needs --corpus");
    }
    CeqConfig cfg;
    cfg.alpha = opts.ceq_alpha;
    cfg.validate();
    auto stats = std::make_shared<CooccurrenceStats>(
        build_cooccurrence(load_causal_statements(opts.corpus_path), opts.corpus_path));
    return make_ceq_metric(std::move(stats), cfg);
  }
  if (opts.metric == "rock") {
    if (opts.rock_config_path.empty()) {
      throw ValidationError("rock metric needs --rock-config");
    }
    return make_rock_metric(std::make_shared<RockInputs>(load_rock_inputs(opts.rock_config_path)));
  }
  // ctcw
  std::shared_ptr<CtcwProvider> provider;
  if (opts.provider == "mock") {
    provider = std::make_shared<MockProvider>(
        opts.fixtures_path.empty() ? MockProvider()
                                   : MockProvider::from_jsonl(opts.fixtures_path));
  } else {
    HttpProviderConfig http;
    const char* url = std::getenv("CTCW_API_URL");
    const char* key = std::getenv("CTCW_API_KEY");
    http.url = url ? url : "";
    http.api_key = key ? key : "";
    http.model = opts.ctcw_model;
    http.temperature = opts.ctcw_temperature;
    http.log = &std::clog;
    provider = std::make_shared<HttpProvider>(http);
  }
  CtcwMetricOptions metric_opts;
  metric_opts.template_with_addition = ctcw_template_from_string(opts.ctcw_template);
  metric_opts.clamp = !opts.ctcw_no_clamp;
  return make_ctcw_metric(std::move(provider), metric_opts);
}

void print_matrix(const std::string& title, const Matrix& m,
                  const std::vector<std::string>& row_labels,
                  const std::vector<std::string>& col_labels) {
  std::printf("%s (%zux%zu):\n", title.c_str(), m.rows(), m.cols());
  std::printf("%12s", "");
  for (const auto& c : col_labels) std::printf(" %10s", c.c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::printf("%12s", row_labels[i].c_str());
    for (std::size_t j = 0; j < m.cols(); ++j) std::printf(" %10.4f", m(i, j));
    std::printf("\n");
  }
}

// --- subcommand bodies -------------------------------------------------------

int run_augment(const std::string& pairs_path, const std::string& out_path,
                const AugmentTargets& targets) {
  const auto records = load_augmentation_source(pairs_path, &std::cerr);
  const auto examples = build_augmented_set(records, targets);
  save_training(out_path, examples);
  std::printf("augment: %zu source records -> %zu training examples -> %s\n", records.size(),
              examples.size(), out_path.c_str());
  return 0;
}

struct TrainCliOptions {
  std::string data_path;
  std::string out_path = "model.ckpt";
  std::string vocab_out;
  std::string vocab_in;
  std::string curve_path;
  std::string embedder = "lookup";
  std::string attention = "learned";
  std::string fixed_embeddings;
  bool exclude_specials = false;
  std::size_t dim = 64;
  std::size_t vocab_max = 30000;
  TrainConfig train_config;
};

int run_train(const TrainCliOptions& opts) {
  const auto dataset = load_training(opts.data_path, &std::cerr);
  if (dataset.empty()) {
    throw ValidationError("train: " + opts.data_path + " has no examples");
  }

  Vocabulary vocab;
  if (!opts.vocab_in.empty()) {
    vocab = Vocabulary::load(opts.vocab_in);
  } else {
    std::vector<std::string> texts;
    for (const auto& ex : dataset) {
      texts.push_back(ex.cause.raw);
      if (ex.addition) texts.push_back(ex.addition->raw);
      texts.push_back(ex.effect.raw);
    }
    vocab = Vocabulary::build(texts, opts.vocab_max);
  }

  ModelConfig mcfg;
  mcfg.dim = opts.dim;
  mcfg.attention_mode = attention_mode_from_string(opts.attention);
  mcfg.include_specials = !opts.exclude_specials;
  mcfg.seed = opts.train_config.seed;
  mcfg.embedder = embedder_kind_from_string(opts.embedder);

  CesarModel model;
  if (mcfg.embedder == EmbedderKind::fixed) {
    if (opts.fixed_embeddings.empty()) {
      throw ValidationError("train: --embedder fixed needs --fixed-embeddings");
    }
    model = make_model_with_table(vocab, load_embedding_table(opts.fixed_embeddings), mcfg);
  } else {
    model = make_model(vocab, mcfg);
  }

  const auto result = train(model, vocab, dataset, opts.train_config);

  save_checkpoint(model, opts.out_path);
  const std::string vocab_out =
      opts.vocab_out.empty() ? opts.out_path + ".vocab" : opts.vocab_out;
  vocab.save(vocab_out);
  if (!opts.curve_path.empty()) {
    std::ofstream curve(opts.curve_path, std::ios::binary);
    if (!curve) throw IoError("train: cannot write " + opts.curve_path);
    curve << "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
      curve << (e + 1) << ',' << num17(result.epoch_losses[e]) << '\n';
    }
  }
  std::printf("train: %zu examples, vocab %zu, dim %zu\n", dataset.size(), vocab.size(),
              opts.dim);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::printf("epoch %zu loss %s\n", e + 1, num17(result.epoch_losses[e]).c_str());
  }
  std::printf("checkpoint -> %s\nvocabulary -> %s\n", opts.out_path.c_str(),
              vocab_out.c_str());
  return 0;
}

int run_score(const std::string& model_path, const std::string& vocab_path,
              const std::string& cause, const std::string& addition,
              const std::string& effect, bool breakdown) {
  const auto vocab =
      Vocabulary::load(vocab_path.empty() ? model_path + ".vocab" : vocab_path);
  const auto model = load_checkpoint(model_path, vocab);
  const EventText cause_text(cause);
  const EventText effect_text(effect);
  std::optional<EventText> addition_text;
  if (!addition.empty()) addition_text = EventText(addition);

  const auto seq = pack_texts(vocab, cause_text, addition_text, effect_text);
  const auto result = score_sequence(model, seq);
  std::printf("score %s\n", num17(result.score).c_str());
  if (breakdown) {
    const auto [cause_tokens, effect_tokens] = segment_tokens(model, vocab, seq);
    print_matrix("association", result.association, cause_tokens, effect_tokens);
    print_matrix("attention", result.attention, cause_tokens, effect_tokens);
    print_matrix("strength", result.strength, cause_tokens, effect_tokens);
  }
  return 0;
}

int run_eval(const MetricOptions& metric_opts, const std::string& data_path,
             const std::string& tie_policy, unsigned jobs, const std::string& stats_csv) {
  const auto data = load_defeasibility(data_path, &std::cerr);
  if (data.empty()) throw ValidationError("eval: " + data_path + " has no instances");
  if (!stats_csv.empty()) {
    std::ofstream out(stats_csv, std::ios::binary);
    if (!out) throw IoError("eval: cannot write " + stats_csv);
    write_dataset_stats_csv(data, out);
  }
  const auto metric = build_metric(metric_opts);
  const auto report =
      evaluate_defeasibility(metric, data, tie_policy_from_string(tie_policy), jobs);
  std::printf("metric supporter defeater geometric_mean ties evaluated excluded\n");
  std::printf("%s %s %s %s %d %zu %zu\n", metric.name.c_str(),
              percent1(report.supporter_accuracy).c_str(),
              percent1(report.defeater_accuracy).c_str(),
              percent1(report.geometric_mean).c_str(), report.tie_count, report.evaluated,
              report.excluded.size());
  for (const auto& id : report.excluded) {
    std::fprintf(stderr, "excluded: %s\n", id.c_str());
  }
  return 0;
}

int run_copa(const MetricOptions& metric_opts, const std::string& data_path, unsigned jobs) {
  const auto data = load_copa(data_path, &std::cerr);
  if (data.empty()) throw ValidationError("copa: " + data_path + " has no instances");
  const auto metric = build_metric(metric_opts);
  const auto report = evaluate_copa(metric, data, jobs);
  std::printf("metric accuracy evaluated excluded\n");
  std::printf("%s %s %zu %zu\n", metric.name.c_str(), percent1(report.accuracy).c_str(),
              report.evaluated, report.excluded.size());
  return 0;
}

int run_shift_report(const MetricOptions& metric_opts, const std::string& data_path,
                     const std::string& out_dir, unsigned jobs) {
  const auto data = load_defeasibility(data_path, &std::cerr);
  if (data.empty()) throw ValidationError("shift-report: " + data_path + " has no instances");
  const auto metric = build_metric(metric_opts);
  const auto summary = shift_report(metric, data, out_dir, jobs);
  std::printf("shift-report: %zu instances (%zu excluded)\n", summary.evaluated,
              summary.excluded.size());
  std::printf("mean base %s\nmean with supporter %s\nmean with defeater %s\n",
              num17(summary.mean_base).c_str(), num17(summary.mean_supported).c_str(),
              num17(summary.mean_defeated).c_str());
  std::printf("mean delta supporter %s\nmean delta defeater %s\n",
              num17(summary.mean_delta_supporter).c_str(),
              num17(summary.mean_delta_defeater).c_str());
  std::printf("wrote %s\n      %s\n      %s\n      %s\n", summary.scores_csv.c_str(),
              summary.kde_csv.c_str(), summary.summary_txt.c_str(), summary.svg.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-strength metrics: training, scoring, and defeasibility evaluation"};
  app.require_subcommand(1);
  // Let `causal eval --config ...` work as well as `causal --config ... eval`.
  app.fallthrough();

  CommonOptions common;
  app.add_option("--config", common.config_path, "JSON config file; flags take precedence")
      ->check(CLI::ExistingFile);

  // augment
  auto* augment = app.add_subcommand("augment", "Expand cause/effect/explanation records "
                                                "into a leveled training set");
  std::string augment_pairs, augment_out = "train.jsonl";
  AugmentTargets targets;
  augment->add_option("--pairs", augment_pairs, "Source JSONL")->required();
  augment->add_option("--out", augment_out, "Output training JSONL");
  auto* t_base = augment->add_option("--target-base", targets.base, "Bare causal pair target");
  auto* t_sup =
      augment->add_option("--target-supported", targets.supported, "With-explanation target");
  auto* t_opp =
      augment->add_option("--target-opposed", targets.opposed, "With-opposite target");
  auto* t_non =
      augment->add_option("--target-noncausal", targets.non_causal, "Non-causal pair target");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a training JSONL");
  TrainCliOptions train_opts;
  train_cmd->add_option("--train", train_opts.data_path, "Training JSONL")->required();
  train_cmd->add_option("--out", train_opts.out_path, "Checkpoint output path");
  train_cmd->add_option("--vocab-out", train_opts.vocab_out,
                        "Vocabulary output path (default <out>.vocab)");
  train_cmd->add_option("--vocab-in", train_opts.vocab_in,
                        "Use an existing vocabulary instead of building one");
  train_cmd->add_option("--curve", train_opts.curve_path, "Write epoch,loss CSV here");
  auto* o_dim = train_cmd->add_option("--dim", train_opts.dim, "Embedding width");
  auto* o_emb = train_cmd->add_option("--embedder", train_opts.embedder,
                                      "lookup|lookup_mixer|fixed")
                    ->check(CLI::IsMember({"lookup", "lookup_mixer", "fixed"}));
  auto* o_att = train_cmd->add_option("--attention", train_opts.attention, "learned|uniform")
                    ->check(CLI::IsMember({"learned", "uniform"}));
  train_cmd->add_option("--fixed-embeddings", train_opts.fixed_embeddings,
                        "Embedding table file for --embedder fixed");
  auto* o_nospec = train_cmd->add_flag("--exclude-specials", train_opts.exclude_specials,
                                       "Drop [CLS]/[SEP] rows from scoring");
  auto* o_vmax =
      train_cmd->add_option("--vocab-max", train_opts.vocab_max, "Vocabulary size cap");
  auto* o_epochs =
      train_cmd->add_option("--epochs", train_opts.train_config.epochs, "Training epochs");
  auto* o_lr = train_cmd->add_option("--lr", train_opts.train_config.learning_rate,
                                     "Reference learning rate");
  auto* o_scale = train_cmd->add_option("--lr-scale", train_opts.train_config.lr_scale,
                                        "Desk-scale learning-rate multiplier");
  auto* o_wd = train_cmd->add_option("--weight-decay", train_opts.train_config.weight_decay,
                                     "Decoupled weight decay");
  auto* o_batch =
      train_cmd->add_option("--batch-size", train_opts.train_config.batch_size, "Batch size");
  auto* o_seed = train_cmd->add_option("--seed", train_opts.train_config.seed,
                                       "Seed for initialization and shuffling");

  // score
  auto* score_cmd = app.add_subcommand("score", "Score one cause/effect pair");
  std::string score_model, score_vocab, score_cause, score_addition, score_effect;
  bool score_breakdown = false;
  score_cmd->add_option("--model", score_model, "Checkpoint file")->required();
  score_cmd->add_option("--vocab", score_vocab, "Vocabulary file (default <model>.vocab)");
  score_cmd->add_option("--cause", score_cause, "Cause text")->required();
  score_cmd->add_option("--addition", score_addition,
                        "Supporter/defeater joined onto the cause");
  score_cmd->add_option("--effect", score_effect, "Effect text")->required();
  score_cmd->add_flag("--breakdown", score_breakdown,
                      "Print the association/attention/strength matrices");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Supporter/defeater accuracy on a benchmark");
  MetricOptions eval_metric;
  std::map<std::string, CLI::Option*> eval_flags;
  std::string eval_data, eval_tie = "strict";
  add_metric_flags(eval_cmd, eval_metric, eval_flags);
  eval_cmd->add_option("--data", eval_data, "Defeasibility JSONL")->required();
  auto* o_tie = eval_cmd->add_option("--tie-policy", eval_tie, "strict|lenient")
                    ->check(CLI::IsMember({"strict", "lenient"}));
  auto* o_jobs_eval = eval_cmd->add_option("--jobs", common.jobs, "Parallel scoring threads");
  std::string eval_stats_csv;
  eval_cmd->add_option("--stats-csv", eval_stats_csv,
                       "Also write per-domain/interval dataset statistics here");

  // copa
  auto* copa_cmd = app.add_subcommand("copa", "Two-choice accuracy on COPA-format data");
  MetricOptions copa_metric;
  std::map<std::string, CLI::Option*> copa_flags;
  std::string copa_data;
  add_metric_flags(copa_cmd, copa_metric, copa_flags);
  copa_cmd->add_option("--data", copa_data, "COPA JSONL")->required();
  auto* o_jobs_copa = copa_cmd->add_option("--jobs", common.jobs, "Parallel scoring threads");

  // shift-report
  auto* shift_cmd =
      app.add_subcommand("shift-report", "Score-distribution shift report with KDE curves");
  MetricOptions shift_metric;
  std::map<std::string, CLI::Option*> shift_flags;
  std::string shift_data, shift_out = "shift-report";
  add_metric_flags(shift_cmd, shift_metric, shift_flags);
  shift_cmd->add_option("--data", shift_data, "Defeasibility JSONL")->required();
  shift_cmd->add_option("--out", shift_out, "Output directory");
  auto* o_jobs_shift = shift_cmd->add_option("--jobs", common.jobs, "Parallel scoring threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!common.config_path.empty()) {
      common.config = JsonConfig::from_file(common.config_path);
    }
    const auto& cfg = common.config;

    if (augment->parsed()) {
      config_fallback(t_base, targets.base, cfg, "targets.base");
      config_fallback(t_sup, targets.supported, cfg, "targets.supported");
      config_fallback(t_opp, targets.opposed, cfg, "targets.opposed");
      config_fallback(t_non, targets.non_causal, cfg, "targets.non_causal");
      return run_augment(augment_pairs, augment_out, targets);
    }
    if (train_cmd->parsed()) {
      config_fallback(o_dim, train_opts.dim, cfg, "model.dim");
      config_fallback(o_emb, train_opts.embedder, cfg, "model.embedder");
      config_fallback(o_att, train_opts.attention, cfg, "model.attention_mode");
      bool exclude = train_opts.exclude_specials;
      if (o_nospec->count() == 0) {
        if (auto v = cfg.get<bool>("model.include_specials")) exclude = !*v;
      }
      train_opts.exclude_specials = exclude;
      config_fallback(o_vmax, train_opts.vocab_max, cfg, "train.vocab_max");
      config_fallback(o_epochs, train_opts.train_config.epochs, cfg, "train.epochs");
      config_fallback(o_lr, train_opts.train_config.learning_rate, cfg,
                      "train.learning_rate");
      config_fallback(o_scale, train_opts.train_config.lr_scale, cfg, "train.lr_scale");
      config_fallback(o_wd, train_opts.train_config.weight_decay, cfg, "train.weight_decay");
      config_fallback(o_batch, train_opts.train_config.batch_size, cfg, "train.batch_size");
      config_fallback(o_seed, train_opts.train_config.seed, cfg, "seed");
      return run_train(train_opts);
    }
    if (score_cmd->parsed()) {
      return run_score(score_model, score_vocab, score_cause, score_addition, score_effect,
                       score_breakdown);
    }
    if (eval_cmd->parsed()) {
      apply_metric_config(eval_metric, cfg, eval_flags);
      config_fallback(o_tie, eval_tie, cfg, "tie_policy");
      config_fallback(o_jobs_eval, common.jobs, cfg, "jobs");
      return run_eval(eval_metric, eval_data, eval_tie, common.jobs, eval_stats_csv);
    }
    if (copa_cmd->parsed()) {
      apply_metric_config(copa_metric, cfg, copa_flags);
      config_fallback(o_jobs_copa, common.jobs, cfg, "jobs");
      return run_copa(copa_metric, copa_data, common.jobs);
    }
    if (shift_cmd->parsed()) {
      apply_metric_config(shift_metric, cfg, shift_flags);
      config_fallback(o_jobs_shift, common.jobs, cfg, "jobs");
      return run_shift_report(shift_metric, shift_data, shift_out, common.jobs);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    // Bad paths are caught up front; treat them as validation failures.
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
