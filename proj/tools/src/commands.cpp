#include "commands.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>

#include "run_config.hpp"
#include "sgt/analysis.hpp"
#include "sgt/error.hpp"
#include "sgt/gradcheck.hpp"
#include "sgt/report.hpp"
#include "sgt/synthetic.hpp"
#include "sgt/train.hpp"

namespace sgt::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kModule = "cli";
constexpr const char* kCheckpointName = "model.ckpt";
constexpr const char* kVocabName = "vocab.txt";

void log(const std::string& message) { fmt::print(stderr, "{}\n", message); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw Error(kModule, fmt::format("failed writing {}", path.string()));
}

void prepare_output(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error(kModule, fmt::format("cannot create output.dir {}: {}", config.output_dir.string(), ec.message()));
}

std::vector<Document> load_split(const RunConfig& config, const std::string& name, const LabelScheme& scheme) {
  const auto& paths = config.split(name);
  auto docs = load_conllu(paths.conllu.string());
  const auto result = load_annotations(paths.annotations.string(), docs, scheme);
  for (const auto& w : result.warnings) log(fmt::format("warning: {}", w));
  log(fmt::format("{}: {} documents, {} pairs ({} dropped as non-adjacent)", name, docs.size(), result.pairs_accepted,
                  result.pairs_dropped));
  return docs;
}

void attach_vectors(const RunConfig& config, SgtModel& model) {
  if (model.encoder().config().backend != EncoderBackend::kPrecomputed) return;
  if (config.vectors.empty()) throw Error(kModule, "checkpoint uses precomputed vectors but data.vectors is not set");
  model.encoder().set_precomputed(std::make_shared<const PrecomputedVectors>(
      PrecomputedVectors::load(config.vectors.string(), model.encoder().config().token_width)));
}

SgtModel make_model(const RunConfig& config, const Vocabularies& vocabs, const LabelScheme& scheme, std::size_t layers,
                    std::size_t heads, std::uint64_t seed) {
  auto mc = config.model;
  mc.layers = layers;
  mc.heads = heads;
  auto ec = config.encoder;
  ec.pos_width = vocabs.upos_count();
  SgtModel model(mc, ec, vocabs, scheme, seed);
  attach_vectors(config, model);
  return model;
}

struct Loaded {
  RunConfig config;
  std::unique_ptr<SgtModel> model;
};

Loaded load_trained(const std::string& config_path, const std::string& checkpoint_path) {
  Loaded out{load_run_config(config_path), nullptr};
  const fs::path ckpt(checkpoint_path);
  if (!fs::exists(ckpt)) throw Error(kModule, fmt::format("checkpoint not found: {}", ckpt.string()));
  const auto vocab_path = ckpt.parent_path() / kVocabName;
  if (!fs::exists(vocab_path)) {
    throw Error(kModule, fmt::format("vocabulary file {} missing next to checkpoint", vocab_path.string()));
  }
  const auto vocabs = Vocabularies::load(vocab_path.string());
  out.model = std::make_unique<SgtModel>(SgtModel::from_checkpoint(load_checkpoint(ckpt.string()), vocabs));
  if (out.model->scheme().name() != out.config.scheme) {
    throw Error(kModule, fmt::format("checkpoint scheme {} differs from config scheme {}", out.model->scheme().name(),
                                     out.config.scheme));
  }
  attach_vectors(out.config, *out.model);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = load_run_config(config_path);
  const auto scheme = LabelScheme::by_name(config.scheme);
  const auto train_docs = load_split(config, "train", scheme);
  std::vector<Document> dev_docs;
  if (config.dev.present()) dev_docs = load_split(config, "dev", scheme);

  const auto vocabs = build_vocabs(train_docs);
  auto model = make_model(config, vocabs, scheme, config.model.layers, config.model.heads, config.seed);
  const auto train_data = build_dataset(train_docs, vocabs);
  std::optional<Dataset> dev_data;
  if (config.dev.present()) dev_data = build_dataset(dev_docs, vocabs);

  prepare_output(config);
  const auto result = train(model, train_data, dev_data ? &*dev_data : nullptr, config.training, [&](const EpochLog& l) {
    log(fmt::format("epoch {:>3} {:<5} event_loss {:.6f} relation_loss {:.6f}{}  [{:.1f}s]", l.epoch, l.phase,
                    l.event_loss, l.relation_loss,
                    l.has_dev ? fmt::format(" dev_event_f {:.4f} dev_relation_f {:.4f}", l.dev_events.f1, l.dev_relations.f1)
                              : "",
                    seconds_since(start)));
  });

  save_checkpoint((config.output_dir / kCheckpointName).string(), model.to_checkpoint());
  vocabs.save((config.output_dir / kVocabName).string());
  std::string jsonl;
  for (const auto& l : result.log) jsonl += epoch_json(l) + "\n";
  jsonl += fmt::format("{{\"best_epoch\":{}}}\n", result.best_epoch);
  const auto stem = config.stem("train");
  write_file(config.output_dir / (stem + ".jsonl"), jsonl);
  write_file(config.output_dir / (stem + ".txt"),
             epoch_table(result.log) + fmt::format("best epoch: {}\n", result.best_epoch));
  log(fmt::format("wrote {} and {} to {}", kCheckpointName, stem + ".{jsonl,txt}", config.output_dir.string()));
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, const std::string& setting_name) {
  const auto setting = parse_eval_setting(setting_name);
  auto [config, model] = load_trained(config_path, checkpoint);
  const auto split = config.resolved_eval_split();
  const auto docs = load_split(config, split, model->scheme());
  const auto data = build_dataset(docs, model->vocabs());
  const auto report = evaluate(*model, data, setting);
  prepare_output(config);
  const auto stem = config.stem(fmt::format("eval_{}_{}", setting_name, split));
  write_file(config.output_dir / (stem + ".jsonl"), eval_json(report, model->scheme()) + "\n");
  write_file(config.output_dir / (stem + ".txt"), eval_table(report, model->scheme()));
  log(fmt::format("{} {}: event F {:.4f}, relation F {:.4f}", split, setting_name, report.events.f1, report.relations.f1));
  return 0;
}

int cmd_analyze(const std::string& config_path, const std::string& checkpoint, const std::string& report_name) {
  std::string json, table;
  RunConfig config;
  std::string split;
  if (report_name == "stats") {
    config = load_run_config(config_path);
    split = config.resolved_eval_split();
    const auto scheme = LabelScheme::by_name(config.scheme);
    const auto stats = label_stats(load_split(config, split, scheme), scheme);
    json = label_stats_json(stats) + "\n";
    table = format_label_stats(stats);
  } else {
    if (checkpoint.empty()) {
      throw Error(kModule, fmt::format("--report {} needs a checkpoint", report_name), Error::Kind::kUsage);
    }
    auto loaded = load_trained(config_path, checkpoint);
    config = loaded.config;
    const auto& model = *loaded.model;
    split = config.resolved_eval_split();
    const auto docs = load_split(config, split, model.scheme());

    if (report_name == "consistency") {
      ConsistencyReport total;
      const auto per_doc = predict_document_relations(model, docs);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto r = consistency_report(per_doc[d], model.scheme());
        json += fmt::format("{{\"doc\":\"{}\",\"report\":{}}}\n", docs[d].id, consistency_json(r));
        total.symmetry += r.symmetry;
        total.transitivity += r.transitivity;
        total.simultaneous_chains += r.simultaneous_chains;
        total.checked_pairs += r.checked_pairs;
        total.checked_triples += r.checked_triples;
      }
      json += fmt::format("{{\"total\":{}}}\n", consistency_json(total));
      table = consistency_table(total);
    } else {
      const auto data = build_dataset(docs, model.vocabs());
      const bool cues = report_name == "cues";
      const auto outputs = predict_pairs(model, data, cues);
      if (report_name == "width") {
        std::vector<WidthItem> items;
        for (std::size_t i = 0; i < data.pairs.size(); ++i)
          items.push_back(WidthItem{data.pairs[i].width(), data.pairs[i].label, outputs[i].label});
        const auto buckets = context_width_report(items, model.scheme());
        json = width_json(buckets);
        table = width_table(buckets);
      } else {
        std::vector<CueInput> inputs;
        for (std::size_t i = 0; i < data.pairs.size(); ++i) {
          const auto& trace = outputs[i].trace;
          inputs.push_back(CueInput{&data.pairs[i].graph, &data.pairs[i].context, trace.phi_edges,
                                    trace.layers.back().syntax_weights});
        }
        const auto results = cue_report(inputs, config.top_k);
        std::vector<CueRecord> records;
        for (std::size_t i = 0; i < data.pairs.size(); ++i) {
          const auto& p = data.pairs[i];
          std::vector<std::string> forms;
          for (const auto& n : p.graph.nodes()) forms.push_back(docs[p.doc].sentences[n.sentence].at(n.token - 1).form);
          records.push_back(CueRecord{p.key, results[i], std::move(forms)});
        }
        json = cue_json(records, model.vocabs());
        table = cue_table(records, model.vocabs());
      }
    }
  }
  prepare_output(config);
  const auto stem = config.stem(fmt::format("analyze_{}_{}", report_name, split));
  write_file(config.output_dir / (stem + ".jsonl"), json);
  write_file(config.output_dir / (stem + ".txt"), table);
  log(fmt::format("wrote {}.{{jsonl,txt}} to {}", stem, config.output_dir.string()));
  return 0;
}

int cmd_gradcheck(const GradcheckConfig& gc, double tolerance) {
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_gradcheck(gc);
  fmt::print("{:<34} {:>8} {:>12} {:>12}\n", "parameter", "entries", "max_rel", "max_abs");
  for (const auto& g : report.groups)
    fmt::print("{:<34} {:>8} {:>12.3e} {:>12.3e}\n", g.name, g.entries, g.max_relative_error, g.max_absolute_error);
  fmt::print("max relative error {:.3e} (tolerance {:.1e}): {}\n", report.max_relative_error, tolerance,
             report.passed(tolerance) ? "PASS" : "FAIL");
  log(fmt::format("gradcheck finished in {:.2f}s", seconds_since(start)));
  return report.passed(tolerance) ? 0 : 2;
}

struct SynthOptions {
  SynthConfig synth;
  std::size_t dev_windows = 100;
  std::string mixture;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_synth(SynthOptions options) {
  if (!options.mixture.empty()) {
    options.synth.label_mixture.clear();
    std::stringstream ss(options.mixture);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        options.synth.label_mixture.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(kModule, fmt::format("--mixture: '{}' is not a number", item), Error::Kind::kUsage);
      }
    }
  }
  const auto scheme = LabelScheme::by_name(options.synth.scheme);
  options.synth.scheme = scheme.name();
  const fs::path out(options.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(kModule, fmt::format("cannot create {}: {}", out.string(), ec.message()));

  const auto train = generate_synthetic(options.synth, options.seed);
  save_conllu((out / "train.conllu").string(), train.docs);
  save_annotations((out / "train.ann").string(), train.docs, scheme);
  std::string config = fmt::format(
      "data.train_conllu = train.conllu\ndata.train_annotations = train.ann\ndata.scheme = {}\n", scheme.name());
  if (options.dev_windows > 0) {
    auto dev_config = options.synth;
    dev_config.windows = options.dev_windows;
    const auto dev = generate_synthetic(dev_config, options.seed + 1);
    save_conllu((out / "dev.conllu").string(), dev.docs);
    save_annotations((out / "dev.ann").string(), dev.docs, scheme);
    config += "data.dev_conllu = dev.conllu\ndata.dev_annotations = dev.ann\n";
  }
  config += fmt::format("seed = {}\noutput.dir = run\n", options.seed);
  write_file(out / "config.txt", config);
  log(fmt::format("wrote {} training windows ({} dev) and config.txt to {}", options.synth.windows, options.dev_windows,
                  out.string()));
  return 0;
}

int cmd_grid(const std::string& config_path, std::size_t jobs) {
  const auto config = load_run_config(config_path);
  const auto scheme = LabelScheme::by_name(config.scheme);
  if (!config.dev.present()) throw Error(kModule, "grid search needs a dev split", Error::Kind::kUsage);
  const auto train_docs = load_split(config, "train", scheme);
  const auto dev_docs = load_split(config, "dev", scheme);
  const auto vocabs = build_vocabs(train_docs);
  const auto train_data = build_dataset(train_docs, vocabs);
  const auto dev_data = build_dataset(dev_docs, vocabs);

  auto grid = config.grid;
  if (grid.learning_rates.empty()) grid.learning_rates = {config.training.learning_rate};
  if (grid.batch_sizes.empty()) grid.batch_sizes = {config.training.batch_size};
  if (grid.layers.empty()) grid.layers = {config.model.layers};
  if (grid.heads.empty()) grid.heads = {config.model.heads};

  const auto result = grid_search(
      grid,
      [&](const GridCell& cell) {
        auto model = make_model(config, vocabs, scheme, cell.layers, cell.heads, config.seed + cell.index);
        auto tc = config.training;
        tc.learning_rate = cell.learning_rate;
        tc.batch_size = cell.batch_size;
        tc.seed = config.seed + cell.index;
        train(model, train_data, &dev_data, tc);
        const auto report = evaluate(model, dev_data, EvalSetting::kGold);
        log(fmt::format("cell {}: lr {} batch {} layers {} heads {} -> dev relation F {:.4f}", cell.index,
                        cell.learning_rate, cell.batch_size, cell.layers, cell.heads, report.relations.f1));
        return GridRow{cell, report.relations.f1, report.events.f1};
      },
      jobs);

  prepare_output(config);
  const auto stem = config.stem("grid");
  write_file(config.output_dir / (stem + ".jsonl"), grid_json(result));
  write_file(config.output_dir / (stem + ".txt"), grid_table(result));
  log(fmt::format("best cell {} of {}", result.best, result.rows.size()));
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Syntax-guided graph transformer for temporal relation extraction", "sgt"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, setting = "gold", report;

  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoint and epoch logs");
  train_cmd->add_option("config", config_path, "Run configuration file")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the configured split");
  eval_cmd->add_option("config", config_path, "Run configuration file")->required();
  eval_cmd->add_option("checkpoint", checkpoint, "Checkpoint written by train")->required();
  eval_cmd->add_option("--setting", setting, "joint or gold")->check(CLI::IsMember({"joint", "gold"}));

  auto* analyze_cmd = app.add_subcommand("analyze", "Consistency, context-width, cue and label statistics reports");
  analyze_cmd->add_option("config", config_path, "Run configuration file")->required();
  analyze_cmd->add_option("checkpoint", checkpoint, "Checkpoint (not needed for stats)");
  analyze_cmd->add_option("--report", report, "cues, consistency, width or stats")
      ->required()
      ->check(CLI::IsMember({"cues", "consistency", "width", "stats"}));

  GradcheckConfig gc;
  double tolerance = 1e-4;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check on a random fixture");
  grad_cmd->add_option("--size", gc.tokens, "Fixture tokens over two sentences")->check(CLI::Range(2, 64));
  grad_cmd->add_option("--layers", gc.layers, "Layers")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--heads", gc.heads, "Heads")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", gc.seed, "Fixture seed");
  grad_cmd->add_option("--tolerance", tolerance, "Maximum relative error");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus and a matching config");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--windows", synth.synth.windows, "Training windows");
  synth_cmd->add_option("--dev-windows", synth.dev_windows, "Dev windows (0 = no dev split)");
  synth_cmd->add_option("--vocab-size", synth.synth.vocab_size, "Pseudo-words per open class");
  synth_cmd->add_option("--min-length", synth.synth.min_length, "Minimum sentence length");
  synth_cmd->add_option("--max-length", synth.synth.max_length, "Maximum sentence length");
  synth_cmd->add_option("--scheme", synth.synth.scheme, "matres or tbdense");
  synth_cmd->add_option("--mixture", synth.mixture, "Comma-separated label frequencies in scheme order");
  synth_cmd->add_option("--fronted-fraction", synth.synth.fronted_fraction, "Share of fronted-clause windows");
  synth_cmd->add_option("--cross-fraction", synth.synth.cross_fraction, "Share of two-sentence windows");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");

  std::size_t jobs = 1;
  auto* grid_cmd = app.add_subcommand("grid", "Grid search over the configured candidate lists");
  grid_cmd->add_option("config", config_path, "Run configuration file")->required();
  grid_cmd->add_option("--jobs", jobs, "Cells trained concurrently")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(config_path);
    if (*eval_cmd) return cmd_eval(config_path, checkpoint, setting);
    if (*analyze_cmd) return cmd_analyze(config_path, checkpoint, report);
    if (*grad_cmd) return cmd_gradcheck(gc, tolerance);
    if (*synth_cmd) return cmd_synth(synth);
    if (*grid_cmd) return cmd_grid(config_path, jobs);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return e.kind() == Error::Kind::kUsage ? 1 : 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sgt");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sgt::cli
