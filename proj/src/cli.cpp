// SPDX-License-Identifier: Apache-2.0
#include "protoseq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "protoseq/checkpoint.hpp"
#include "protoseq/dataset.hpp"
#include "protoseq/explainer.hpp"
#include "protoseq/json_io.hpp"
#include "protoseq/metrics.hpp"
#include "protoseq/service.hpp"
#include "protoseq/simplifier.hpp"
#include "protoseq/synthetic.hpp"
#include "protoseq/trainer.hpp"

namespace protoseq {

using nlohmann::json;

namespace {

const Vocabulary *token_vocab(const PrototypeModel &model) {
  return model.encoder.config().input_kind == StepKind::Token ? &model.vocab : nullptr;
}

Dataset load_for_model(const std::string &path, const PrototypeModel &model) {
  const StepKind kind = model.encoder.config().input_kind;
  return load_dataset(path, kind == StepKind::Token ? &model.vocab : nullptr, kind);
}

struct TrainArgs {
  std::string data, config, out, metrics;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs &a, std::ostream &out) {
  const Hyperparams hp = a.config.empty() ? Hyperparams{} : load_hyperparams(a.config);
  const Dataset all = load_dataset(a.data);
  const Dataset train_set = all.subset(Split::Train);
  const Dataset val_set = all.subset(Split::Val);
  if (train_set.empty())
    throw std::invalid_argument("dataset '" + a.data + "' has no training records");

  const std::string metrics_path = a.metrics.empty() ? a.out + ".metrics.jsonl" : a.metrics;
  std::ofstream log(metrics_path, std::ios::trunc);
  if (!log)
    throw std::runtime_error("cannot write metrics log '" + metrics_path + "'");
  const char *val_key =
      all.mode == TaskMode::Multiclass ? "val_accuracy" : "val_recall_at_5";
  TrainOptions opts;
  if (!val_set.empty())
    opts.validation = &val_set;
  opts.on_epoch = [&](const EpochRecord &r) {
    json line = {{"epoch", r.epoch}, {"lr", r.lr},       {"ce", r.loss.ce},
                 {"rc", r.loss.rc},  {"re", r.loss.re},  {"rd", r.loss.rd},
                 {"l1", r.loss.l1},  {"total", r.loss.total}, {"projected", r.projected}};
    line[val_key] = r.val_accuracy ? json(*r.val_accuracy) : json(nullptr);
    log << line.dump() << '\n' << std::flush;
  };
  TrainResult res = train(train_set, hp, a.seed, opts);
  save_checkpoint(res.model, a.out);
  json summary = {{"checkpoint", a.out},
                  {"metrics", metrics_path},
                  {"epochs", res.state.epoch},
                  {"steps", res.state.step},
                  {"prototypes", res.model.k()},
                  {"projection_epochs", res.state.projection_log},
                  {"weight_violations", res.state.weight_violations}};
  if (!res.state.history.empty() && res.state.history.back().val_accuracy)
    summary[val_key] = *res.state.history.back().val_accuracy;
  out << summary.dump() << '\n';
  return 0;
}

int cmd_eval(const std::string &ckpt, const std::string &data, const std::string &split,
             std::ostream &out) {
  const PrototypeModel model = load_checkpoint(ckpt);
  Dataset ds = load_for_model(data, model);
  if (split != "all")
    ds = ds.subset(parse_split(split));
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> truth;
  for (const auto &s : ds.sequences) {
    scores.push_back(forward(model, s).scores);
    truth.push_back(s.labels);
  }
  const MetricSet m = evaluate_metrics(scores, truth, model.mode);
  json j = {{"task", task_mode_name(model.mode)}, {"examples", m.examples}};
  if (model.mode == TaskMode::Multiclass) {
    j["accuracy"] = m.accuracy;
  } else {
    j["recall_at_5"] = m.recall_at_5;
    j["map_at_5"] = m.map_at_5;
    j["skipped_empty_truth"] = m.skipped_empty_truth;
  }
  out << j.dump() << '\n';
  return 0;
}

std::vector<std::string> read_inputs(const std::string &input) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(input, ec))
    return {input};
  std::ifstream in(input);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      lines.push_back(line);
  return lines;
}

Sequence parse_input(const std::string &text, const PrototypeModel &model) {
  const EncoderConfig &ec = model.encoder.config();
  if (ec.input_kind == StepKind::Token && (text.empty() || text.front() != '{'))
    return Sequence::from_tokens(model.vocab.encode(split_words(text)));
  return sequence_from_json(json::parse(text), ec.input_kind, ec.input_width, token_vocab(model));
}

int cmd_explain(const std::string &ckpt, const std::string &input, std::size_t top,
                double min_similarity, std::ostream &out) {
  const PrototypeModel model = load_checkpoint(ckpt);
  bool first = true;
  for (const auto &text : read_inputs(input)) {
    const Sequence seq = parse_input(text, model);
    if (seq.empty())
      throw std::invalid_argument("input sequence is empty");
    if (!first)
      out << '\n';
    out << render_explanation(model, explain(model, seq, top, min_similarity));
    first = false;
  }
  return 0;
}

int cmd_simplify(const std::string &ckpt, const std::string &data, std::size_t beam, double gamma,
                 const std::string &out_path, std::ostream &out) {
  PrototypeModel model = load_checkpoint(ckpt);
  const Dataset ds = load_for_model(data, model).subset(Split::Train);
  if (ds.empty())
    throw std::invalid_argument("dataset '" + data + "' has no training records");
  if (beam < 1)
    throw std::invalid_argument("beam width must be >= 1");
  const auto results = simplify_prototypes(model, ds.sequences, SimplifyOptions{beam, gamma});
  model.hparams.beam_width = beam;
  model.hparams.length_penalty = gamma;
  save_checkpoint(model, out_path);
  json list = json::array();
  for (std::size_t i = 0; i < results.size(); ++i)
    list.push_back({{"id", i},
                    {"source", results[i].best.source},
                    {"length", results[i].best.positions.size()},
                    {"distance", results[i].best.distance},
                    {"provenance", render_steps(results[i].best.steps, token_vocab(model))}});
  out << json{{"checkpoint", out_path}, {"prototypes", list}}.dump() << '\n';
  return 0;
}

int cmd_prune(const std::string &ckpt, double tau, const std::string &out_path, std::ostream &out) {
  PrototypeModel model = load_checkpoint(ckpt);
  const std::size_t before = model.k();
  const PruneResult r = prune(model, tau);
  save_checkpoint(model, out_path);
  out << json{{"checkpoint", out_path}, {"before", before}, {"after", model.k()},
              {"removed", r.removed}}
             .dump()
      << '\n';
  return 0;
}

int cmd_prototypes(const std::string &ckpt, const std::string &data, std::size_t n, double tau,
                   std::ostream &out) {
  const PrototypeModel model = load_checkpoint(ckpt);
  const auto eff = effective_prototypes(model, tau);
  std::optional<Dataset> ds;
  std::vector<std::vector<double>> embeddings;
  if (!data.empty()) {
    ds = load_for_model(data, model);
    embeddings = model.encoder.embed_all(ds->sequences);
  }
  const Vocabulary *vocab = token_vocab(model);
  for (std::size_t i = 0; i < model.k(); ++i) {
    std::vector<double> w(model.num_classes);
    for (std::size_t c = 0; c < model.num_classes; ++c)
      w[c] = model.weights.value(c, i);
    json p = {{"id", i},
              {"provenance", model.provenance[i] ? json(render_steps(*model.provenance[i], vocab))
                                                 : json(nullptr)},
              {"weights", w},
              {"label", format_weights(model, w)},
              {"effective", static_cast<bool>(eff[i])}};
    if (ds && !ds->empty()) {
      json nb = json::array();
      for (const auto &x : neighbors(model, i, embeddings, n))
        nb.push_back({{"index", x.index},
                      {"similarity", x.similarity},
                      {"text", render_steps(ds->sequences[x.index], vocab)}});
      p["neighbors"] = nb;
    }
    out << p.dump() << '\n';
  }
  return 0;
}

int cmd_serve(const std::string &ckpt, const std::string &data, const std::string &journal,
              const std::string &bind, std::ostream &out) {
  PrototypeModel model = load_checkpoint(ckpt);
  Dataset ds = load_for_model(data, model).subset(Split::Train);
  if (ds.empty())
    throw std::invalid_argument("dataset '" + data + "' has no training records");
  const auto [host, port] = bind.empty() ? bind_address_from_env() : parse_bind_address(bind);
  ServiceOptions opts;
  opts.checkpoint_path = ckpt;
  opts.journal_path = journal.empty() ? ckpt + ".edits.jsonl" : journal;
  SteeringService service(std::move(model), std::move(ds), opts);
  out << json{{"listening", host + ":" + std::to_string(port)}}.dump() << std::endl;
  if (!serve_http(service, host, port))
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return 0;
}

int cmd_synth(const std::string &spec_path, std::size_t n, std::optional<std::uint64_t> seed,
              const std::string &out_path, std::ostream &out) {
  MotifSpec spec = spec_path.empty() ? MotifSpec{} : load_motif_spec(spec_path);
  if (seed)
    spec.seed = *seed;
  const SyntheticData syn = generate_synthetic(spec, n);
  save_dataset(syn.data, out_path);
  std::size_t counts[3] = {0, 0, 0};
  for (Split s : syn.data.splits)
    ++counts[static_cast<int>(s)];
  out << json{{"data", out_path},
              {"sequences", syn.data.size()},
              {"train", counts[0]},
              {"val", counts[1]},
              {"test", counts[2]},
              {"motifs", syn.motifs}}
             .dump()
      << '\n';
  return 0;
}

} // namespace

int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Prototype sequence classifiers: train, explain, simplify and steer", "protoseq"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  TrainArgs ta;
  auto *train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--data", ta.data, "Dataset (line-delimited JSON)")->required();
  train_cmd->add_option("--config", ta.config, "Hyperparameter file (key = value)");
  train_cmd->add_option("--out", ta.out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", ta.seed, "Random seed");
  train_cmd->add_option("--metrics", ta.metrics, "Per-epoch metrics log (default <out>.metrics.jsonl)");

  std::string ckpt, data, input, out_path, split = "all", journal, bind, spec_path;
  std::size_t top = 3, beam = 3, n = 5, count = 2500;
  double min_sim = 0.0, gamma = 0.0, tau = 0.1;
  std::optional<std::uint64_t> seed;

  auto *eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", data, "Dataset")->required();
  eval_cmd->add_option("--split", split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  auto *explain_cmd = app.add_subcommand("explain", "Explain predictions with prototypes");
  explain_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  explain_cmd->add_option("--input", input, "Input text, or a file with one input per line")
      ->required();
  explain_cmd->add_option("--top", top, "Prototypes to show");
  explain_cmd->add_option("--min-similarity", min_sim, "Hide prototypes below this similarity");

  auto *simplify_cmd = app.add_subcommand("simplify", "Project prototypes onto short subsequences");
  simplify_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  simplify_cmd->add_option("--data", data, "Training dataset")->required();
  simplify_cmd->add_option("--beam", beam, "Beam width");
  simplify_cmd->add_option("--gamma", gamma, "Length penalty per step");
  simplify_cmd->add_option("--out", out_path, "Output checkpoint")->required();

  auto *prune_cmd = app.add_subcommand("prune", "Remove prototypes with small weights");
  prune_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  prune_cmd->add_option("--tau", tau, "Relative weight threshold in (0, 1)");
  prune_cmd->add_option("--out", out_path, "Output checkpoint")->required();

  auto *protos_cmd = app.add_subcommand("prototypes", "List prototypes as JSON lines");
  protos_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  protos_cmd->add_option("--data", data, "Dataset to search for neighbors");
  protos_cmd->add_option("--neighbors", n, "Neighbors per prototype");
  protos_cmd->add_option("--tau", tau, "Threshold for the effective flag");

  auto *serve_cmd = app.add_subcommand("serve", "Run the HTTP steering service");
  serve_cmd->add_option("--ckpt", ckpt, "Checkpoint (edits and fine-tunes commit here)")
      ->required();
  serve_cmd->add_option("--data", data, "Training dataset")->required();
  serve_cmd->add_option("--journal", journal, "Edit journal (default <ckpt>.edits.jsonl)");
  serve_cmd->add_option("--bind", bind, "host:port (default $PROTOSEQ_BIND or 127.0.0.1:8080)");

  auto *synth_cmd = app.add_subcommand("synth", "Generate a planted-motif dataset");
  synth_cmd->add_option("--spec", spec_path, "Motif spec (key = value)");
  synth_cmd->add_option("--n", count, "Number of sequences");
  synth_cmd->add_option("--seed", seed, "Override the motif spec seed");
  synth_cmd->add_option("--out", out_path, "Output dataset")->required();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i)
    args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  const CLI::App *sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "train") return cmd_train(ta, out);
    if (name == "eval") return cmd_eval(ckpt, data, split, out);
    if (name == "explain") return cmd_explain(ckpt, input, top, min_sim, out);
    if (name == "simplify") return cmd_simplify(ckpt, data, beam, gamma, out_path, out);
    if (name == "prune") return cmd_prune(ckpt, tau, out_path, out);
    if (name == "prototypes") return cmd_prototypes(ckpt, data, n, tau, out);
    if (name == "serve") return cmd_serve(ckpt, data, journal, bind, out);
    if (name == "synth") return cmd_synth(spec_path, count, seed, out_path, out);
  } catch (const std::exception &e) {
    err << json{{"error", e.what()}, {"command", name}}.dump() << '\n';
    return 1;
  }
  return 2;
}

} // namespace protoseq
