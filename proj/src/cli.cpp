// Copyright 2026 The recnas Authors
// SPDX-License-Identifier: Apache-2.0

#include "recnas/cli.hpp"

#include <fstream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "recnas/data.hpp"
#include "recnas/param_store.hpp"

namespace recnas {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kReportFile = "report.json";
constexpr const char* kFinalCheckpoint = "final";

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "run configuration (JSON)")->required();
  cmd->add_option("--seed", flags.seed, "overrides the config seed");
  cmd->add_option("--out", flags.out, "output directory (overrides the config)");
}

RunConfig load_config(const CommonFlags& flags) {
  RunConfig c = parse_config(flags.config);
  if (flags.seed) c.search.seed = *flags.seed;
  if (!flags.out.empty()) {
    c.out = flags.out;
  } else {
    c.out = c.resolve(c.out);
  }
  return c;
}

json data_record(const RunConfig& c) {
  json out;
  const std::pair<const char*, fs::path> splits[] = {
      {"schema", c.data.schema}, {"train", c.data.train}, {"validation", c.data.validation}, {"test", c.data.test}};
  for (const auto& [name, rel] : splits) {
    const fs::path p = fs::absolute(c.resolve(rel)).lexically_normal();
    out[name] = {{"path", p.generic_string()}, {"digest", file_digest(p)}};
  }
  return out;
}

ArtifactManifest base_manifest(const RunConfig& c) {
  ArtifactManifest m;
  m.config_hash = config_hash(c);
  m.seed = c.search.seed;
  m.config = c.identity_json();
  m.data = data_record(c);
  m.winners = {{"blocks", nullptr}, {"interactions", json::array()}, {"mlp", nullptr}};
  m.metrics = json::object();
  return m;
}

void write_pipeline(const RunConfig& c, const Dataset& data, const PipelineResult& r) {
  const fs::path dir = c.out;
  fs::create_directories(dir);
  ArtifactManifest m = base_manifest(c);
  if (r.blocks) m.winners["blocks"] = architecture_to_json(*r.blocks);
  m.winners["interactions"] = interactions_to_json(data.schema, r.selected_interactions);
  if (r.mlp) m.winners["mlp"] = {{"input_width", r.mlp_input_width}, {"layers", mlp_spec_to_json(*r.mlp, r.mlp_input_width)}};
  m.metrics = {{"validation", r.validation.to_json(c.search.task)}, {"test", r.test.to_json(c.search.task)}};
  if (r.popularity) m.metrics["popularity_test"] = r.popularity->to_json(c.search.task);

  save_checkpoint(r.final_params, dir / kFinalCheckpoint);
  write_json(dir / kReportFile, r.to_json(data.schema, c.search.task));
  m.checkpoints[kFinalCheckpoint] = kFinalCheckpoint;
  m.files["report"] = kReportFile;
  save_manifest(dir, m);
}

int cmd_pipeline(const RunConfig& c, std::ostream& out, const PipelineInputs& given = {}) {
  const Dataset data = load_run_data(c);
  const PipelineResult r = run_pipeline(data, c.search, given);
  write_pipeline(c, data, r);
  out << "wrote " << (c.out / kManifestFile).string() << '\n';
  print_manifest(load_manifest(c.out), out);
  return 0;
}

int cmd_interactions(RunConfig c, std::ostream& out) {
  c.search.run_blocks = false;
  c.search.run_mlp = false;
  c.search.run_interactions = true;
  const Dataset data = load_run_data(c);
  const EvolutionResult result = evolve(data.schema, data.train, data.validation, c.search.interaction_config());
  std::vector<Interaction> selected;
  json fitness = json::array();
  for (const auto& s : result.selected) {
    selected.push_back(s.interaction);
    fitness.push_back(s.fitness);
  }
  fs::create_directories(c.out);
  ArtifactManifest m = base_manifest(c);
  m.winners["interactions"] = interactions_to_json(data.schema, selected);
  m.metrics = {{"interaction_auc", fitness}};
  write_json(c.out / kReportFile, evolution_to_json(data.schema, result));
  m.files["report"] = kReportFile;
  save_manifest(c.out, m);
  out << "wrote " << (c.out / kManifestFile).string() << '\n';
  print_manifest(m, out);
  return 0;
}

// Carries the winners of an earlier run into the MLP step.
PipelineInputs inputs_from(const fs::path& dir, const DatasetSchema& schema) {
  const ArtifactManifest prev = load_manifest(dir);
  PipelineInputs in;
  in.interactions = interactions_from_json(schema, prev.winners.at("interactions"));
  if (!prev.winners.at("blocks").is_null()) {
    in.blocks = architecture_from_json(prev.winners.at("blocks"));
    if (prev.winners.at("mlp").is_null() && prev.checkpoints.count(kFinalCheckpoint))
      in.block_params = load_checkpoint(dir / prev.checkpoints.at(kFinalCheckpoint));
  }
  return in;
}

struct RebuiltModel {
  std::unique_ptr<OneShotSpace> space;
  Choice choice;
};

RebuiltModel rebuild(const ArtifactManifest& m, const RunConfig& c, const Dataset& data) {
  RebuiltModel model;
  const json& w = m.winners;
  std::optional<BlockArchitecture> blocks;
  if (!w.at("blocks").is_null()) blocks = architecture_from_json(w.at("blocks"));
  if (!w.at("mlp").is_null()) {
    if (!c.search.mlp_uses_step1_blocks) blocks.reset();
    auto space = std::make_unique<MlpSpace>(data.schema, c.search, data.has_target(),
                                            interactions_from_json(data.schema, w.at("interactions")), blocks, nullptr);
    if (space->input_width() != w.at("mlp").at("input_width").get<std::size_t>())
      throw IntegrityError("MLP input width does not match the dataset");
    model.choice = space->choice_of(mlp_spec_from_json(w.at("mlp").at("layers"), space->input_width()));
    model.space = std::move(space);
  } else if (blocks) {
    auto space = std::make_unique<BlockSpace>(data.schema, c.search, data.has_target());
    model.choice = space->choice_of(*blocks);
    model.space = std::move(space);
  } else {
    throw std::invalid_argument("the manifest has no trained model");
  }
  return model;
}

int cmd_evaluate(const fs::path& dir, const std::string& split, std::ostream& out) {
  const ArtifactManifest m = load_manifest(dir);
  RunConfig c = config_from_json(m.config);
  c.data = {m.data.at("schema").at("path").get<std::string>(), m.data.at("train").at("path").get<std::string>(),
            m.data.at("validation").at("path").get<std::string>(), m.data.at("test").at("path").get<std::string>()};
  for (const auto& [name, rec] : m.data.items())
    if (file_digest(rec.at("path").get<std::string>()) != rec.at("digest").get<std::string>())
      throw IntegrityError("data file changed since the run: " + name);
  const Dataset data = load_run_data(c);
  const RebuiltModel model = rebuild(m, c, data);
  if (!m.checkpoints.count(kFinalCheckpoint)) throw IntegrityError("the manifest has no final checkpoint");
  const ParamStore params = load_checkpoint(dir / m.checkpoints.at(kFinalCheckpoint));
  const EvalStreams streams = make_eval_streams(data, c.search);
  const auto& batches = split == "validation" ? streams.validation : streams.test;
  const Metrics metrics = evaluate_choice(*model.space, params, model.choice, batches);
  out << json{{"split", split}, {"metrics", metrics.to_json(c.search.task)}}.dump(2) << '\n';
  return 0;
}

int cmd_gen_data(const std::string& kind, const std::string& spec_path, std::optional<std::uint64_t> seed,
                 const fs::path& dir, std::ostream& out) {
  const json spec = spec_path.empty() ? json::object() : read_json(spec_path);
  fs::create_directories(dir);
  Dataset data;
  json generator{{"kind", kind}};
  RunConfig config;
  config.data = {"schema.json", "train.jsonl", "validation.jsonl", "test.jsonl"};
  config.out = "run";
  if (kind == "ctr") {
    CtrSyntheticSpec s = CtrSyntheticSpec::from_json(spec);
    if (seed) s.seed = *seed;
    CtrSynthetic d = generate_planted_ctr(s);
    generator["spec"] = s.to_json();
    generator["planted"] = {d.schema.non_sequential()[d.planted.first].name,
                            d.schema.non_sequential()[d.planted.second].name};
    generator["beta"] = d.beta;
    generator["bayes_auc"] = d.bayes_auc;
    data = {d.schema, std::move(d.train), std::move(d.validation), std::move(d.test)};
    config.search.task = Task::kCtr;
    config.search.run_blocks = false;
  } else if (kind == "markov") {
    MarkovSyntheticSpec s = MarkovSyntheticSpec::from_json(spec);
    if (seed) s.seed = *seed;
    const MarkovSynthetic m = generate_markov(s);
    generator["spec"] = s.to_json();
    generator["bayes_hr1"] = m.bayes_hr1;
    data = sequence_dataset(m.schema, m.sequences, true);
    config.search.task = Task::kNextItem;
    config.search.run_interactions = false;
  } else {
    throw std::invalid_argument("--kind must be ctr or markov");
  }
  if (seed) config.search.seed = *seed;
  data.schema.save(dir / "schema.json");
  save_dataset(dir / "train.jsonl", data.schema, data.train);
  save_dataset(dir / "validation.jsonl", data.schema, data.validation);
  save_dataset(dir / "test.jsonl", data.schema, data.test);
  write_json(dir / "generator.json", generator);
  write_json(dir / "config.json", config.to_json());
  out << "wrote " << data.train.size() << '/' << data.validation.size() << '/' << data.test.size()
      << " train/validation/test rows to " << dir.string() << '\n';
  return 0;
}

std::string metric_line(const json& metrics) {
  std::string line;
  for (const auto& [k, v] : metrics.items()) {
    if (!line.empty()) line += "  ";
    line += k + "=" + (v.is_number_float() ? std::to_string(v.get<double>()) : v.dump());
  }
  return line;
}

}  // namespace

void print_manifest(const ArtifactManifest& m, std::ostream& out) {
  out << "config " << m.config_hash << "  seed " << m.seed << "  recnas " << m.tool_version << '\n';
  const json& w = m.winners;
  if (!w.at("blocks").is_null()) {
    out << "Behavior blocks\n";
    const BlockArchitecture arch = architecture_from_json(w.at("blocks"));
    for (std::size_t i = 0; i < arch.blocks.size(); ++i)
      out << "  Block " << i + 1 << ": " << describe_block(arch.blocks[i]) << '\n';
  }
  if (!w.at("interactions").empty()) {
    out << "Feature interactions\n";
    for (const auto& fields : w.at("interactions")) {
      std::string name;
      for (const auto& f : fields) name += (name.empty() ? "" : "*") + f.get<std::string>();
      out << "  " << name << '\n';
    }
  }
  if (!w.at("mlp").is_null()) {
    const auto width = w.at("mlp").at("input_width").get<std::size_t>();
    const MlpSpec spec = mlp_spec_from_json(w.at("mlp").at("layers"), width);
    out << "Aggregation MLP (input " << width << ")\n";
    for (std::size_t l = 0; l < spec.layers.size(); ++l)
      out << "  Layer " << l + 1 << ": " << describe_mlp_layer(spec.layers[l], width) << '\n';
  }
  for (const auto& [name, metrics] : m.metrics.items()) {
    if (metrics.is_object()) {
      out << name << ": " << metric_line(metrics) << '\n';
    } else {
      out << name << ": " << metrics.dump() << '\n';
    }
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Architecture search for recommender models", "recnas"};
  app.require_subcommand(1);

  std::string kind = "ctr", spec_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset and a starter config");
  gen->add_option("--kind", kind, "ctr or markov")->check(CLI::IsMember({"ctr", "markov"}));
  gen->add_option("--spec", spec_path, "generator settings (JSON)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  CommonFlags blocks_flags, ix_flags, mlp_flags, pipe_flags;
  auto* blocks = app.add_subcommand("search-blocks", "search behavior blocks");
  add_common(blocks, blocks_flags);
  auto* ix = app.add_subcommand("search-interactions", "search feature interactions");
  add_common(ix, ix_flags);
  std::string from;
  auto* mlp = app.add_subcommand("search-mlp", "search the aggregation MLP");
  add_common(mlp, mlp_flags);
  mlp->add_option("--from", from, "run directory whose winners feed this step");
  bool no_blocks = false, no_interactions = false, no_mlp = false;
  auto* pipe = app.add_subcommand("run-pipeline", "run every enabled step");
  add_common(pipe, pipe_flags);
  pipe->add_flag("--no-blocks", no_blocks, "skip the behavior block step");
  pipe->add_flag("--no-interactions", no_interactions, "skip the interaction step");
  pipe->add_flag("--no-mlp", no_mlp, "skip the MLP step");

  std::string eval_dir, split = "test";
  auto* eval = app.add_subcommand("evaluate", "re-evaluate the final model of a run");
  eval->add_option("dir", eval_dir, "run directory")->required();
  eval->add_option("--split", split, "validation or test")->check(CLI::IsMember({"validation", "test"}));

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print the winners of a run");
  inspect->add_option("path", inspect_path, "run directory or manifest file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(kind, spec_path, gen_seed, gen_out, out);
    if (blocks->parsed()) {
      RunConfig c = load_config(blocks_flags);
      c.search.run_blocks = true;
      c.search.run_interactions = false;
      c.search.run_mlp = false;
      c.search.mlp_uses_step1_blocks = false;
      return cmd_pipeline(c, out);
    }
    if (ix->parsed()) return cmd_interactions(load_config(ix_flags), out);
    if (mlp->parsed()) {
      RunConfig c = load_config(mlp_flags);
      c.search.run_blocks = false;
      c.search.run_interactions = false;
      c.search.run_mlp = true;
      PipelineInputs given;
      if (!from.empty()) {
        given = inputs_from(from, DatasetSchema::load(c.resolve(c.data.schema)));
      } else {
        given.interactions = std::vector<Interaction>{};
      }
      if (c.search.mlp_uses_step1_blocks && !given.blocks)
        throw ConfigError("search.mlp_uses_step1_blocks: --from must name a run with block winners");
      return cmd_pipeline(c, out, given);
    }
    if (pipe->parsed()) {
      RunConfig c = load_config(pipe_flags);
      if (no_blocks) c.search.run_blocks = false;
      if (no_interactions) c.search.run_interactions = false;
      if (no_mlp) c.search.run_mlp = false;
      const auto errors = validate_config(c);
      if (!errors.empty()) throw ConfigError(errors.front());
      return cmd_pipeline(c, out);
    }
    if (eval->parsed()) return cmd_evaluate(eval_dir, split, out);
    if (inspect->parsed()) {
      fs::path p = inspect_path;
      if (fs::is_regular_file(p)) p = p.parent_path();
      print_manifest(load_manifest(p.empty() ? fs::path(".") : p), out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace recnas
