#include "echoalign/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "echoalign/config.hpp"
#include "echoalign/dataset.hpp"
#include "echoalign/errors.hpp"
#include "echoalign/manifest.hpp"
#include "echoalign/modifier.hpp"
#include "echoalign/noise.hpp"
#include "echoalign/selection.hpp"
#include "echoalign/theory.hpp"
#include "echoalign/train.hpp"

namespace echoalign {

namespace fs = std::filesystem;

namespace {

// Bad flag combinations found after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

// Refuses to overwrite any input.
void check_distinct(const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  for (const auto& o : outputs) {
    for (const auto& i : inputs) {
      if (same_file(i, o)) throw UsageError("output " + o.string() + " would overwrite input " + i.string());
    }
  }
  for (std::size_t a = 0; a < outputs.size(); ++a) {
    for (std::size_t b = a + 1; b < outputs.size(); ++b) {
      if (same_file(outputs[a], outputs[b])) throw UsageError("output path used twice: " + outputs[a].string());
    }
  }
}

RunManifest start_manifest(const std::string& subcommand, const std::vector<std::string>& args) {
  RunManifest m;
  m.add("tool.version", std::string(kToolVersion));
  m.add("subcommand", subcommand);
  for (const auto& a : args) m.add("argv", a);
  return m;
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
  SynthWorldSpec spec;
  std::string out, out_prototypes, out_test, out_manifest;
};

void cmd_generate(GenerateOpts& o, RunManifest& m) {
  if (o.out_prototypes.empty()) o.out_prototypes = o.out + ".prototypes";
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  std::vector<fs::path> outs{o.out, o.out_prototypes, o.out_manifest};
  if (!o.out_test.empty()) outs.push_back(o.out_test);
  check_distinct({}, outs);

  const World world = generate_world(o.spec);
  write_feature_file(world.dataset, o.out);
  write_feature_file(prototypes_as_dataset(world.prototypes, world.dataset.provenance()), o.out_prototypes);
  m.add("world.classes", static_cast<std::uint64_t>(o.spec.num_classes));
  m.add("world.dim", static_cast<std::uint64_t>(o.spec.dim));
  m.add("world.separation", o.spec.prototype_separation);
  m.add("world.std", o.spec.intra_class_std);
  m.add("world.per_class", static_cast<std::uint64_t>(o.spec.samples_per_class));
  m.add("world.seed", o.spec.seed);
  m.add_output("features", o.out);
  m.add_output("prototypes", o.out_prototypes);
  if (!o.out_test.empty()) {
    write_feature_file(sample_instances(o.spec, world.prototypes, 1), o.out_test);
    m.add_output("test", o.out_test);
  }
  m.write(o.out_manifest);
}

struct CorruptOpts {
  std::string in, family, out, out_manifest;
  double rate = 0.0;
  double idn_std = NoiseSpec{}.idn_std;
  std::uint64_t seed = 0;
};

void cmd_corrupt(CorruptOpts& o, RunManifest& m) {
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  check_distinct({o.in}, {o.out, o.out_manifest});
  NoiseSpec spec{parse_noise_family(o.family), o.rate, o.seed, o.idn_std};
  spec.validate();
  m.add_input("features", o.in);
  const Dataset corrupted = inject_noise(read_feature_file(o.in), spec);
  write_feature_file(corrupted, o.out);
  m.add("noise.family", std::string(to_string(spec.family)));
  m.add("noise.rate", spec.rate);
  m.add("noise.seed", spec.seed);
  m.add("noise.idn_std", spec.idn_std);
  m.add_output("features", o.out);
  m.write(o.out_manifest);
}

struct ModifyOpts {
  std::string in, prototypes, out, out_manifest;
  ModifierConfig config;
};

std::vector<Vector> load_prototypes(const std::string& path, const Dataset& data, RunManifest& m) {
  if (path.empty()) {
    m.add("prototypes.source", std::string("class_centroids"));
    return class_centroids(data);
  }
  m.add_input("prototypes", path);
  return prototypes_from_dataset(read_feature_file(path));
}

void cmd_modify(ModifyOpts& o, RunManifest& m) {
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  std::vector<fs::path> ins{o.in};
  if (!o.prototypes.empty()) ins.push_back(o.prototypes);
  check_distinct(ins, {o.out, o.out_manifest});
  o.config.validate();
  m.add_input("features", o.in);
  const Dataset data = read_feature_file(o.in);
  const auto protos = load_prototypes(o.prototypes, data, m);
  const auto pairs = modify(data, protos, o.config);
  write_feature_file(modified_dataset(data, pairs), o.out);
  m.add("modifier.lambda", o.config.pull_strength);
  m.add("modifier.residual_std", o.config.residual_std);
  m.add("modifier.seed", o.config.seed);
  m.add_output("features", o.out);
  m.write(o.out_manifest);
}

struct SelectOpts {
  std::string original, modified, prototypes, out_refined, out_manifest, out_selection;
  std::optional<double> lambda;
  double residual_std = 0.0;
  std::uint64_t seed = 0;
  double tau = 0.0;
};

void cmd_select(SelectOpts& o, RunManifest& m) {
  if (o.modified.empty() == !o.lambda.has_value()) {
    throw UsageError("select needs exactly one of --modified or --lambda");
  }
  if (!o.prototypes.empty() && !o.lambda) throw UsageError("--prototypes only applies with --lambda");
  if (o.out_manifest.empty()) o.out_manifest = o.out_refined + ".manifest";
  std::vector<fs::path> ins{o.original};
  if (!o.modified.empty()) ins.push_back(o.modified);
  if (!o.prototypes.empty()) ins.push_back(o.prototypes);
  std::vector<fs::path> outs{o.out_refined, o.out_manifest};
  if (!o.out_selection.empty()) outs.push_back(o.out_selection);
  check_distinct(ins, outs);

  m.add_input("original", o.original);
  const Dataset original = read_feature_file(o.original);
  std::optional<PipelineRun> run;
  if (o.lambda) {
    ModifierConfig config{*o.lambda, o.residual_std, o.seed};
    config.validate();
    const auto protos = load_prototypes(o.prototypes, original, m);
    run.emplace(run_pipeline(original, protos, config, o.tau));
  } else {
    m.add_input("modified", o.modified);
    run.emplace(run_pipeline(original, read_feature_file(o.modified), o.tau));
  }
  m.merge(run->manifest, "select");
  write_feature_file(run->selection.refined, o.out_refined);
  m.add_output("refined", o.out_refined);
  if (!o.out_selection.empty()) {
    write_text(o.out_selection, format_selection_csv(run->selection, original));
    m.add_output("selection", o.out_selection);
  }
  m.write(o.out_manifest);
}

struct SweepOpts {
  std::string original, modified, truth, out, out_histogram, out_manifest;
  std::size_t grid_points = 101;
  std::size_t bins = 40;
};

void cmd_sweep(SweepOpts& o, RunManifest& m) {
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  std::vector<fs::path> ins{o.original, o.modified};
  if (!o.truth.empty()) ins.push_back(o.truth);
  std::vector<fs::path> outs{o.out, o.out_manifest};
  if (!o.out_histogram.empty()) outs.push_back(o.out_histogram);
  check_distinct(ins, outs);

  m.add_input("original", o.original);
  m.add_input("modified", o.modified);
  const Dataset original = read_feature_file(o.original);
  const auto pairs = pair_by_id(original, read_feature_file(o.modified));
  std::optional<Dataset> truth;
  if (!o.truth.empty()) {
    m.add_input("truth", o.truth);
    truth.emplace(read_feature_file(o.truth));
  } else {
    truth.emplace(original);
  }
  if (!truth->with_truth()) throw DomainError("sweep needs true labels (pass --truth or an original with truth=1)");
  const auto grid = uniform_grid(o.grid_points);
  write_text(o.out, format_sweep_csv(sweep(pairs, grid, *truth)));
  m.add("sweep.grid_points", static_cast<std::uint64_t>(o.grid_points));
  m.add_output("sweep", o.out);
  if (!o.out_histogram.empty()) {
    write_text(o.out_histogram, format_similarity_histogram(split_similarities(pairs, *truth), o.bins));
    m.add("sweep.bins", static_cast<std::uint64_t>(o.bins));
    m.add_output("histogram", o.out_histogram);
  }
  m.write(o.out_manifest);
}

struct TheoryOpts {
  std::string spec, out, out_manifest;
};

void cmd_validate_theory(TheoryOpts& o, RunManifest& m) {
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  check_distinct({o.spec}, {o.out, o.out_manifest});
  m.add_input("spec", o.spec);
  const Config c = Config::read(o.spec);
  const TheorySpec spec = load_theory(c);
  c.reject_unused();
  write_text(o.out, format_theory_report(run_theory_suite(spec)));
  m.add_output("report", o.out);
  m.write(o.out_manifest);
}

struct TrainOpts {
  std::string train, test, config, out, out_summary, out_manifest;
};

void cmd_train(TrainOpts& o, RunManifest& m) {
  if (o.out_summary.empty()) o.out_summary = o.out + ".summary";
  if (o.out_manifest.empty()) o.out_manifest = o.out + ".manifest";
  check_distinct({o.train, o.test, o.config}, {o.out, o.out_summary, o.out_manifest});
  m.add_input("train", o.train);
  m.add_input("test", o.test);
  m.add_input("config", o.config);
  const Config c = Config::read(o.config);
  const TrainConfig config = load_train(c);
  c.reject_unused();
  const TrainResult r = train_classifier(read_feature_file(o.train), read_feature_file(o.test), config);
  write_text(o.out, format_loss_csv(r.report));
  write_text(o.out_summary, format_eval_summary(r.report));
  m.add_output("losses", o.out);
  m.add_output("summary", o.out_summary);
  m.write(o.out_manifest);
}

struct ReplayOpts {
  std::string manifest;
};

int cmd_replay(const ReplayOpts& o, std::ostream& out, std::ostream& err) {
  const RunManifest recorded = RunManifest::read(o.manifest);
  const auto args = recorded.get_all("argv");
  if (args.empty()) throw DomainError(o.manifest + ": manifest records no arguments");
  if (args.front() == "replay") throw DomainError("refusing to replay a replay");
  const int code = run_cli(args, out, err);
  if (code != 0) return code;

  std::size_t checked = 0, mismatched = 0;
  for (const auto& [key, value] : recorded.entries()) {
    constexpr std::string_view prefix = "output.";
    constexpr std::string_view suffix = ".sha256";
    if (key.rfind(prefix, 0) != 0 || key.size() <= suffix.size() ||
        key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const auto path = recorded.get(key.substr(0, key.size() - suffix.size()));
    if (!path) throw DomainError(o.manifest + ": " + key + " has no matching path entry");
    const std::string actual = sha256_file(*path);
    ++checked;
    if (actual == value) {
      out << "ok " << *path << "\n";
    } else {
      ++mismatched;
      out << "MISMATCH " << *path << " expected " << value << " got " << actual << "\n";
    }
  }
  out << checked - mismatched << "/" << checked << " outputs reproduced\n";
  return mismatched == 0 ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EchoAlign noisy-label data curation toolkit", "echoalign"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Synthetic world: feature file plus prototype file");
  g->add_option("--classes", gen.spec.num_classes, "number of classes C")->capture_default_str();
  g->add_option("--dim", gen.spec.dim, "feature dimension D")->capture_default_str();
  g->add_option("--per-class", gen.spec.samples_per_class, "instances per class")->capture_default_str();
  g->add_option("--sep", gen.spec.prototype_separation, "minimum prototype distance")->capture_default_str();
  g->add_option("--std", gen.spec.intra_class_std, "intra-class noise std")->capture_default_str();
  g->add_option("--seed", gen.spec.seed)->required();
  g->add_option("--out", gen.out, "feature file")->required();
  g->add_option("--out-prototypes", gen.out_prototypes, "prototype file (default <out>.prototypes)");
  g->add_option("--out-test", gen.out_test, "held-out test set drawn from the same prototypes");
  g->add_option("--out-manifest", gen.out_manifest, "default <out>.manifest");

  CorruptOpts cor;
  auto* c = app.add_subcommand("corrupt", "Inject label noise");
  c->add_option("--in", cor.in)->required();
  c->add_option("--family", cor.family, "symmetric | pairflip | idn")->required();
  c->add_option("--rate", cor.rate)->required();
  c->add_option("--seed", cor.seed)->required();
  c->add_option("--idn-std", cor.idn_std, "per-instance flip-rate std (idn)")->capture_default_str();
  c->add_option("--out", cor.out)->required();
  c->add_option("--out-manifest", cor.out_manifest, "default <out>.manifest");

  ModifyOpts mod;
  auto* md = app.add_subcommand("modify", "Pull features toward their label prototype");
  md->add_option("--in", mod.in)->required();
  md->add_option("--prototypes", mod.prototypes, "prototype file (default: noisy-label class centroids)");
  md->add_option("--lambda", mod.config.pull_strength)->capture_default_str();
  md->add_option("--residual-std", mod.config.residual_std)->capture_default_str();
  md->add_option("--seed", mod.config.seed)->required();
  md->add_option("--out", mod.out)->required();
  md->add_option("--out-manifest", mod.out_manifest, "default <out>.manifest");

  SelectOpts sel;
  auto* s = app.add_subcommand("select", "Two-part selection at a similarity threshold");
  s->add_option("--original", sel.original)->required();
  s->add_option("--modified", sel.modified, "precomputed modified features");
  s->add_option("--lambda", sel.lambda, "modify in-process with this pull strength");
  s->add_option("--prototypes", sel.prototypes, "with --lambda (default: class centroids)");
  s->add_option("--residual-std", sel.residual_std, "with --lambda")->capture_default_str();
  s->add_option("--seed", sel.seed, "with --lambda")->capture_default_str();
  s->add_option("--tau", sel.tau)->required();
  s->add_option("--out-refined", sel.out_refined)->required();
  s->add_option("--out-manifest", sel.out_manifest, "default <out-refined>.manifest");
  s->add_option("--out-selection", sel.out_selection, "id,part,label CSV");

  SweepOpts sw;
  auto* w = app.add_subcommand("sweep", "Part-1 size and clean fraction over a threshold grid");
  w->add_option("--original", sw.original)->required();
  w->add_option("--modified", sw.modified)->required();
  w->add_option("--truth", sw.truth, "file with true labels (default: --original)");
  w->add_option("--grid-points", sw.grid_points)->capture_default_str()->check(CLI::PositiveNumber);
  w->add_option("--out", sw.out)->required();
  w->add_option("--out-histogram", sw.out_histogram, "clean/noisy similarity histogram CSV");
  w->add_option("--bins", sw.bins)->capture_default_str()->check(CLI::PositiveNumber);
  w->add_option("--out-manifest", sw.out_manifest, "default <out>.manifest");

  TheoryOpts th;
  auto* t = app.add_subcommand("validate-theory", "Run the theory measurements on a config");
  t->add_option("--spec", th.spec)->required();
  t->add_option("--out", th.out)->required();
  t->add_option("--out-manifest", th.out_manifest, "default <out>.manifest");

  TrainOpts tr;
  auto* r = app.add_subcommand("train", "Train a softmax classifier and report losses");
  r->add_option("--train", tr.train)->required();
  r->add_option("--test", tr.test)->required();
  r->add_option("--config", tr.config)->required();
  r->add_option("--out", tr.out, "per-epoch loss CSV")->required();
  r->add_option("--out-summary", tr.out_summary, "default <out>.summary");
  r->add_option("--out-manifest", tr.out_manifest, "default <out>.manifest");

  ReplayOpts rp;
  auto* p = app.add_subcommand("replay", "Re-run a manifest and verify output checksums");
  p->add_option("--manifest", rp.manifest)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (name == "replay") return cmd_replay(rp, out, err);
    RunManifest m = start_manifest(name, args);
    if (name == "generate") cmd_generate(gen, m);
    else if (name == "corrupt") cmd_corrupt(cor, m);
    else if (name == "modify") cmd_modify(mod, m);
    else if (name == "select") cmd_select(sel, m);
    else if (name == "sweep") cmd_sweep(sw, m);
    else if (name == "validate-theory") cmd_validate_theory(th, m);
    else if (name == "train") cmd_train(tr, m);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << chosen->help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace echoalign
