#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "echoalign/cli.hpp"
#include "echoalign/dataset.hpp"
#include "echoalign/manifest.hpp"

using namespace echoalign;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string body(const std::string& feature_text) { return feature_text.substr(feature_text.find('\n')); }

// Fresh scratch directory with a small generated world in it.
struct Workspace {
  fs::path dir;
  std::string features, protos, test;

  explicit Workspace(const std::string& name) {
    dir = fs::temp_directory_path() / ("echoalign-test-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    features = path("world.txt");
    protos = path("world.txt.prototypes");
    test = path("test.txt");
    const Run r = cli({"generate", "--classes", "4", "--dim", "8", "--per-class", "30", "--seed", "3", "--out",
                       features, "--out-test", test});
    REQUIRE(r.code == 0);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1 with help on stderr") {
  Run r = cli({});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);

  r = cli({"corrupt", "--in", "x.txt", "--family", "symmetric", "--seed", "1", "--out", "y.txt"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--rate") != std::string::npos);
  CHECK(r.out.empty());

  r = cli({"frobnicate"});
  CHECK(r.code == 1);
}

TEST_CASE("help and version exit 0") {
  Run r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("select") != std::string::npos);
  r = cli({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(std::string(kToolVersion)) != std::string::npos);
}

TEST_CASE("generate writes features, prototypes, test split and manifest") {
  Workspace w("generate");
  CHECK(read_feature_file(w.features).size() == 120);
  CHECK(read_feature_file(w.protos).size() == 4);
  CHECK(read_feature_file(w.test).size() == 120);
  const RunManifest m = RunManifest::read(w.features + ".manifest");
  CHECK(m.get("subcommand") == "generate");
  CHECK(m.get("output.features.sha256") == sha256_file(w.features));
  CHECK(m.get("world.seed") == "3");
}

TEST_CASE("bad data exits 2") {
  Workspace w("baddata");
  std::ofstream(w.path("junk.txt")) << "echoalign-features v1 C=2 D=1 truth=0\n0,0,oops\n";
  Run r = cli({"corrupt", "--in", w.path("junk.txt"), "--family", "symmetric", "--rate", "0.2", "--seed", "1",
               "--out", w.path("o.txt")});
  CHECK(r.code == 2);
  CHECK(r.err.find(":2:") != std::string::npos);

  r = cli({"corrupt", "--in", w.path("missing.txt"), "--family", "symmetric", "--rate", "0.2", "--seed", "1",
           "--out", w.path("o.txt")});
  CHECK(r.code == 2);

  r = cli({"corrupt", "--in", w.features, "--family", "symmetric", "--rate", "1.5", "--seed", "1", "--out",
           w.path("o.txt")});
  CHECK(r.code == 2);
}

TEST_CASE("corrupt at rate 0 only changes the provenance") {
  Workspace w("rate0");
  const Run r = cli({"corrupt", "--in", w.features, "--family", "pairflip", "--rate", "0", "--seed", "1", "--out",
                     w.path("noisy.txt")});
  REQUIRE(r.code == 0);
  const std::string a = slurp(w.features), b = slurp(w.path("noisy.txt"));
  CHECK(a != b);
  CHECK(body(a) == body(b));
}

TEST_CASE("select with tau -1 reproduces the input") {
  Workspace w("tau");
  REQUIRE(cli({"corrupt", "--in", w.features, "--family", "symmetric", "--rate", "0.3", "--seed", "2", "--out",
               w.path("noisy.txt")})
              .code == 0);
  const Run r = cli({"select", "--original", w.path("noisy.txt"), "--lambda", "0.6", "--prototypes", w.protos,
                     "--seed", "2", "--tau", "-1", "--out-refined", w.path("refined.txt"), "--out-selection",
                     w.path("sel.csv")});
  REQUIRE(r.code == 0);
  CHECK(slurp(w.path("refined.txt")) == slurp(w.path("noisy.txt")));
  CHECK(slurp(w.path("sel.csv")).find(",modified,") == std::string::npos);
}

TEST_CASE("modify falls back to class centroids") {
  Workspace w("centroid");
  const Run r = cli({"modify", "--in", w.features, "--lambda", "1", "--seed", "1", "--out", w.path("mod.txt")});
  REQUIRE(r.code == 0);
  const RunManifest m = RunManifest::read(w.path("mod.txt.manifest"));
  CHECK(m.get("prototypes.source") == "class_centroids");
  const Dataset mod = read_feature_file(w.path("mod.txt"));
  // full pull: every instance of a class lands on the same point
  CHECK(mod[0].features == mod[1].features);
  CHECK(mod[0].features != mod[mod.size() - 1].features);
}

TEST_CASE("select flag combinations") {
  Workspace w("combo");
  const std::vector<std::string> base{"select", "--original", w.features, "--tau", "0.4", "--out-refined",
                                      w.path("r.txt")};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };
  CHECK(with({}).code == 1);
  CHECK(with({"--lambda", "0.5", "--modified", w.features}).code == 1);
  CHECK(with({"--modified", w.features, "--prototypes", w.protos}).code == 1);
}

TEST_CASE("outputs may not overwrite inputs or each other") {
  Workspace w("overwrite");
  const std::string before = slurp(w.features);
  Run r = cli({"corrupt", "--in", w.features, "--family", "symmetric", "--rate", "0.2", "--seed", "1", "--out",
               w.features});
  CHECK(r.code == 1);
  r = cli({"corrupt", "--in", w.features, "--family", "symmetric", "--rate", "0.2", "--seed", "1", "--out",
           (w.dir / "." / "world.txt").string()});
  CHECK(r.code == 1);
  r = cli({"corrupt", "--in", w.features, "--family", "symmetric", "--rate", "0.2", "--seed", "1", "--out",
           w.path("o.txt"), "--out-manifest", w.path("o.txt")});
  CHECK(r.code == 1);
  CHECK(slurp(w.features) == before);
}

TEST_CASE("sweep writes a curve and histogram") {
  Workspace w("sweep");
  REQUIRE(cli({"corrupt", "--in", w.features, "--family", "idn", "--rate", "0.3", "--seed", "2", "--out",
               w.path("noisy.txt")})
              .code == 0);
  REQUIRE(cli({"modify", "--in", w.path("noisy.txt"), "--prototypes", w.protos, "--seed", "2", "--out",
               w.path("mod.txt")})
              .code == 0);
  Run r = cli({"sweep", "--original", w.path("noisy.txt"), "--modified", w.path("mod.txt"), "--grid-points", "11",
               "--out", w.path("sweep.csv"), "--out-histogram", w.path("hist.csv"), "--bins", "4"});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(w.path("sweep.csv"));
  CHECK(csv.rfind("tau,num_selected,clean_fraction\n0,120,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
  const std::string hist = slurp(w.path("hist.csv"));
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 5);

  // an original without truth needs --truth
  const Dataset noisy = read_feature_file(w.path("noisy.txt"));
  std::vector<LabeledInstance> rows(noisy.instances().begin(), noisy.instances().end());
  for (auto& row : rows) row.true_label.reset();
  write_feature_file(Dataset(noisy.num_classes(), noisy.dim(), false, rows), w.path("blind.txt"));
  r = cli({"sweep", "--original", w.path("blind.txt"), "--modified", w.path("mod.txt"), "--out",
           w.path("s2.csv")});
  CHECK(r.code == 2);
  r = cli({"sweep", "--original", w.path("blind.txt"), "--modified", w.path("mod.txt"), "--truth",
           w.path("noisy.txt"), "--out", w.path("s2.csv")});
  CHECK(r.code == 0);
  // same truth, default grid: matches a rerun on the labelled original
  REQUIRE(cli({"sweep", "--original", w.path("noisy.txt"), "--modified", w.path("mod.txt"), "--out",
               w.path("s3.csv")})
              .code == 0);
  CHECK(slurp(w.path("s2.csv")) == slurp(w.path("s3.csv")));
}

TEST_CASE("train writes losses and summary") {
  Workspace w("train");
  std::ofstream(w.path("t.cfg")) << "train.epochs = 3\ntrain.decay_epochs =\ntrain.batch = 32\ntrain.seed = 1\n";
  Run r = cli({"train", "--train", w.features, "--test", w.test, "--config", w.path("t.cfg"), "--out",
               w.path("loss.csv")});
  REQUIRE(r.code == 0);
  CHECK(slurp(w.path("loss.csv")).rfind("epoch,train_loss,test_loss\n0,", 0) == 0);
  CHECK(slurp(w.path("loss.csv.summary")).find("epochs=3\n") != std::string::npos);

  std::ofstream(w.path("typo.cfg")) << "train.epochs = 3\ntrain.decay_epochs =\ntrain.bacth = 32\n";
  r = cli({"train", "--train", w.features, "--test", w.test, "--config", w.path("typo.cfg"), "--out",
           w.path("loss2.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find(":3:") != std::string::npos);
}

TEST_CASE("replay reproduces outputs and detects tampering") {
  Workspace w("replay");
  REQUIRE(cli({"select", "--original", w.features, "--lambda", "0.6", "--prototypes", w.protos, "--seed", "4",
               "--residual-std", "0.02", "--tau", "0.9", "--out-refined", w.path("r.txt"), "--out-selection",
               w.path("s.csv")})
              .code == 0);
  const std::string mf = w.path("r.txt.manifest");
  Run r = cli({"replay", "--manifest", mf});
  CHECK(r.code == 0);
  CHECK(r.out.find("2/2 outputs reproduced") != std::string::npos);

  // Alter a recorded checksum; the rerun no longer matches it.
  std::string text = slurp(mf);
  const auto pos = text.find("output.selection.sha256=") + std::string("output.selection.sha256=").size();
  text[pos] = text[pos] == '0' ? '1' : '0';
  std::ofstream(w.path("tampered.manifest"), std::ios::binary) << text;
  r = cli({"replay", "--manifest", w.path("tampered.manifest")});
  CHECK(r.code == 2);
  CHECK(r.out.find("MISMATCH") != std::string::npos);
  CHECK(r.out.find("1/2 outputs reproduced") != std::string::npos);

  std::ofstream(w.path("loop.manifest")) << "echoalign-manifest v1\nargv=replay\nargv=--manifest\nargv=x\n";
  CHECK(cli({"replay", "--manifest", w.path("loop.manifest")}).code == 2);
}

TEST_CASE("the installed binary behaves like run_cli") {
  const char* exe = std::getenv("ECHOALIGN_CLI");
  if (!exe) {
    MESSAGE("ECHOALIGN_CLI not set; skipping");
    return;
  }
  Workspace w("binary");
  const std::string q = "\"" + std::string(exe) + "\"";
  auto status = [](const std::string& cmd) {
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string quiet = " >/dev/null 2>&1";
  CHECK(status(q + " --help" + quiet) == 0);
  CHECK(status(q + " generate --seed 1" + quiet) == 1);
  CHECK(status(q + " corrupt --in " + w.path("nope.txt") + " --family idn --rate 0.1 --seed 1 --out " +
               w.path("o.txt") + quiet) == 2);
  CHECK(status(q + " generate --classes 4 --dim 8 --per-class 30 --seed 3 --out " + w.path("bin.txt") + quiet) == 0);
  CHECK(slurp(w.path("bin.txt")) == slurp(w.features));
}
