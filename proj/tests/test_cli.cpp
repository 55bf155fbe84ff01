#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gait3d/image_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

CliResult cli(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path();
  const std::string pid = std::to_string(::getpid());
  const fs::path out = tmp / ("gait3d_cli_stdout_" + pid + ".txt");
  const fs::path err = tmp / ("gait3d_cli_stderr_" + pid + ".txt");
  const std::string cmd = std::string(GAIT3D_CLI_PATH) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

// Token following `key` in whitespace-separated output.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string k, v;
  while (in >> k >> v)
    if (k == key) return v;
  return "";
}

class CliWorkflow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("gait3d_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    const CliResult r = cli("synth --subjects 2 --sequences 3 --frames 16 --seed 5 --out " +
                      (root_ / "data").string());
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string small() {
    return " --clip-len 10 --stride 3 --sil-height 32 --sil-width 32 --threads 2";
  }

  static inline fs::path root_;
};

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("bogus").code, 2);
  const CliResult missing = cli("synth --subjects 3");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("--out"), std::string::npos);
  EXPECT_NE(missing.err.find("Usage"), std::string::npos);
  EXPECT_EQ(cli("synth --out /tmp/x --subjects three").code, 2);
  EXPECT_EQ(cli("synth --out /tmp/x --no-such-flag 1").code, 2);
  EXPECT_EQ(cli("train --help").code, 0);
}

TEST(Cli, GenerationErrorsAreRuntimeFailures) {
  const fs::path out = fs::temp_directory_path() / "gait3d_cli_bad";
  EXPECT_EQ(cli("synth --subjects 1 --out " + out.string()).code, 2);
  EXPECT_EQ(cli("synth --frame-height 40 --out " + out.string()).code, 1);
  fs::remove_all(out);
}

TEST_F(CliWorkflow, SynthIsDeterministic) {
  const fs::path again = root_ / "again";
  ASSERT_EQ(cli("synth --subjects 2 --sequences 3 --frames 16 --seed 5 --out " + again.string()).code, 0);
  EXPECT_EQ(slurp(again / "manifest.tsv"), slurp(root_ / "data" / "manifest.tsv"));
  for (const auto& e : fs::recursive_directory_iterator(root_ / "data")) {
    if (!e.is_regular_file() || e.path().extension() != ".pgm") continue;
    const auto rel = fs::relative(e.path(), root_ / "data");
    ASSERT_EQ(slurp(e.path()), slurp(again / rel)) << rel;
  }
}

TEST_F(CliWorkflow, StagesWritesFiveFilesPerFrame) {
  const fs::path out = root_ / "stages";
  const CliResult r = cli("stages --sequence " + (root_ / "data" / "001" / "NM-01" / "090").string() +
                    " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  int files = 0;
  for (const auto& e : fs::directory_iterator(out)) files += e.path().extension() == ".pgm";
  EXPECT_EQ(files, 5 * 15);
  const auto sil = gait3d::read_mask_pgm(out / "0003_sil.pgm");
  const auto skel = gait3d::read_mask_pgm(out / "0003_skel.pgm");
  EXPECT_TRUE(gait3d::is_subset(skel, sil));
  EXPECT_TRUE(fs::exists(out / "config.txt"));

  EXPECT_EQ(cli("stages --sequence " + (root_ / "nowhere").string() + " --out " + out.string()).code, 1);
}

TEST_F(CliWorkflow, TrainEvalPredict) {
  const fs::path out = root_ / "train";
  const std::string manifest = (root_ / "data" / "manifest.tsv").string();
  const CliResult t = cli("train --manifest " + manifest + " --out " + out.string() + " --epochs 3" + small());
  ASSERT_EQ(t.code, 0) << t.err;
  ASSERT_TRUE(fs::exists(out / "model.g3dc"));
  const std::string csv = slurp(out / "metrics.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(slurp(out / "config.txt").find("epochs = 3"), std::string::npos);

  // The final validation numbers come back exactly from a separate eval.
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  std::vector<std::string> cols;
  std::stringstream ss(last);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_EQ(cols.size(), 6u);
  const CliResult e = cli("eval --config " + (out / "config.txt").string() + " --model " +
                    (out / "model.g3dc").string());
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(field(e.out, "loss"), cols[4]);
  EXPECT_EQ(field(e.out, "accuracy") + "\n", cols[5]);

  const CliResult p = cli("predict --model " + (out / "model.g3dc").string() + " --sequence " +
                    (root_ / "data" / "002" / "NM-02" / "090").string() +
                    " --start 2 --sil-height 32 --sil-width 32");
  ASSERT_EQ(p.code, 0) << p.err;
  const std::string id = field(p.out, "subject_id");
  EXPECT_TRUE(id == "1" || id == "2") << p.out;
  std::istringstream probs(p.out.substr(p.out.find("probabilities") + 13));
  double sum = 0, v;
  int n = 0;
  while (probs >> v) sum += v, ++n;
  EXPECT_EQ(n, 2);
  EXPECT_NEAR(sum, 1.0, 1e-9);

  EXPECT_EQ(cli("predict --model " + (out / "model.g3dc").string() + " --sequence " +
                (root_ / "data" / "002" / "NM-02" / "090").string() +
                " --start 40 --sil-height 32 --sil-width 32").code,
            2);
  EXPECT_EQ(cli("eval --manifest " + manifest + " --model " + (out / "model.g3dc").string() +
                " --sil-height 48").code,
            1);
}

TEST_F(CliWorkflow, CorruptModelIsRuntimeFailure) {
  const fs::path bad = root_ / "bad.g3dc";
  std::ofstream(bad) << "G3DC garbage";
  const CliResult r = cli("predict --model " + bad.string() + " --sequence " +
                    (root_ / "data" / "001" / "NM-01" / "090").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("offset"), std::string::npos) << r.err;
}

TEST_F(CliWorkflow, ConfigFileAndFlagPrecedence) {
  const fs::path cfg = root_ / "settings.txt";
  std::ofstream(cfg) << "subjects = 2\nsequences = 2\nframes = 4\nepochs = 7\n";
  const fs::path out = root_ / "from_config";
  ASSERT_EQ(cli("synth --config " + cfg.string() + " --frames 5 --out " + out.string()).code, 0);
  const std::string echoed = slurp(out / "config.txt");
  EXPECT_NE(echoed.find("frames = 5"), std::string::npos) << echoed;
  EXPECT_NE(echoed.find("sequences = 2"), std::string::npos) << echoed;
  const std::string manifest = slurp(out / "manifest.tsv");
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 5);

  std::ofstream(cfg) << "subjectz = 2\n";
  EXPECT_EQ(cli("synth --config " + cfg.string() + " --out " + out.string()).code, 2);
}
