// Copyright (c) 2026 The emotts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "emotts/cli.hpp"

namespace emotts {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("emotts_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(std::vector<std::string> args) const {
    std::vector<std::string> full{"--corpus", (dir_ / "corpus").string(), "--run-dir", (dir_ / "run").string()};
    for (const char* kv : {"gen.per_emotion=3", "gen.max_syllables=5", "model.d_enc=16", "model.d_dec=32",
                           "model.d_prenet=16", "model.d_global=4", "model.d_utt=4", "model.d_local=4",
                           "model.conv_kernel=3", "model.conv_channels=8", "model.max_decode_steps=20",
                           "train.steps=3", "train.batch=2", "classifier.epochs=20"}) {
      full.push_back("--set");
      full.push_back(kv);
    }
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = dispatch(full, out, err);
    return {code, out.str(), err.str()};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

TEST_F(Cli, GenCorpusWritesManifest) {
  const Outcome r = run({"gen-corpus", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "corpus" / "manifest.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "corpus" / "truth.tsv"));
  EXPECT_NE(r.out.find("# seed: 4"), std::string::npos);
  EXPECT_EQ(load_manifest(dir_ / "corpus" / "manifest.tsv").size(), 21u);
}

TEST_F(Cli, MissingCorpusIsDiagnosed) {
  const Outcome r = run({"train-ranker", "--emotion", "anger"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("missing corpus"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "run" / "rankers"));
}

TEST_F(Cli, ArgumentErrors) {
  EXPECT_NE(run({"no-such-command"}).code, 0);
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"--set", "nope=1", "prepare-corpus"}).code, 0);
  EXPECT_NE(run({"--set", "train.steps", "prepare-corpus"}).code, 0);
  EXPECT_NE(run({"synthesize", "--mode", "sing"}).code, 0);
  ASSERT_EQ(run({"gen-corpus"}).code, 0);
  const Outcome r = run({"eval-mcd", "--level", "word"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("--level"), std::string::npos);
  EXPECT_NE(run({"train-ranker", "--emotion", "neutral"}).code, 0);
  EXPECT_NE(run({"train-ranker", "--emotion", "boredom"}).code, 0);
  EXPECT_NE(run({"train-tts"}).code, 0);  // no strengths yet
}

TEST_F(Cli, ConfigFileAndEnvironment) {
  const fs::path cfg = dir_ / "run.cfg";
  std::ofstream(cfg) << "# comment\nseed = 9\n\ngen.per_emotion=2\n";
  ASSERT_EQ(run({"--config", cfg.string(), "gen-corpus"}).code, 0);
  EXPECT_EQ(load_manifest(dir_ / "corpus" / "manifest.tsv").size(), 21u);  // --set wins over the file
  ::setenv(kConfigEnv, cfg.string().c_str(), 1);
  const Outcome r = run({"prepare-corpus"});
  ::unsetenv(kConfigEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("# seed: 9"), std::string::npos);
  std::ofstream(dir_ / "bad.cfg") << "seed 9\n";
  EXPECT_NE(run({"--config", (dir_ / "bad.cfg").string(), "prepare-corpus"}).code, 0);
}

TEST_F(Cli, RankerFilesAreReproducible) {
  ASSERT_EQ(run({"gen-corpus"}).code, 0);
  ASSERT_EQ(run({"train-ranker", "--emotion", "anger"}).code, 0);
  const std::string first = slurp(dir_ / "run" / "rankers" / "anger.rnk");
  ASSERT_FALSE(first.empty());
  ASSERT_EQ(run({"train-ranker", "--emotion", "anger"}).code, 0);
  EXPECT_EQ(slurp(dir_ / "run" / "rankers" / "anger.rnk"), first);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "rankers" / "anger.txt"));
}

TEST_F(Cli, SmallPipelineEndToEnd) {
  ASSERT_EQ(run({"gen-corpus", "--seed", "2"}).code, 0);
  for (std::vector<std::string> cmd : {std::vector<std::string>{"prepare-corpus"},
                                       {"train-ranker"},
                                       {"extract-strengths"},
                                       {"train-classifier"},
                                       {"train-tts"}}) {
    const Outcome r = run(cmd);
    ASSERT_EQ(r.code, 0) << cmd.front() << ": " << r.err;
  }
  EXPECT_TRUE(fs::exists(dir_ / "run" / "strength_recovery.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "model.ckpt"));
  for (const char* mode : {"transfer", "predict", "control"}) {
    const Outcome r = run({"synthesize", "--mode", mode, "--strengths", "ramp_down", "--name", mode});
    ASSERT_EQ(r.code, 0) << mode << ": " << r.err;
    const Matrix mel = read_mel(dir_ / "run" / "synth" / (std::string(mode) + ".mel"));
    EXPECT_GT(mel.rows(), 0);
    EXPECT_EQ(mel.cols(), 20);
    EXPECT_GT(fs::file_size(dir_ / "run" / "synth" / (std::string(mode) + "_f0.png")), 100u);
  }
  const Outcome mcd = run({"eval-mcd", "--level", "syllable", "--limit", "2"});
  ASSERT_EQ(mcd.code, 0) << mcd.err;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "mcd_syllable.json"));
  const Outcome plot = run({"plot-f0", "--mel", (dir_ / "run" / "synth" / "control.mel").string(), "--mel",
                        (dir_ / "run" / "synth" / "predict.mel").string(), "--out", (dir_ / "f0.png").string()});
  ASSERT_EQ(plot.code, 0) << plot.err;
  EXPECT_TRUE(fs::exists(dir_ / "f0.png"));
  const std::string manifest = slurp(dir_ / "run" / "manifest.tsv");
  EXPECT_NE(manifest.find("train-tts\tmodel.ckpt"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "train-tts.config"));
}

}  // namespace
}  // namespace emotts
