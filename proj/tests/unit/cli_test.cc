// Copyright 2026 The SCIC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "test_util.h"

namespace {

using scic::testing::ReadText;
using scic::testing::TempDir;

struct Result {
  int code = -1;
  std::string out;
};

Result Cli(const std::string& args, const TempDir& dir) {
  const std::string out = (dir / "stdout.txt").string();
  const std::string cmd = std::string(SCIC_CLI_PATH) + " " + args + " > " + out + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadText(out);
  return r;
}

TEST(CliTest, UsageErrorsExitWithOne) {
  TempDir dir;
  EXPECT_EQ(Cli("--help", dir).code, 0);
  EXPECT_EQ(Cli("bogus", dir).code, 1);
  EXPECT_EQ(Cli("encode --in x.png", dir).code, 1);
  EXPECT_EQ(Cli("inspect " + (dir / "missing.bin").string(), dir).code, 1);
  scic::testing::WriteFile(dir / "junk.bin", {0, 1, 2, 3, 4});
  EXPECT_EQ(Cli("inspect " + (dir / "junk.bin").string(), dir).code, 1);
}

TEST(CliTest, GlobalOptionsAfterVerb) {
  TempDir dir;
  EXPECT_EQ(Cli("dataset pools --out pools --count 1 --size 32 --workspace " + dir.path().string(),
                dir)
                .code,
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "pools"));
}

TEST(CliTest, PoolsDatasetAndEval) {
  TempDir dir;
  const std::string ws = "--workspace " + dir.path().string();
  ASSERT_EQ(Cli(ws + " dataset pools --out pools --count 3 --size 64 --seed 1", dir).code, 0);
  ASSERT_EQ(Cli(ws + " dataset build --synthetic pools/synthetic --natural pools/natural --n 4"
                     " --test 1 --seed 3 --out data --canvas 64 --min-patch 16 --max-patch 20",
                dir)
                .code,
            0);
  const Result info = Cli("inspect " + (dir / "data" / "manifest.json").string(), dir);
  EXPECT_EQ(info.code, 0);
  EXPECT_NE(info.out.find("dataset manifest"), std::string::npos);
  const auto img = (dir / "data" / "images" / "000000.png").string();
  const auto mask = (dir / "data" / "masks" / "000000.png").string();
  const Result ev =
      Cli("eval --ref " + img + " --test " + img + " --mask " + mask + " --metrics psnr,gmsd", dir);
  ASSERT_EQ(ev.code, 0) << ReadText(dir / "stderr.txt");
  const auto j = nlohmann::json::parse(ev.out);
  EXPECT_EQ(j["psnr"], 100.0);
  EXPECT_EQ(j["gmsd"], 0.0);
}

}  // namespace
