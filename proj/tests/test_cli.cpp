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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "asrkit/eval.hpp"
#include "testutil.hpp"

namespace {

std::string binary() {
  const char* bin = std::getenv("ASRKIT_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

// exit code of the tool, with output discarded or captured to a file
int run(const std::string& args, const std::string& capture = "") {
  std::string cmd = binary() + " " + args;
  cmd += capture.empty() ? " >/dev/null 2>&1" : " >" + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 1);                       // a subcommand is required
  CHECK(run("no-such-subcommand") == 1);
  CHECK(run("lm-estimate") == 1);            // missing required arguments
  CHECK(run("score --bogus-flag a b") == 1);
}

TEST_CASE("data errors exit 2") {
  testutil::TempDir dir;
  CHECK(run("lm-estimate /nonexistent/text.txt " + dir.file("lm.arpa")) == 2);
  // malformed --set override (no '=')
  testutil::write_text(dir.file("t.txt"), "a b\n");
  CHECK(run("lm-estimate " + dir.file("t.txt") + " " + dir.file("lm.arpa") +
            " --set lm.order") == 2);
  // unknown config key in a checked section
  CHECK(run("curriculum-plan /nonexistent.tsv 0.5 " + dir.file("o.tsv")) ==
        2);
}

TEST_CASE("lm estimation and perplexity round trip through the CLI") {
  testutil::TempDir dir;
  testutil::write_text(dir.file("text.txt"),
                       "a b a c\nb c a\na a b\nc b\n");
  const std::string arpa = dir.file("lm.arpa");
  CHECK(run("lm-estimate " + dir.file("text.txt") + " " + arpa +
            " --set lm.order=3 --quiet") == 0);
  const std::string contents = slurp(arpa);
  CHECK(contents.find("\\3-grams:") != std::string::npos);
  CHECK(contents.find("\\4-grams:") == std::string::npos);  // override took

  const std::string log = dir.file("ppl.log");
  CHECK(run("lm-perplexity " + arpa + " " + dir.file("text.txt"), log) == 0);
  CHECK(slurp(log).find("perplexity ") != std::string::npos);
}

TEST_CASE("scoring through the CLI") {
  testutil::TempDir dir;
  asrkit::save_trn({{"u1", {"a", "b", "c"}}, {"u2", {"d"}}},
                   dir.file("ref.trn"));
  asrkit::save_trn({{"u1", {"a", "x", "c"}}, {"u2", {"d"}}},
                   dir.file("hyp.trn"));
  const std::string log = dir.file("score.log");
  CHECK(run("score " + dir.file("ref.trn") + " " + dir.file("hyp.trn"),
            log) == 0);
  CHECK(slurp(log).find("WER 25%") != std::string::npos);  // 1 of 4

  // a hypothesis is missing -> data error
  asrkit::save_trn({{"u1", {"a", "x", "c"}}}, dir.file("short.trn"));
  CHECK(run("score " + dir.file("ref.trn") + " " + dir.file("short.trn")) ==
        2);
}

TEST_CASE("curriculum planning through the CLI") {
  testutil::TempDir dir;
  asrkit::CorpusManifest manifest;
  for (int i = 0; i < 8; ++i) {
    asrkit::Utterance utt;
    utt.id = "u" + std::to_string(i);
    utt.speaker_id = "s";
    utt.audio_path = "none.wav";
    utt.transcript = {"word"};
    utt.subset = i % 2 ? asrkit::SubsetTag::kOther : asrkit::SubsetTag::kClean;
    utt.duration = 1.0;
    manifest.utterances.push_back(utt);
  }
  asrkit::save_manifest(manifest, dir.file("all.tsv"));
  CHECK(run("curriculum-plan " + dir.file("all.tsv") + " 0.1 " +
            dir.file("step1.tsv")) == 0);
  const auto selected = asrkit::load_manifest(dir.file("step1.tsv"));
  CHECK(selected.utterances.size() == 4);  // first step: clean only
  for (const auto& utt : selected.utterances)
    CHECK(utt.subset == asrkit::SubsetTag::kClean);

  CHECK(run("curriculum-plan " + dir.file("all.tsv") + " 3.0 " +
            dir.file("bad.tsv")) == 2);  // progress past the plan's total
}
