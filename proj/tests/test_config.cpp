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

#include "asrkit/config.hpp"
#include "testutil.hpp"

using namespace asrkit;
using testutil::TempDir;
using testutil::write_text;

TEST_CASE("typed getters parse strictly and fall back when absent") {
  Config c;
  c.set("a.int", "42");
  c.set("a.dbl", "0.125");
  c.set("a.flag", "true");
  c.set("a.off", "false");
  c.set("a.str", "hello");
  CHECK(c.get_int("a.int", 0) == 42);
  CHECK(c.get_double("a.dbl", 0) == doctest::Approx(0.125));
  CHECK(c.get_bool("a.flag", false));
  CHECK(!c.get_bool("a.off", true));
  CHECK(c.get_string("a.str", "") == "hello");
  CHECK(c.get_int("a.missing", 7) == 7);
  CHECK(c.get_string("a.gone", "dflt") == "dflt");

  Config bad;
  bad.set("x.k", "12abc");
  CHECK_THROWS_AS(bad.get_int("x.k", 0), DataError);
  bad.set("x.d", "1.5.2");
  CHECK_THROWS_AS(bad.get_double("x.d", 0), DataError);
  bad.set("x.b", "yes please");
  CHECK_THROWS_AS(bad.get_bool("x.b", false), DataError);
}

TEST_CASE("config file parsing: sections, comments, whitespace") {
  TempDir dir;
  const std::string path = dir.file("a.conf");
  write_text(path,
             "# top comment\n"
             "[frontend]\n"
             "num_cepstra = 16   # trailing comment\n"
             "\n"
             "[decoder]\n"
             "beam = 200\n"
             "lm_scale=12.0\n");
  Config c = load_config(path);
  CHECK(c.get_int("frontend.num_cepstra", 0) == 16);
  CHECK(c.get_int("decoder.beam", 0) == 200);
  CHECK(c.get_double("decoder.lm_scale", 0) == doctest::Approx(12.0));
  CHECK_NOTHROW(c.reject_unknown_keys());
}

TEST_CASE("malformed config lines raise line-numbered errors") {
  TempDir dir;
  const std::string path = dir.file("bad.conf");
  write_text(path, "[s]\nkey_without_value\n");
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains(":2"), DataError);
  CHECK_THROWS_AS(load_config(dir.file("nonexistent.conf")), DataError);
}

TEST_CASE("command-line overrides beat file values") {
  TempDir dir;
  const std::string path = dir.file("a.conf");
  write_text(path, "[decoder]\nbeam = 200\n");
  Config c = load_config(path);
  apply_override(c, "decoder.beam=64");
  apply_override(c, "decoder.lm_scale=9");
  CHECK(c.get_int("decoder.beam", 0) == 64);
  CHECK(c.get_double("decoder.lm_scale", 0) == doctest::Approx(9));
  CHECK_THROWS_AS(apply_override(c, "no-equals-sign"), DataError);
}

TEST_CASE("unknown keys are rejected, scoped to sections") {
  Config c;
  c.set("frontend.num_cepstra", "16");
  c.set("decoder.beam", "200");
  c.get_int("frontend.num_cepstra", 0);

  // full check sees the untouched decoder key
  CHECK_THROWS_WITH_AS(c.reject_unknown_keys(),
                       doctest::Contains("decoder.beam"), DataError);
  // scoped to frontend, the decoder key is someone else's business
  CHECK_NOTHROW(c.reject_unknown_keys({"frontend"}));
  CHECK_THROWS_AS(c.reject_unknown_keys({"decoder"}), DataError);
  c.get_int("decoder.beam", 0);
  CHECK_NOTHROW(c.reject_unknown_keys());
}

TEST_CASE("config round trip and content hash") {
  TempDir dir;
  Config c;
  c.set("b.two", "2");
  c.set("a.one", "1");
  const std::string path = dir.file("dump.conf");
  save_config(c, path);
  Config back = load_config(path);
  CHECK(back.entries() == c.entries());
  CHECK(back.content_hash() == c.content_hash());

  Config other = back;
  apply_override(other, "a.one=3");
  CHECK(other.content_hash() != c.content_hash());
}

TEST_CASE("step manifests make reruns idempotent") {
  TempDir dir;
  const std::string in1 = dir.file("in1.txt");
  const std::string out1 = dir.file("out1.txt");
  write_text(in1, "input data\n");
  write_text(out1, "output data\n");

  Config c;
  c.set("step.param", "5");
  StepManifest m = make_manifest("demo", {in1}, c, {out1});
  const std::string mpath = dir.file("out1.txt.step");
  save_manifest(m, mpath);

  StepManifest loaded = load_manifest_file(mpath);
  CHECK(loaded.step_name == "demo");
  CHECK(loaded.config_hash == m.config_hash);
  CHECK(loaded.input_hashes == m.input_hashes);
  CHECK(loaded.outputs == m.outputs);

  // unchanged: up to date
  CHECK(step_up_to_date(mpath, make_manifest("demo", {in1}, c, {out1})));
  // input content changed: stale
  write_text(in1, "different input\n");
  CHECK(!step_up_to_date(mpath, make_manifest("demo", {in1}, c, {out1})));
  write_text(in1, "input data\n");
  CHECK(step_up_to_date(mpath, make_manifest("demo", {in1}, c, {out1})));
  // config changed: stale
  Config c2 = c;
  apply_override(c2, "step.param=6");
  CHECK(!step_up_to_date(mpath, make_manifest("demo", {in1}, c2, {out1})));
  // output missing: stale
  std::filesystem::remove(out1);
  CHECK(!step_up_to_date(mpath, make_manifest("demo", {in1}, c, {out1})));
  // manifest missing: stale
  CHECK(!step_up_to_date(dir.file("nope.step"),
                         make_manifest("demo", {in1}, c, {out1})));
}

TEST_CASE("hash_file is content addressed") {
  TempDir dir;
  const std::string a = dir.file("a");
  const std::string b = dir.file("b");
  write_text(a, "same bytes");
  write_text(b, "same bytes");
  CHECK(hash_file(a) == hash_file(b));
  write_text(b, "other bytes");
  CHECK(hash_file(a) != hash_file(b));
  CHECK_THROWS_AS(hash_file(dir.file("missing")), DataError);
}
