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

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "asrkit/lm.hpp"

namespace asrkit {

namespace {

// fixed 7-decimal formatting so that save -> load -> save is byte-exact
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7f", v);
  return buf;
}

}  // namespace

void save_arpa(const NgramLm& lm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write ARPA file: " + path);
  out << "\\data\\\n";
  for (int k = 1; k <= lm.order(); ++k)
    out << "ngram " << k << "=" << lm.table(k).size() << "\n";
  for (int k = 1; k <= lm.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    for (const auto& [g, e] : lm.table(k)) {
      out << fmt(e.logprob) << '\t';
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) out << ' ';
        out << g[i];
      }
      if (k < lm.order()) out << '\t' << fmt(e.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NgramLm load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ARPA file: " + path);
  std::string line;
  // skip anything before \data\ (ARPA files may carry a preamble)
  while (std::getline(in, line) && line != "\\data\\") {
  }
  if (line != "\\data\\") throw DataError(path + ": missing \\data\\ header");

  std::vector<std::size_t> counts;
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "ngram") throw DataError(path + ": bad count line: " + line);
    std::string rest;
    ss >> rest;
    auto eq = rest.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ": bad count line: " + line);
    const int order = std::stoi(rest.substr(0, eq));
    const std::size_t count = std::stoull(rest.substr(eq + 1));
    if (order != static_cast<int>(counts.size()) + 1)
      throw DataError(path + ": n-gram counts out of order");
    counts.push_back(count);
  }
  if (counts.empty()) throw DataError(path + ": no n-gram counts");
  const int order = static_cast<int>(counts.size());

  std::vector<std::map<std::vector<std::string>, NgramEntry>> tables(order);
  for (int k = 1; k <= order; ++k) {
    while (std::getline(in, line) && line.empty()) {
    }
    const std::string expect = "\\" + std::to_string(k) + "-grams:";
    if (line != expect)
      throw DataError(path + ": expected " + expect + ", got " + line);
    for (std::size_t i = 0; i < counts[k - 1]; ++i) {
      if (!std::getline(in, line))
        throw DataError(path + ": truncated " + std::to_string(k) +
                        "-gram section");
      std::istringstream ss(line);
      NgramEntry e;
      ss >> e.logprob;
      std::vector<std::string> g;
      std::string tok;
      for (int j = 0; j < k; ++j) {
        if (!(ss >> tok))
          throw DataError(path + ": short n-gram line: " + line);
        g.push_back(tok);
      }
      if (k < order && (ss >> e.backoff)) {
      }
      tables[k - 1][std::move(g)] = e;
    }
  }
  while (std::getline(in, line) && line.empty()) {
  }
  if (line != "\\end\\") throw DataError(path + ": missing \\end\\ marker");

  std::set<std::string> vocab;
  for (const auto& [g, e] : tables[0]) vocab.insert(g.front());
  NgramLm lm(order, {vocab.begin(), vocab.end()});
  for (int k = 1; k <= order; ++k) lm.table(k) = std::move(tables[k - 1]);
  return lm;
}

}  // namespace asrkit
