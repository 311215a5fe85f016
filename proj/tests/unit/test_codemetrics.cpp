#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "bis/codemetrics.hpp"

namespace fs = std::filesystem;
namespace code = bis::code;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Tokenizer

TEST(Tokenize, SimpleAssignment) {
  const auto ts = code::tokenize("a = b + 1");
  EXPECT_EQ(ts.n1, 2u);
  EXPECT_EQ(ts.n2, 3u);
  EXPECT_EQ(ts.operators, (std::map<std::string, std::size_t>{{"=", 1}, {"+", 1}}));
  EXPECT_EQ(ts.operands, (std::map<std::string, std::size_t>{{"a", 1}, {"b", 1}, {"1", 1}}));
}

TEST(Tokenize, EmptyAndDuplicates) {
  const auto e = code::tokenize("");
  EXPECT_EQ(e.n1, 0u);
  EXPECT_EQ(e.n2, 0u);
  const auto d = code::tokenize("x = x");
  EXPECT_EQ(d.n1, 1u);
  EXPECT_EQ(d.n2, 2u);
  EXPECT_EQ(d.operands.at("x"), 2u);
}

TEST(Tokenize, ClassificationTable) {
  // def, (), :, return, *, if, else -> operators; f, x, 2, None -> operands.
  const auto ts = code::tokenize("def f(x):\n    return x * 2 if x else None\n");
  EXPECT_EQ(ts.operators, (std::map<std::string, std::size_t>{
                              {"def", 1}, {"()", 1}, {":", 1}, {"return", 1}, {"*", 1}, {"if", 1}, {"else", 1}}));
  EXPECT_EQ(ts.operands, (std::map<std::string, std::size_t>{{"f", 1}, {"x", 3}, {"2", 1}, {"None", 1}}));
}

TEST(Tokenize, CallsBracketsStringsAndComments) {
  const auto ts = code::tokenize("print(xs[0], {'k': 1.5e3})  # done\ns = r'''a\nb''' + f\"{y}\"\n");
  EXPECT_EQ(ts.operators.at("()"), 1u);
  EXPECT_EQ(ts.operators.at("[]"), 1u);
  EXPECT_EQ(ts.operators.at("{}"), 1u);
  EXPECT_EQ(ts.operands.at("print"), 1u);
  EXPECT_EQ(ts.operands.at("1.5e3"), 1u);
  EXPECT_EQ(ts.operands.count("done"), 0u);
  EXPECT_EQ(ts.n1, ts.operators.at("()") + ts.operators.at("[]") + ts.operators.at("{}") + ts.operators.at(",") +
                       ts.operators.at(":") + ts.operators.at("=") + ts.operators.at("+"));
}

TEST(Tokenize, MultiCharOperatorsLongestMatch) {
  const auto ts = code::tokenize("a **= b // c\nd = e != f <= g >> h\nx -> y\n");
  EXPECT_EQ(ts.operators.count("**="), 1u);
  EXPECT_EQ(ts.operators.count("//"), 1u);
  EXPECT_EQ(ts.operators.count("!="), 1u);
  EXPECT_EQ(ts.operators.count("<="), 1u);
  EXPECT_EQ(ts.operators.count(">>"), 1u);
  EXPECT_EQ(ts.operators.count("->"), 1u);
}

TEST(Tokenize, ClassificationDocExamples) {
  struct Row {
    const char* code;
    std::size_t n1;
    std::size_t n2;
  };
  for (const Row& r : {Row{"a = b + 1", 2, 3}, Row{"x = x", 1, 2}, Row{"f(x)[0]", 2, 3},
                       Row{"return x if x else None", 3, 3}, Row{"y = 0x1f + 2j + f\"{z}\"", 3, 4},
                       Row{"a **= 2  # comment\n", 1, 2}}) {
    const auto ts = code::tokenize(r.code);
    EXPECT_EQ(ts.n1, r.n1) << r.code;
    EXPECT_EQ(ts.n2, r.n2) << r.code;
  }
}

TEST(Tokenize, Deterministic) {
  const std::string src = read_file(fs::path(BIS_TEST_DATA) / "cfg" / "s20_decorated_main.py");
  EXPECT_EQ(code::tokenize(src), code::tokenize(src));
}

TEST(Tokenize, LexErrorsCarryPosition) {
  try {
    code::tokenize("x = 1\ny = $\n");
    FAIL();
  } catch (const code::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 5u);
  }
  EXPECT_THROW(code::tokenize("s = 'abc\n"), code::ParseError);
  EXPECT_THROW(code::tokenize("s = '''abc\n"), code::ParseError);
  EXPECT_THROW(code::tokenize("f(1, 2\n"), code::ParseError);
  EXPECT_THROW(code::tokenize("x = 1)\n"), code::ParseError);
}

// ---------------------------------------------------------------------------
// Halstead

TEST(Halstead, ReferenceValues) {
  const auto h = code::halstead(3, 2);
  EXPECT_EQ(h.length, 5.0);
  EXPECT_NEAR(h.volume, 11.6096, 1e-3);
  EXPECT_NEAR(h.effort, 40.634, 1e-3);
  EXPECT_NEAR(h.time, 2.257, 1e-3);
  // Exact forms.
  EXPECT_DOUBLE_EQ(h.volume, 5.0 * std::log2(5.0));
  EXPECT_DOUBLE_EQ(h.effort, 3.5 * 5.0 * std::log2(5.0));
  EXPECT_DOUBLE_EQ(h.time, h.effort / 18.0);
}

TEST(Halstead, Degenerate) {
  const auto h = code::halstead(0, 0);
  EXPECT_EQ(h.length, 0.0);
  EXPECT_EQ(h.volume, 0.0);
  EXPECT_EQ(h.effort, 0.0);
  EXPECT_EQ(h.time, 0.0);
  EXPECT_EQ(code::halstead(1, 0).volume, 0.0);  // log2(1) = 0
}

TEST(Halstead, MonotoneInBothCounts) {
  for (std::size_t a = 0; a < 30; ++a) {
    for (std::size_t b = 0; b < 30; ++b) {
      const auto h = code::halstead(a, b);
      const auto ha = code::halstead(a + 1, b);
      const auto hb = code::halstead(a, b + 1);
      EXPECT_GE(ha.volume, h.volume);
      EXPECT_GE(ha.effort, h.effort);
      EXPECT_GE(ha.time, h.time);
      EXPECT_GE(hb.volume, h.volume);
      EXPECT_GE(hb.effort, h.effort);
      EXPECT_GE(hb.time, h.time);
    }
  }
}

// ---------------------------------------------------------------------------
// Cyclomatic complexity

TEST(Cyclomatic, SpecExamples) {
  EXPECT_EQ(code::cyclomatic("def f(a):\n    b = a\n    return b\n"), 1u);
  EXPECT_EQ(code::cyclomatic("def f(x):\n    if x:\n        return 1\n    else:\n        return 2\n"), 2u);
  EXPECT_EQ(code::cyclomatic("def f():\n    return 1\n\n\ndef g():\n    return 2\n"), 2u);
}

TEST(Cyclomatic, AdditiveOverRoutines) {
  const std::string a = "def a(x):\n    if x and x > 1:\n        return 1\n    return 0\n";
  const std::string b = "def b(xs):\n    for x in xs:\n        while x:\n            x -= 1\n";
  EXPECT_EQ(code::cyclomatic(a + "\n" + b), code::cyclomatic(a) + code::cyclomatic(b));
}

TEST(Cyclomatic, AtLeastOneAndDeclarativeModules) {
  EXPECT_EQ(code::cyclomatic(""), 1u);
  EXPECT_EQ(code::cyclomatic("import os\nfrom x import *\n\"\"\"doc\"\"\"\n"), 1u);
  EXPECT_EQ(code::cyclomatic("x = 1\n"), 1u);
  // Module code plus one function: two components.
  EXPECT_EQ(code::cyclomatic("def f():\n    pass\n\nf()\n"), 2u);
}

TEST(Cyclomatic, ParseErrors) {
  EXPECT_THROW(code::cyclomatic("def f(x)\n    return x\n"), code::ParseError);
  EXPECT_THROW(code::cyclomatic("if x:\nreturn 1\n"), code::ParseError);
  EXPECT_THROW(code::cyclomatic("x = 1\n    y = 2\n"), code::ParseError);
  EXPECT_THROW(code::cyclomatic("x = 1 +\n"), code::ParseError);
  EXPECT_THROW(code::cyclomatic("else:\n    pass\n"), code::ParseError);
  EXPECT_THROW(code::cyclomatic("def (x):\n    pass\n"), code::ParseError);
  EXPECT_NO_THROW(code::cyclomatic("x = (1 +\n     2)\ny = 3 \\\n    + 4\n"));
}

struct Cfg {
  std::size_t nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

Cfg read_cfg(const std::string& src) {
  Cfg cfg;
  std::istringstream in(src);
  std::string line;
  const std::regex nodes_re(R"(^# cfg-nodes:\s*(\d+))");
  const std::regex edge_re(R"((\d+)>(\d+))");
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_search(line, m, nodes_re)) {
      cfg.nodes = std::stoul(m[1]);
    } else if (line.rfind("# cfg-edges:", 0) == 0) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), edge_re); it != std::sregex_iterator(); ++it) {
        cfg.edges.emplace_back(std::stoul((*it)[1]), std::stoul((*it)[2]));
      }
    }
  }
  return cfg;
}

std::size_t components(const Cfg& cfg) {
  std::vector<std::size_t> parent(cfg.nodes + 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      x = parent[x] = parent[parent[x]];
    }
    return x;
  };
  for (auto [a, b] : cfg.edges) {
    parent[find(a)] = find(b);
  }
  std::size_t p = 0;
  for (std::size_t i = 1; i <= cfg.nodes; ++i) {
    p += find(i) == i ? 1 : 0;
  }
  return p;
}

TEST(Cyclomatic, MatchesHandBuiltCfgOnAnnotatedSnippets) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(fs::path(BIS_TEST_DATA) / "cfg")) {
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ASSERT_EQ(files.size(), 20u);
  for (const auto& f : files) {
    const std::string src = read_file(f);
    const Cfg cfg = read_cfg(src);
    ASSERT_GT(cfg.nodes, 0u) << f;
    for (auto [a, b] : cfg.edges) {
      ASSERT_TRUE(a >= 1 && a <= cfg.nodes && b >= 1 && b <= cfg.nodes) << f;
    }
    const auto e = static_cast<long>(cfg.edges.size());
    const auto n = static_cast<long>(cfg.nodes);
    const auto p = static_cast<long>(components(cfg));
    EXPECT_EQ(static_cast<long>(code::cyclomatic(src)), e - n + 2 * p) << f.filename();
  }
}

// ---------------------------------------------------------------------------
// Security score

TEST(SecurityScore, TableWeights) {
  using code::Level;
  EXPECT_EQ(code::security_score({}), 100.0);
  EXPECT_EQ(code::security_score({{Level::kHigh, Level::kHigh}}), 50.0);
  EXPECT_EQ(code::security_score({{Level::kHigh, Level::kHigh}, {Level::kHigh, Level::kHigh}, {Level::kHigh, Level::kHigh}}),
            0.0);
  EXPECT_NEAR(code::security_score({{Level::kMedium, Level::kLow}}), 94.0, 1e-12);
  EXPECT_NEAR(code::security_score({{Level::kLow, Level::kMedium}}), 94.0, 1e-12);
  EXPECT_NEAR(code::security_score({{Level::kMedium, Level::kMedium}}), 82.0, 1e-12);
}

TEST(SecurityScore, BoundedAndMonotone) {
  using code::Level;
  const Level levels[] = {Level::kHigh, Level::kMedium, Level::kLow};
  std::vector<code::Finding> fs;
  double prev = code::security_score(fs);
  for (int i = 0; i < 30; ++i) {
    fs.push_back({levels[i % 3], levels[(i / 3) % 3]});
    const double s = code::security_score(fs);
    EXPECT_LE(s, prev);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 100.0);
    prev = s;
  }
}

TEST(Findings, LoadReports) {
  const fs::path dir = fs::path(BIS_TEST_DATA) / "findings";
  EXPECT_EQ(code::security_score(code::load_findings(dir / "a_ok.json")), 100.0);
  EXPECT_EQ(code::security_score(code::load_findings(dir / "c_ok.json")), 50.0);
  EXPECT_NEAR(code::security_score(code::load_findings(dir / "medium_low.json")), 94.0, 1e-12);
  EXPECT_NEAR(code::security_score(code::load_findings(dir / "lowercase.json")), 94.0, 1e-12);
  EXPECT_THROW(code::load_findings(dir / "bad_label.json"), bis::DataError);
  EXPECT_THROW(code::load_findings(dir / "nope.json"), bis::DataError);
  EXPECT_THROW(code::parse_findings(nlohmann::json::object()), bis::DataError);
}

TEST(MetricReport, StatusContract) {
  const auto ok = code::compute_metrics("a", "def f(x):\n    return x + 1\n", std::vector<code::Finding>{});
  const auto j = code::to_json(ok);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["cc"], 1);
  EXPECT_EQ(j["ss"], 100.0);
  EXPECT_TRUE(j["halstead"].contains("volume"));

  const auto bad = code::compute_metrics("b", "def f(x)\n");
  const auto jb = code::to_json(bad);
  EXPECT_EQ(jb["status"], "parse_error");
  EXPECT_TRUE(jb["cc"].is_null());
  EXPECT_TRUE(jb["halstead"].is_null());
  EXPECT_TRUE(jb["ss"].is_null());
  EXPECT_FALSE(jb["error"].get<std::string>().empty());
}

}  // namespace
