// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "partrans/errors.hpp"
#include "partrans/metrics.hpp"
#include "support.hpp"

using namespace partrans;
using namespace partrans::testing;

namespace {

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Brute force: try every (i, j) start, extend, keep the first strictly longest.
std::size_t oracle_matches(const std::vector<std::string>& a, std::size_t alo, std::size_t ahi,
                           const std::vector<std::string>& b, std::size_t blo, std::size_t bhi) {
  std::size_t bi = alo, bj = blo, bk = 0;
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = 0;
      while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) ++k;
      if (k > bk) bi = i, bj = j, bk = k;
    }
  }
  if (bk == 0) return 0;
  return bk + oracle_matches(a, alo, bi, b, blo, bj) + oracle_matches(a, bi + bk, ahi, b, bj + bk, bhi);
}

double oracle_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  return 2.0 * static_cast<double>(oracle_matches(a, 0, a.size(), b, 0, b.size())) /
         static_cast<double>(a.size() + b.size());
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize_code("int x=a+1;") == std::vector<std::string>{"int", "x", "=", "a", "+", "1", ";"});
  CHECK(tokenize_code("a->b[i] += 0.5f;") ==
        std::vector<std::string>{"a", "-", ">", "b", "[", "i", "]", "+", "=", "0.5f", ";"});
  CHECK(tokenize_code("#pragma omp target teams") ==
        std::vector<std::string>{"#", "pragma", "omp", "target", "teams"});
  CHECK(tokenize_code("1e-5 0x1F __global__") == std::vector<std::string>{"1e", "-", "5", "0x1F", "__global__"});
  CHECK(tokenize_code("  \n\t ").empty());
}

TEST_CASE("gestalt ratio hand cases (difflib without autojunk agrees)") {
  CHECK(gestalt_ratio({"a", "b", "c"}, {"a", "c"}) == doctest::Approx(0.8));
  CHECK(gestalt_ratio(words("a b c d"), words("d c b a")) == doctest::Approx(0.25));
  CHECK(gestalt_ratio(words("x y x y x"), words("y x y")) == doctest::Approx(0.75));
  CHECK(gestalt_ratio(words("a a b b"), words("b b a a")) == doctest::Approx(0.5));
  CHECK(gestalt_ratio(words("int main ( ) { return 0 ; }"), words("int main ( void ) { return 1 ; }")) ==
        doctest::Approx(16.0 / 19.0));
  CHECK(gestalt_ratio(words("a b"), words("c d")) == 0.0);
  CHECK(gestalt_ratio({}, {}) == 1.0);
  CHECK(gestalt_ratio({"a"}, {}) == 0.0);
}

TEST_CASE("gestalt matches the brute-force oracle on random token lists") {
  auto g = rng(2024);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::string> a(g() % 21), b(g() % 21);
    const auto k = 1 + g() % alphabet.size();
    for (auto& t : a) t = alphabet[g() % k];
    for (auto& t : b) t = alphabet[g() % k];
    REQUIRE(gestalt_ratio(a, b) == oracle_ratio(a, b));
  }
}

TEST_CASE("gestalt ratio properties") {
  auto g = rng(5);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> a(g() % 30), b(g() % 30);
    for (auto& t : a) t = std::string(1, static_cast<char>('a' + g() % 5));
    for (auto& t : b) t = std::string(1, static_cast<char>('a' + g() % 5));
    const double r = gestalt_ratio(a, b);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(gestalt_ratio(a, a) == 1.0);
  }
}

TEST_CASE("sim_l hand cases") {
  CHECK(sim_l("a;\nb;\nc;", "a;\nx;") == doctest::Approx(1.0 / 3.0));
  CHECK(sim_l("  a;  \n\n\nb;", "b;\na;") == 1.0);
  CHECK(sim_l("a;\na;\nb;", "a;\nb;\nb;") == doctest::Approx(2.0 / 3.0));  // multiset
  CHECK(sim_l("", "") == 1.0);
  CHECK(sim_l("a;", "") == 0.0);
}

TEST_CASE("sim_l properties") {
  auto g = rng(99);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> lines(1 + g() % 15);
    for (auto& l : lines) l = "x" + std::to_string(g() % 6) + ";";
    auto shuffled = lines;
    std::shuffle(shuffled.begin(), shuffled.end(), g);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& l : v) s += l + "\n";
      return s;
    };
    std::vector<std::string> other(g() % 15);
    for (auto& l : other) l = "x" + std::to_string(g() % 6) + ";";

    CHECK(sim_l(join(lines), join(shuffled)) == 1.0);
    const double s = sim_l(join(lines), join(other));
    CHECK(s == sim_l(join(other), join(lines)));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("sim_t works on code text") {
  CHECK(sim_t("int a = 1;", "int a = 1;") == 1.0);
  CHECK(sim_t("int a = 1;", "int   a=1 ;") == 1.0);
  CHECK(sim_t("a b c", "a c") == doctest::Approx(0.8));
}

TEST_CASE("runtime ratio") {
  CHECK(runtime_ratio(1.2440, 1.2039) == doctest::Approx(1.03331).epsilon(1e-5));
  CHECK_THROWS_AS(runtime_ratio(1.0, 0.0), PreconditionError);
}

TEST_CASE("compare_output") {
  const std::string ref = "checksum: 5849958.750000\nTotal time: 0.004395 s\n";
  CHECK(compare_output(ref, "checksum: 5849958.750000\nTotal time: 9.1 s\n") == OutputVerdict::Match);
  CHECK(compare_output(ref, "checksum: 5849958.750001\nTotal time: 9.1 s\n") == OutputVerdict::Match);
  CHECK(compare_output(ref, "checksum: 5850958.75\n") == OutputVerdict::Mismatch);
  CHECK(compare_output(ref, "checksum:   5849958.75\n\n") == OutputVerdict::Match);
  CHECK(compare_output(ref, "sum: 5849958.75\n") == OutputVerdict::Mismatch);
  CHECK(compare_output(ref, "checksum: 5849958.75\nextra\n") == OutputVerdict::Mismatch);

  OutputCompareOptions exact;
  exact.mode = CompareMode::Exact;
  CHECK(compare_output(ref, ref, exact) == OutputVerdict::Match);
  CHECK(compare_output(ref, "checksum: 5849958.750000\nTotal time: 0.1 s\n", exact) == OutputVerdict::Mismatch);

  CHECK(parse_compare_mode("exact") == CompareMode::Exact);
  CHECK_THROWS_AS(parse_compare_mode("fuzzy"), ConfigError);
}
