#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "test_support.hpp"
#include "tsaudit/data.hpp"
#include "tsaudit/tensor.hpp"

using namespace tsaudit;
using namespace tsaudit::data;

TEST_CASE("parse remaps labels in order of first appearance") {
  std::istringstream in("1,0.5,0.7,0.9\n-1,0.1,0.2,0.3\n1,0.4,0.5,0.6\n");
  Dataset ds = parse_ucr(in);
  REQUIRE(ds.windows.size() == 3);
  CHECK(ds.d == 3);
  CHECK(ds.num_classes == 2);
  CHECK(ds.windows[0].label == 0);  // "1" seen first
  CHECK(ds.windows[1].label == 1);  // "-1" second
  CHECK(ds.windows[2].label == 0);
  CHECK(ds.original_labels == std::vector<std::string>{"1", "-1"});
  CHECK(ds.windows[0].values == std::vector<double>{0.5, 0.7, 0.9});
}

TEST_CASE("parse reports ragged rows with the line number") {
  std::istringstream in("1,0.5,0.7,0.9\n1,0.5,0.7,0.9,1.1\n");
  try {
    parse_ucr(in);
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse rejects non-numeric fields and empty files") {
  std::istringstream bad("1,0.5,oops,0.9\n");
  CHECK_THROWS_AS(parse_ucr(bad), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_ucr(empty), DataError);
  std::istringstream comments_only("# name=x\n\n");
  CHECK_THROWS_AS(parse_ucr(comments_only), DataError);
}

TEST_CASE("parse auto-detects tab delimited files") {
  std::istringstream in("2\t1.0\t2.0\t3.0\n3\t4.0\t5.0\t6.0\n");
  Dataset ds = parse_ucr(in);
  CHECK(ds.windows.size() == 2);
  CHECK(ds.windows[1].values == std::vector<double>{4.0, 5.0, 6.0});
}

TEST_CASE("window count equals data line count on an IPD-style file") {
  // 24 values per line, 2 classes, like ItalyPowerDemand
  std::ostringstream file;
  rng::SplitMix64 g(99);
  const std::size_t lines = 37;
  for (std::size_t i = 0; i < lines; ++i) {
    file << (i % 2 == 0 ? "1" : "2");
    for (int j = 0; j < 24; ++j) file << ',' << rng::gaussian(g);
    file << '\n';
  }
  const std::string text = file.str();
  // independent oracle: count newlines in the raw text
  std::size_t newline_count = 0;
  for (char c : text) newline_count += c == '\n';
  std::istringstream in(text);
  Dataset ds = parse_ucr(in);
  CHECK(ds.windows.size() == newline_count);
  CHECK(ds.d == 24);
}

TEST_CASE("normalize rejects constant datasets") {
  std::istringstream in("0,5,5,5\n1,5,5,5\n");
  Dataset ds = parse_ucr(in);
  CHECK_THROWS_AS(normalize(ds), DataError);
}

TEST_CASE("normalize maps {0,2} to {-1,+1}") {
  std::istringstream in("0,0,2,0\n1,2,0,2\n");
  Dataset ds = parse_ucr(in);
  normalize(ds);
  CHECK(ds.windows[0].values == std::vector<double>{-1, 1, -1});
  CHECK(ds.windows[1].values == std::vector<double>{1, -1, 1});
}

TEST_CASE("normalized train split has mean 0 and std 1") {
  Dataset ds = synthesize({.d = 16, .num_windows = 40, .seed = 5});
  normalize(ds);
  // recompute with an independent pass
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i : ds.train_idx) {
    for (double v : ds.windows[i].values) sum += v;
    n += ds.windows[i].values.size();
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t i : ds.train_idx) {
    for (double v : ds.windows[i].values) ss += (v - mean) * (v - mean);
  }
  CHECK(std::fabs(mean) < 1e-9);
  CHECK(std::fabs(std::sqrt(ss / n) - 1.0) < 1e-9);
}

TEST_CASE("synthesize is deterministic under its seed") {
  SynthSpec spec{.d = 12, .num_windows = 20, .pattern = Pattern::SignBump, .seed = 7};
  Dataset a = synthesize(spec);
  Dataset b = synthesize(spec);
  CHECK(a.windows == b.windows);
  spec.seed = 8;
  Dataset c = synthesize(spec);
  CHECK_FALSE(a.windows == c.windows);
}

TEST_CASE("seeded split is deterministic and disjoint") {
  Dataset ds = synthesize({.d = 12, .num_windows = 30, .seed = 3});
  seeded_split(ds, 0.7, 42);
  auto train_a = ds.train_idx;
  auto test_a = ds.test_idx;
  seeded_split(ds, 0.7, 42);
  CHECK(ds.train_idx == train_a);
  CHECK(ds.test_idx == test_a);
  std::vector<bool> seen(ds.windows.size(), false);
  for (std::size_t i : train_a) seen[i] = true;
  for (std::size_t i : test_a) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
  CHECK(std::count(seen.begin(), seen.end(), false) == 0);
}

TEST_CASE("canonical round-trip reproduces the dataset") {
  Dataset ds = synthesize({.d = 12, .num_windows = 10, .seed = 11});
  normalize(ds);
  std::ostringstream out;
  write_canonical(ds, out);
  std::istringstream in(out.str());
  Dataset back = parse_ucr(in);
  CHECK(back.windows == ds.windows);
  CHECK(back.name == ds.name);
  // serialize -> parse -> serialize is byte-stable
  std::ostringstream out2;
  back.normalized = ds.normalized;
  back.norm_mean = ds.norm_mean;
  back.norm_std = ds.norm_std;
  write_canonical(back, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("a linear classifier separates the synthetic fixture") {
  using namespace tsaudit::autodiff;
  for (Pattern pattern : {Pattern::SignBump, Pattern::HalvesBump}) {
    Dataset ds = synthesize({.d = 12, .num_windows = 120, .pattern = pattern, .seed = 21});
    normalize(ds);
    // logistic regression on raw window values, plain gradient descent
    Tensor w = Tensor::zeros({2, ds.d});
    Tensor b = Tensor::zeros({2, 1});
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    for (int step = 0; step < 150; ++step) {
      w.zero_grad();
      b.zero_grad();
      Tape tape;
      Tape::Scope scope(tape);
      Tensor total = Tensor::scalar(0.0);
      for (std::size_t i : ds.train_idx) {
        Tensor x = Tensor::from(ds.windows[i].values, {ds.d, 1});
        Tensor logits = add(matmul(w, x), b);
        total = add(total, softmax_cross_entropy(logits, ds.windows[i].label));
      }
      tape.backward(total);
      auto gw = w.grad();
      auto gb = b.grad();
      const double lr = 0.05 / static_cast<double>(ds.train_idx.size());
      for (std::size_t i = 0; i < gw.size(); ++i) w.value()[i] -= lr * gw[i];
      for (std::size_t i = 0; i < gb.size(); ++i) b.value()[i] -= lr * gb[i];
    }
    std::size_t correct = 0;
    for (std::size_t i : ds.test_idx) {
      Tape::NoGrad ng;
      Tensor x = Tensor::from(ds.windows[i].values, {ds.d, 1});
      Tensor logits = add(matmul(w, x), b);
      const std::size_t pred = logits.value()[0] >= logits.value()[1] ? 0 : 1;
      correct += pred == ds.windows[i].label;
    }
    const double acc = static_cast<double>(correct) / ds.test_idx.size();
    INFO("pattern " << (pattern == Pattern::SignBump ? "sign" : "halves"));
    CHECK(acc > 0.95);
  }
}

TEST_CASE("fingerprint tracks content") {
  Dataset a = synthesize({.d = 12, .num_windows = 10, .seed = 1});
  Dataset b = synthesize({.d = 12, .num_windows = 10, .seed = 1});
  Dataset c = synthesize({.d = 12, .num_windows = 10, .seed = 2});
  CHECK(fingerprint(a) == fingerprint(b));
  CHECK(fingerprint(a) != fingerprint(c));
}
