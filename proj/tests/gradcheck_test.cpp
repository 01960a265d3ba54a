#include <string>

#include "doctest.h"
#include "gradcheck.hpp"

using namespace tsmt;
using tsmt::testing::check_gradient;
using tsmt::testing::project;
using tsmt::testing::random_array;

namespace {

constexpr int kTrials = 100;
constexpr double kTol = 1e-4;

std::size_t small_dim(Rng& rng) { return 1 + rng.below(8); }

// Runs `kTrials` seeded trials of an op and returns the worst relative error.
template <typename Case>
double worst_over_trials(std::uint64_t base_seed, Case make_case) {
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng rng = Rng(base_seed).split(static_cast<std::uint64_t>(trial));
    worst = std::max(worst, make_case(rng, static_cast<std::uint64_t>(trial)).max_rel_error);
  }
  return worst;
}

}  // namespace

TEST_CASE("finite differences: matmul") {
  double worst = worst_over_trials(1, [](Rng& rng, std::uint64_t t) {
    const std::size_t m = small_dim(rng), k = small_dim(rng), n = small_dim(rng);
    return check_gradient([t](ad::Graph& g, const auto& x) { return project(g, ad::matmul(x[0], x[1]), t); },
                          {random_array(rng, {m, k}), random_array(rng, {k, n})});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: elementwise add/sub/mul/scale/add_row") {
  double worst = worst_over_trials(2, [](Rng& rng, std::uint64_t t) {
    const std::size_t m = small_dim(rng), n = small_dim(rng);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) {
          ad::Var y = ad::add(ad::mul(x[0], x[1]), ad::sub(x[0], ad::scale(x[1], 0.7)));
          return project(g, ad::add_row(y, x[2]), t);
        },
        {random_array(rng, {m, n}), random_array(rng, {m, n}), random_array(rng, {n})});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: relu away from the kink") {
  double worst = worst_over_trials(3, [](Rng& rng, std::uint64_t t) {
    Array x = random_array(rng, {small_dim(rng), small_dim(rng)});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += x[i] >= 0 ? 0.1 : -0.1;
    return check_gradient([t](ad::Graph& g, const auto& v) { return project(g, ad::relu(v[0]), t); }, {x});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: softmax and log_softmax") {
  double worst = worst_over_trials(4, [](Rng& rng, std::uint64_t t) {
    const std::size_t m = small_dim(rng), n = small_dim(rng);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) {
          return ad::add(project(g, ad::softmax(x[0]), t), project(g, ad::log_softmax(x[0]), t + 1000));
        },
        {random_array(rng, {m, n}, -3, 3)});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: layer_norm") {
  double worst = worst_over_trials(5, [](Rng& rng, std::uint64_t t) {
    const std::size_t m = small_dim(rng), n = 2 + rng.below(7);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) { return project(g, ad::layer_norm(x[0], x[1], x[2]), t); },
        {random_array(rng, {m, n}, -2, 2), random_array(rng, {n}), random_array(rng, {n})});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: causal conv1d") {
  double worst = worst_over_trials(6, [](Rng& rng, std::uint64_t t) {
    const std::size_t T = small_dim(rng), cin = small_dim(rng), cout = small_dim(rng), K = 1 + rng.below(3);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) { return project(g, ad::conv1d_causal(x[0], x[1], x[2]), t); },
        {random_array(rng, {T, cin}), random_array(rng, {K, cin, cout}), random_array(rng, {cout})});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: embedding gather (row and column tables)") {
  double worst = worst_over_trials(7, [](Rng& rng, std::uint64_t t) {
    const std::size_t V = 2 + rng.below(7), D = small_dim(rng), rows = small_dim(rng), cols = small_dim(rng);
    std::vector<int> toks(rows * cols);
    for (int& k : toks) k = static_cast<int>(rng.below(V));
    const bool by_column = rng.below(2) == 1;
    Shape shape = by_column ? Shape{D, V} : Shape{V, D};
    return check_gradient(
        [=](ad::Graph& g, const auto& x) { return project(g, ad::embed(x[0], toks, rows, cols, by_column), t); },
        {random_array(rng, shape)});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: concat, slice, transpose, reshape") {
  double worst = worst_over_trials(8, [](Rng& rng, std::uint64_t t) {
    const std::size_t m = 2 + rng.below(7), n = 2 + rng.below(7);
    return check_gradient(
        [=](ad::Graph& g, const auto& x) {
          const ad::Var cols[] = {x[0], x[1]};
          ad::Var c = ad::concat_cols(cols);
          ad::Var s = ad::slice_cols(c, 1, n);
          const ad::Var rows[] = {s, ad::slice_rows(x[1], 0, 1)};
          ad::Var r = ad::concat_rows(rows);
          ad::Var tr = ad::transpose(r);
          return project(g, ad::reshape(tr, {tr.value().size()}), t);
        },
        {random_array(rng, {m, n}), random_array(rng, {m, n})});
  });
  CHECK(worst < kTol);
}

TEST_CASE("finite differences: masked attention and cross-entropy") {
  double worst = worst_over_trials(9, [](Rng& rng, std::uint64_t) {
    const std::size_t T = small_dim(rng), d = small_dim(rng), C = 2 + rng.below(7);
    std::vector<int> targets(T);
    for (int& k : targets) k = static_cast<int>(rng.below(C));
    return check_gradient(
        [=](ad::Graph&, const auto& x) {
          ad::Var scores = ad::scale(ad::matmul(x[0], ad::transpose(x[1])), 0.5);
          ad::Var p = ad::softmax(ad::causal_mask(scores));
          ad::Var z = ad::matmul(p, x[2]);
          ad::Var logits = ad::matmul(z, x[3]);
          return ad::add(ad::cross_entropy(logits, targets), ad::mean(z));
        },
        {random_array(rng, {T, d}), random_array(rng, {T, d}), random_array(rng, {T, d}),
         random_array(rng, {d, C})});
  });
  CHECK(worst < kTol);
}
