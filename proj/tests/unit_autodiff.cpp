#include <cmath>
#include <vector>

#include "core/gradcheck.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"
#include "doctest.h"

using ts::Tape;
using ts::TensorT;
using ts::Var;

namespace {

TensorT<double> rand_tensor(ts::Shape shape, uint64_t seed) {
  ts::SplitMix64 r(seed);
  auto t = TensorT<double>::zeros(std::move(shape));
  for (auto& v : t.data) v = r.uniform() * 2.0 - 1.0;
  return t;
}

}  // namespace

TEST_CASE("leaf stores the value and starts with zero grad") {
  Tape<double> tape;
  auto x = tape.leaf(TensorT<double>::from_values({3}, {1, 2, 3}));
  CHECK(tape.value(x).data == std::vector<double>{1, 2, 3});
  CHECK(tape.grad(x).data == std::vector<double>{0, 0, 0});
  CHECK(std::string(tape.op_tag(x)) == "leaf");
}

TEST_CASE("elementwise forward values") {
  Tape<double> tape;
  auto a = tape.leaf(TensorT<double>::from_values({2, 2}, {1, 2, 3, 4}));
  auto b = tape.leaf(TensorT<double>::from_values({2, 2}, {10, 20, 30, 40}));
  CHECK(tape.value(tape.add(a, b)).data == std::vector<double>{11, 22, 33, 44});
  CHECK(tape.value(tape.sub(b, a)).data == std::vector<double>{9, 18, 27, 36});
  CHECK(tape.value(tape.mul(a, b)).data == std::vector<double>{10, 40, 90, 160});
  CHECK(tape.value(tape.scale(a, -2.0)).data == std::vector<double>{-2, -4, -6, -8});
  CHECK(tape.value(tape.reduce_sum(a)).data == std::vector<double>{10});
  CHECK(tape.value(tape.reduce_mean(a)).data == std::vector<double>{2.5});
}

TEST_CASE("scalar operands broadcast on either side") {
  Tape<double> tape;
  auto a = tape.leaf(TensorT<double>::from_values({3}, {1, 2, 3}));
  auto s = tape.leaf(TensorT<double>::scalar(10));
  CHECK(tape.value(tape.add(a, s)).data == std::vector<double>{11, 12, 13});
  CHECK(tape.value(tape.add(s, a)).data == std::vector<double>{11, 12, 13});
  CHECK(tape.value(tape.sub(a, s)).data == std::vector<double>{-9, -8, -7});
  CHECK(tape.value(tape.sub(s, a)).data == std::vector<double>{9, 8, 7});
  CHECK(tape.value(tape.mul(s, a)).data == std::vector<double>{10, 20, 30});
}

TEST_CASE("mismatched shapes are rejected") {
  Tape<double> tape;
  auto a = tape.leaf(TensorT<double>::zeros({2, 3}));
  auto b = tape.leaf(TensorT<double>::zeros({3, 2}));
  CHECK_THROWS_AS(tape.add(a, b), ts::Error);
  CHECK_THROWS_AS(tape.mul(a, b), ts::Error);
}

TEST_CASE("backward requires a scalar loss") {
  Tape<double> tape;
  auto a = tape.leaf(TensorT<double>::zeros({2, 2}));
  auto y = tape.add(a, a);
  try {
    tape.backward(y);
    FAIL("expected throw");
  } catch (const ts::Error& e) {
    CHECK(e.kind() == ts::ErrorKind::contract);
  }
}

TEST_CASE("product rule: d sum(a*b) = b, a") {
  Tape<double> tape;
  auto av = rand_tensor({2, 3}, 1);
  auto bv = rand_tensor({2, 3}, 2);
  auto a = tape.leaf(av);
  auto b = tape.leaf(bv);
  auto loss = tape.reduce_sum(tape.mul(a, b));
  tape.backward(loss);
  for (size_t i = 0; i < av.data.size(); ++i) {
    CHECK(tape.grad(a).data[i] == doctest::Approx(bv.data[i]));
    CHECK(tape.grad(b).data[i] == doctest::Approx(av.data[i]));
  }
}

TEST_CASE("diamond graphs accumulate: d sum(a*a) = 2a, d sum(a+a) = 2") {
  Tape<double> tape;
  auto av = rand_tensor({5}, 3);
  auto a = tape.leaf(av);
  tape.backward(tape.reduce_sum(tape.mul(a, a)));
  for (size_t i = 0; i < av.data.size(); ++i)
    CHECK(tape.grad(a).data[i] == doctest::Approx(2.0 * av.data[i]));

  Tape<double> tape2;
  auto c = tape2.leaf(av);
  tape2.backward(tape2.reduce_sum(tape2.add(c, c)));
  for (size_t i = 0; i < av.data.size(); ++i)
    CHECK(tape2.grad(c).data[i] == doctest::Approx(2.0));
}

TEST_CASE("scale and mean route constant factors") {
  Tape<double> tape;
  auto a = tape.leaf(rand_tensor({4}, 4));
  tape.backward(tape.reduce_sum(tape.scale(a, 3.5)));
  for (double g : tape.grad(a).data) CHECK(g == doctest::Approx(3.5));

  Tape<double> tape2;
  auto b = tape2.leaf(rand_tensor({8}, 5));
  tape2.backward(tape2.reduce_mean(b));
  for (double g : tape2.grad(b).data) CHECK(g == doctest::Approx(0.125));
}

TEST_CASE("subtraction sends negated gradient to the right operand") {
  Tape<double> tape;
  auto a = tape.leaf(rand_tensor({3}, 6));
  auto b = tape.leaf(rand_tensor({3}, 7));
  tape.backward(tape.reduce_sum(tape.sub(a, b)));
  for (double g : tape.grad(a).data) CHECK(g == doctest::Approx(1.0));
  for (double g : tape.grad(b).data) CHECK(g == doctest::Approx(-1.0));
}

TEST_CASE("scalar broadcast backward sums over the broadcast side") {
  Tape<double> tape;
  auto av = rand_tensor({6}, 8);
  auto a = tape.leaf(av);
  auto s = tape.leaf(TensorT<double>::scalar(2.5));
  tape.backward(tape.reduce_sum(tape.mul(a, s)));
  double sum = 0.0;
  for (double v : av.data) sum += v;
  CHECK(tape.grad(s).data[0] == doctest::Approx(sum));
  for (double g : tape.grad(a).data) CHECK(g == doctest::Approx(2.5));

  // add: ds = count of broadcast positions
  Tape<double> tape2;
  auto b = tape2.leaf(rand_tensor({6}, 9));
  auto s2 = tape2.leaf(TensorT<double>::scalar(0.5));
  tape2.backward(tape2.reduce_sum(tape2.add(b, s2)));
  CHECK(tape2.grad(s2).data[0] == doctest::Approx(6.0));
}

TEST_CASE("each reachable rule runs exactly once") {
  Tape<double> tape;
  auto a = tape.leaf(rand_tensor({3}, 10));
  auto b = tape.mul(a, a);
  auto c = tape.add(b, a);
  auto d = tape.mul(b, c);  // b feeds two consumers
  auto loss = tape.reduce_sum(d);
  tape.backward(loss);
  const auto& visits = tape.backward_visits();
  for (auto v : visits) CHECK(v <= 1);
  CHECK(visits[static_cast<size_t>(b.id)] == 1);
  CHECK(visits[static_cast<size_t>(c.id)] == 1);
  CHECK(visits[static_cast<size_t>(d.id)] == 1);
  CHECK(visits[static_cast<size_t>(loss.id)] == 1);
}

TEST_CASE("nodes outside the loss subgraph keep zero grads") {
  Tape<double> tape;
  auto a = tape.leaf(rand_tensor({3}, 11));
  auto unused = tape.leaf(rand_tensor({3}, 12));
  auto also_unused = tape.mul(unused, unused);
  tape.backward(tape.reduce_sum(a));
  for (double g : tape.grad(unused).data) CHECK(g == 0.0);
  for (double g : tape.grad(also_unused).data) CHECK(g == 0.0);
  CHECK(tape.backward_visits()[static_cast<size_t>(also_unused.id)] == 0);
}

TEST_CASE("backward twice gives the same grads") {
  Tape<double> tape;
  auto av = rand_tensor({4}, 13);
  auto a = tape.leaf(av);
  auto loss = tape.reduce_sum(tape.mul(a, a));
  tape.backward(loss);
  const auto first = tape.grad(a);
  tape.backward(loss);
  CHECK(tape.grad(a).data == first.data);
}

TEST_CASE("clear empties the tape") {
  Tape<double> tape;
  tape.leaf(TensorT<double>::zeros({2}));
  CHECK(tape.size() == 1);
  tape.clear();
  CHECK(tape.size() == 0);
}

TEST_CASE("grad_check agrees with closed forms on tape compositions") {
  // f(x) = mean(x*x) + 2 sum(x)
  ts::ScalarFn<double> f = [](Tape<double>& t, Var<double> x) {
    auto m = t.reduce_mean(t.mul(x, x));
    auto s = t.scale(t.reduce_sum(x), 2.0);
    return t.add(m, s);
  };
  for (uint64_t trial = 0; trial < 5; ++trial) {
    const auto x = rand_tensor({7}, 100 + trial);
    CHECK(ts::grad_check(f, x, 1e-6) < 1e-9);
  }
}

TEST_CASE("grad_check flags a wrong backward rule") {
  // forward sum(x), backward deliberately claims d/dx = 2
  ts::ScalarFn<double> wrong = [](Tape<double>& t, Var<double> x) {
    TensorT<double> value = TensorT<double>::scalar(0.0);
    double acc = 0.0;
    for (double v : t.value(x).data) acc += v;
    value.data[0] = acc;
    return t.emplace("bad_sum", std::move(value), {x.id},
                     [xid = x.id](Tape<double>& tt, int32_t self) {
                       const auto& g = tt.upstream(self);
                       auto& dx = tt.grad_buf(xid);
                       for (auto& d : dx.data) d += 2.0 * g.data[0];
                     });
  };
  const auto x = rand_tensor({5}, 200);
  CHECK(ts::grad_check(wrong, x, 1e-6) > 0.5);
}

TEST_CASE("float tape instantiation works end to end") {
  Tape<float> tape;
  auto a = tape.leaf(TensorT<float>::from_values({2}, {3, 4}));
  auto loss = tape.reduce_sum(tape.mul(a, a));
  tape.backward(loss);
  CHECK(tape.value(loss).data[0] == 25.0f);
  CHECK(tape.grad(a).data == std::vector<float>{6, 8});
}
