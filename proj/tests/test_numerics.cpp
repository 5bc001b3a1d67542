#include <doctest.h>

#include <cmath>

#include "shgn/error.hpp"
#include "shgn/grad_check.hpp"
#include "shgn/ops.hpp"
#include "shgn/params.hpp"
#include "test_support.hpp"

using namespace shgn;
using shgn::test::random_tensor;

namespace {

void expect_grad_ok(const std::function<Tensor()>& f, std::vector<NamedTensor> params, double tol = 1e-6) {
    const GradCheckReport report = grad_check(f, std::move(params), 1e-5, tol);
    CHECK(report.checked > 0);
    if (!report.passed()) {
        const auto& o = report.offenders.front();
        FAIL_CHECK(o.param << "[" << o.index << "] analytic " << o.analytic << " numeric " << o.numeric);
    }
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
    const Tensor s = ops::softmax(Tensor::from({1, 3}, {0, 0, 0}), 1);
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax rows are nonnegative and sum to one") {
    Rng rng(3);
    const Tensor s = ops::softmax(random_tensor(rng, {5, 7}, false, 30.0), 1);
    for (std::size_t r = 0; r < 5; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            CHECK(s.at(r, c) >= 0.0);
            total += s.at(r, c);
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
    const Tensor cols = ops::softmax(random_tensor(rng, {4, 3}, false, 5.0), 0);
    for (std::size_t c = 0; c < 3; ++c) {
        double total = 0.0;
        for (std::size_t r = 0; r < 4; ++r) total += cols.at(r, c);
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("cross entropy vanishes at a large margin") {
    std::vector<double> logits(5, 0.0);
    logits[2] = 50.0;
    const std::size_t target = 2;
    const Tensor ce = ops::cross_entropy(Tensor::from({1, 5}, logits), std::span(&target, 1));
    CHECK(ce.item() >= 0.0);
    CHECK(ce.item() < 1e-9);
}

TEST_CASE("cross entropy of uniform logits is log V per token") {
    const std::vector<std::size_t> targets{1, 4, 7, 10};
    const Tensor sum = ops::cross_entropy(Tensor::zeros({4, 11}), targets, ops::Reduction::Sum);
    CHECK(sum.item() == doctest::Approx(4.0 * std::log(11.0)).epsilon(1e-14));
    const Tensor mean = ops::cross_entropy(Tensor::zeros({4, 11}), targets, ops::Reduction::Mean);
    CHECK(mean.item() == doctest::Approx(std::log(11.0)).epsilon(1e-14));
}

TEST_CASE("matmul gradients match finite differences") {
    Rng rng(11);
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 2});
    expect_grad_ok([&] { return ops::sum_all(ops::matmul(a, b)); }, {{"a", a}, {"b", b}});
    // A non-uniform upstream gradient exercises every entry distinctly.
    Tensor w = random_tensor(rng, {3, 2}, false);
    expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::matmul(a, b), w)); }, {{"a", a}, {"b", b}});
}

TEST_CASE("elementwise and structural ops pass grad check") {
    Rng rng(5);
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {3, 4});
    Tensor row = random_tensor(rng, {1, 4});
    Tensor col = random_tensor(rng, {3, 1});
    Tensor w = random_tensor(rng, {3, 4}, false);
    auto weigh = [&](const Tensor& t) { return ops::sum_all(ops::mul(t, w)); };

    SUBCASE("add/sub/mul/scale") {
        expect_grad_ok([&] { return weigh(ops::mul(ops::sub(ops::add(a, b), b), a)); }, {{"a", a}, {"b", b}});
        expect_grad_ok([&] { return weigh(ops::scalar_mul(a, -2.5)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::add_row(a, row)); }, {{"a", a}, {"row", row}});
        expect_grad_ok([&] { return weigh(ops::scale_rows(a, col)); }, {{"a", a}, {"col", col}});
    }
    SUBCASE("nonlinearities") {
        expect_grad_ok([&] { return weigh(ops::sigmoid(a)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::relu(a)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::softmax(a, 1)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::softmax(a, 0)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::log_softmax_rows(a)); }, {{"a", a}});
    }
    SUBCASE("reductions and reshaping") {
        Tensor w0 = random_tensor(rng, {1, 4}, false);
        Tensor w1 = random_tensor(rng, {3, 1}, false);
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::sum(a, 0), w0)); }, {{"a", a}});
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::sum(a, 1), w1)); }, {{"a", a}});
        expect_grad_ok([&] { return weigh(ops::transpose(ops::transpose(a))); }, {{"a", a}});
        const Tensor parts[] = {a, b};
        Tensor w2 = random_tensor(rng, {3, 8}, false);
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::concat(parts, 1), w2)); }, {{"a", a}, {"b", b}});
        Tensor w3 = random_tensor(rng, {6, 4}, false);
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::concat(parts, 0), w3)); }, {{"a", a}, {"b", b}});
        expect_grad_ok(
            [&] {
                auto heads = ops::split_heads(a, 2);
                return ops::add(weigh(ops::concat(std::vector<Tensor>{heads[1], heads[0]}, 1)),
                                ops::sum_all(ops::slice_cols(a, 1, 2)));
            },
            {{"a", a}});
    }
    SUBCASE("indexing") {
        const std::vector<std::size_t> idx{2, 0, 2};
        Tensor w3 = random_tensor(rng, {3, 4}, false);
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::gather_rows(a, idx), w3)); }, {{"a", a}});
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::embedding_lookup(a, idx), w3)); }, {{"a", a}});
        Tensor w5 = random_tensor(rng, {5, 4}, false);
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::index_add_rows(5, std::vector<std::size_t>{4, 1, 4}, a), w5)); },
                       {{"a", a}});
        Tensor scores = random_tensor(rng, {5, 1});
        Tensor w6 = random_tensor(rng, {5, 1}, false);
        const std::vector<std::size_t> seg{0, 1, 0, 2, 0};
        expect_grad_ok([&] { return ops::sum_all(ops::mul(ops::segment_softmax(scores, seg, 3), w6)); }, {{"s", scores}});
    }
    SUBCASE("layer norm and losses") {
        Tensor g = random_tensor(rng, {1, 4});
        Tensor be = random_tensor(rng, {1, 4});
        expect_grad_ok([&] { return weigh(ops::layer_norm(a, g, be)); }, {{"a", a}, {"g", g}, {"b", be}});
        const std::vector<std::size_t> t{3, 0, 1};
        expect_grad_ok([&] { return ops::cross_entropy(a, t, ops::Reduction::Sum); }, {{"a", a}});
        const std::vector<double> y{1.0, 0.0, 1.0};
        expect_grad_ok([&] { return ops::binary_cross_entropy(col, y); }, {{"col", col}});
    }
}

TEST_CASE("add and concat route gradients exactly") {
    Rng rng(9);
    Tensor a = random_tensor(rng, {2, 3});
    Tensor b = random_tensor(rng, {2, 3});
    Tensor w = random_tensor(rng, {2, 3}, false);
    ops::sum_all(ops::mul(ops::add(a, b), w)).backward();
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(a.grad()[i] == w.data()[i]);
        CHECK(b.grad()[i] == w.data()[i]);
    }
    a.zero_grad();
    b.zero_grad();
    Tensor w2 = random_tensor(rng, {2, 6}, false);
    const Tensor parts[] = {a, b};
    ops::sum_all(ops::mul(ops::concat(parts, 1), w2)).backward();
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(a.grad()[r * 3 + c] == w2.at(r, c));
            CHECK(b.grad()[r * 3 + c] == w2.at(r, c + 3));
        }
}

TEST_CASE("unused parameter has exactly zero gradient") {
    Rng rng(1);
    Tensor a = random_tensor(rng, {2, 2});
    Tensor unused = random_tensor(rng, {2, 2});
    const GradCheckReport r = grad_check([&] { return ops::sum_all(ops::sigmoid(a)); }, {{"a", a}, {"unused", unused}});
    CHECK(r.passed());
    for (double g : unused.grad()) CHECK(g == 0.0);
}

TEST_CASE("grad check reports offenders for a wrong gradient") {
    Rng rng(2);
    Tensor a = random_tensor(rng, {2, 2});
    // relu at a kink: force entries to exactly zero so the one-sided derivative disagrees.
    Tensor k = Tensor::from({1, 2}, {0.0, 0.0}, true);
    const GradCheckReport r = grad_check([&] { return ops::sum_all(ops::relu(k)); }, {{"k", k}});
    CHECK_FALSE(r.passed());
    CHECK(r.offenders.size() == 2);
}

TEST_CASE("grad check rejects non-finite values") {
    Tensor a = Tensor::from({1, 1}, {1.0}, true);
    CHECK_THROWS_AS(grad_check([&] { return ops::scalar_mul(a, std::numeric_limits<double>::infinity()); }, {{"a", a}}),
                    Error);
}

TEST_CASE("shape mismatches name the op and shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 3});
    try {
        (void)ops::matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find("2x3") != std::string::npos);
    }
    CHECK_THROWS_AS(ops::add(a, Tensor::zeros({3, 2})), ShapeError);
    CHECK_THROWS_AS(ops::split_heads(a, 2), ShapeError);
}

TEST_CASE("no-grad guard disables recording") {
    Tensor a = Tensor::from({1, 1}, {2.0}, true);
    {
        NoGradGuard guard;
        CHECK_FALSE(ops::scalar_mul(a, 3.0).requires_grad());
    }
    CHECK(ops::scalar_mul(a, 3.0).requires_grad());
}

TEST_CASE("identical seeded forward passes are bit-identical") {
    auto run = [] {
        Rng rng(42);
        ParamStore ps;
        Tensor w = ps.add("w", {4, 4}, Init::Xavier, rng);
        Tensor x = random_tensor(rng, {3, 4}, false);
        return ops::softmax(ops::matmul(x, w), 1);
    };
    const Tensor a = run();
    const Tensor b = run();
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("rng is reproducible and uniform draws stay in range") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(a.below(7) == b.below(7));
    }
}

TEST_CASE("parameter store initializers") {
    Rng rng(8);
    ParamStore ps;
    Tensor x = ps.add("x", {10, 6}, Init::Xavier, rng);
    const double bound = std::sqrt(6.0 / 16.0);
    for (double v : x.data()) CHECK(std::abs(v) <= bound);
    Tensor z = ps.add("z", {2, 2}, Init::Zeros, rng);
    Tensor o = ps.add("o", {2, 2}, Init::Ones, rng);
    for (double v : z.data()) CHECK(v == 0.0);
    for (double v : o.data()) CHECK(v == 1.0);
    CHECK(ps.num_values() == 68);
    CHECK_THROWS_AS(ps.add("x", {1, 1}, Init::Zeros, rng), Error);
    CHECK_THROWS_AS(ps.get("missing"), Error);
    // Handles alias the stored tensor.
    Tensor h = ps.get("z");
    h.mutable_data()[0] = 5.0;
    CHECK(z.data()[0] == 5.0);
}
