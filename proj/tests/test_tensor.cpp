#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"
#include "testutil.hpp"

using namespace centrank;
using testutil::check_gradients;
using testutil::random_tensor;
using testutil::random_tensor_away_from;

TEST_CASE("tensor construction and scalar access") {
    Tensor t = Tensor::from({2, 2}, {1, 2, 3, 4});
    REQUIRE(t.size() == 4);
    REQUIRE(t.at(1, 0) == 3.0);
    REQUIRE(Tensor::scalar(7.5).item() == 7.5);
    REQUIRE_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
    REQUIRE_THROWS_AS(t.item(), UsageError);
}

TEST_CASE("matmul values") {
    SECTION("identity passthrough") {
        Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
        Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
        REQUIRE(matmul(eye, x).data() == x.data());
    }
    SECTION("column vector product") {
        Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
        Tensor b = Tensor::from({2, 1}, {1, 1});
        REQUIRE(matmul(a, b).data() == std::vector<double>{3, 7});
    }
    SECTION("shape errors") {
        Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
        REQUIRE_THROWS_AS(matmul(a, a), ShapeError);
    }
    SECTION("grad of sum(a*b) w.r.t. a is the row-sum matrix of b") {
        Rng rng(1);
        Tensor a = random_tensor({3, 4}, rng);
        Tensor b = random_tensor({4, 2}, rng);
        b.raw()->requires_grad = false;
        Tensor loss = sum_all(matmul(a, b));
        loss.backward();
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t k = 0; k < 4; ++k) {
                const double want = b.data()[k * 2] + b.data()[k * 2 + 1];
                REQUIRE(std::abs(a.grad()[i * 4 + k] - want) < 1e-12);
            }
        }
        REQUIRE_FALSE(b.has_grad());
    }
}

TEST_CASE("pointwise op values") {
    Tensor x = Tensor::from({3}, {-1, 0, 2});
    REQUIRE(relu(x).data() == std::vector<double>{0, 0, 2});
    REQUIRE(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    REQUIRE(sigmoid(Tensor::scalar(800.0)).item() == 1.0);   // no overflow
    REQUIRE(sigmoid(Tensor::scalar(-800.0)).item() == 0.0);  // no underflow to NaN
    Tensor sq = Tensor::scalar(3.0, true);
    Tensor loss = square(sq);
    loss.backward();
    REQUIRE(sq.grad()[0] == 6.0);
    REQUIRE_THROWS_AS(add(x, Tensor::from({2}, {1, 2})), ShapeError);
}

TEST_CASE("backward basics") {
    SECTION("sum gradient is ones") {
        Tensor x = Tensor::from({3}, {5, 6, 7}, true);
        sum_all(x).backward();
        REQUIRE(x.grad() == std::vector<double>{1, 1, 1});
    }
    SECTION("sum of squares") {
        Tensor x = Tensor::from({2}, {1, 2}, true);
        sum_all(mul(x, x)).backward();
        REQUIRE(x.grad() == std::vector<double>{2, 4});
    }
    SECTION("non-scalar loss rejected") {
        Tensor x = Tensor::from({2}, {1, 2}, true);
        REQUIRE_THROWS_AS(x.backward(), UsageError);
    }
    SECTION("fan-out accumulates") {
        Tensor x = Tensor::scalar(3.0, true);
        add(x, x).backward();
        REQUIRE(x.grad()[0] == 2.0);
    }
    SECTION("no parents recorded without grad tracking") {
        Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4}, false);
        Tensor y = relu(matmul(x, x));
        REQUIRE_FALSE(y.requires_grad());
        REQUIRE(y.raw()->parents.empty());
        REQUIRE_FALSE(y.raw()->backprop);
    }
}

TEST_CASE("concat") {
    Tensor a = Tensor::from({1, 2}, {1, 2}, true);
    Tensor b = Tensor::from({1, 2}, {3, 4}, true);
    SECTION("axis 1") {
        Tensor c = concat({a, b}, 1);
        REQUIRE(c.shape() == std::vector<std::size_t>{1, 4});
        REQUIRE(c.data() == std::vector<double>{1, 2, 3, 4});
    }
    SECTION("axis 0") {
        Tensor c = concat({a, b}, 0);
        REQUIRE(c.shape() == std::vector<std::size_t>{2, 2});
    }
    SECTION("single tensor is identity") {
        REQUIRE(concat({a}, 1).data() == a.data());
    }
    SECTION("adjoint routes to sources") {
        Tensor c = concat({a, b}, 1);
        sum_all(slice_cols(c, 2, 4)).backward();
        REQUIRE(a.grad() == std::vector<double>{0, 0});
        REQUIRE(b.grad() == std::vector<double>{1, 1});
    }
    SECTION("mismatched widths rejected") {
        REQUIRE_THROWS_AS(concat({a, Tensor::from({1, 3}, {1, 2, 3})}, 0), ShapeError);
    }
}

TEST_CASE("layer_norm values") {
    Tensor gain = Tensor::from({4}, {1, 1, 1, 1});
    Tensor bias = Tensor::from({4}, {0, 0, 0, 0});
    SECTION("constant row collapses to bias") {
        Tensor x = Tensor::from({1, 4}, {3, 3, 3, 3});
        Tensor y = layer_norm(x, gain, bias);
        for (double v : y.data()) REQUIRE(v == 0.0);
    }
    SECTION("already standardized row passes through as eps vanishes") {
        Tensor x = Tensor::from({1, 2}, {1, -1});
        Tensor g2 = Tensor::from({2}, {1, 1});
        Tensor b2 = Tensor::from({2}, {0, 0});
        auto out = layer_norm(x, g2, b2, 1e-12).data();
        REQUIRE(std::abs(out[0] - 1.0) < 1e-9);
        REQUIRE(std::abs(out[1] + 1.0) < 1e-9);
    }
    SECTION("row mean equals bias mean") {
        Rng rng(5);
        Tensor x = random_tensor({3, 4}, rng);
        Tensor b = Tensor::from({4}, {0.3, -0.1, 0.7, 0.5});
        const double bias_mean = (0.3 - 0.1 + 0.7 + 0.5) / 4.0;
        Tensor out = layer_norm(x, gain, b);
        for (std::size_t i = 0; i < 3; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < 4; ++j) mean += out.at(i, j);
            REQUIRE(std::abs(mean / 4.0 - bias_mean) < 1e-12);
        }
    }
}

TEST_CASE("minmax_normalize") {
    SECTION("maps extremes to 0 and 1") {
        Tensor x = Tensor::from({4}, {2, 6, 4, 10});
        REQUIRE(minmax_normalize(x).data() == std::vector<double>{0, 0.5, 0.25, 1});
    }
    SECTION("degenerate span collapses to zeros with zero grad") {
        Tensor x = Tensor::from({3}, {5, 5, 5}, true);
        Tensor y = minmax_normalize(x);
        REQUIRE(y.data() == std::vector<double>{0, 0, 0});
        sum_all(y).backward();
        REQUIRE(x.grad() == std::vector<double>{0, 0, 0});
    }
}

TEST_CASE("bce_with_logits values") {
    SECTION("zero logits cost ln 2 regardless of target") {
        Tensor z = Tensor::from({2, 2}, {0, 0, 0, 0});
        Tensor t = Tensor::from({2, 2}, {1, 0, 1, 0});
        REQUIRE(std::abs(bce_with_logits_mean(z, t).item() - std::log(2.0)) < 1e-15);
    }
    SECTION("extreme logits stay finite") {
        Tensor z = Tensor::from({2}, {1000.0, -1000.0});
        Tensor t = Tensor::from({2}, {1.0, 0.0});
        REQUIRE(bce_with_logits_mean(z, t).item() == 0.0);
        Tensor bad = Tensor::from({2}, {-1000.0, 1000.0});
        REQUIRE(std::isfinite(bce_with_logits_mean(bad, t).item()));
        REQUIRE(bce_with_logits_mean(bad, t).item() == 1000.0);
    }
}

TEST_CASE("finite differences validate every op gradient") {
    Rng rng(77);
    SECTION("matmul") {
        auto f = [](const std::vector<Tensor>& in) { return sum_all(matmul(in[0], in[1])); };
        check_gradients(f, {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)});
        auto g = [](const std::vector<Tensor>& in) {
            return mean_all(square(matmul(in[0], in[1])));
        };
        check_gradients(g, {random_tensor({2, 3}, rng), random_tensor({3, 3}, rng)});
    }
    SECTION("add/sub/mul/scale") {
        auto f = [](const std::vector<Tensor>& in) {
            return sum_all(mul(add(in[0], in[1]), sub(in[0], scale(in[1], 0.7))));
        };
        check_gradients(f, {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    }
    SECTION("relu") {
        auto f = [](const std::vector<Tensor>& in) { return sum_all(square(relu(in[0]))); };
        check_gradients(f, {random_tensor_away_from({3, 3}, rng, 0.05)});
    }
    SECTION("sigmoid") {
        auto f = [](const std::vector<Tensor>& in) { return mean_all(sigmoid(in[0])); };
        check_gradients(f, {random_tensor({2, 4}, rng)});
    }
    SECTION("log") {
        auto f = [](const std::vector<Tensor>& in) { return sum_all(log_op(in[0])); };
        check_gradients(f, {random_tensor({2, 3}, rng, 0.5, 3.0)});
    }
    SECTION("square") {
        auto f = [](const std::vector<Tensor>& in) { return mean_all(square(in[0])); };
        check_gradients(f, {random_tensor({5}, rng)});
    }
    SECTION("transpose and reshape") {
        auto f = [](const std::vector<Tensor>& in) {
            return sum_all(square(reshape(transpose(in[0]), {2, 6})));
        };
        check_gradients(f, {random_tensor({4, 3}, rng)});
    }
    SECTION("concat") {
        auto f = [](const std::vector<Tensor>& in) {
            return mean_all(square(concat({in[0], in[1], in[2]}, 1)));
        };
        check_gradients(f, {random_tensor({2, 2}, rng), random_tensor({2, 3}, rng),
                            random_tensor({2, 1}, rng)});
        auto g = [](const std::vector<Tensor>& in) {
            return mean_all(square(concat({in[0], in[1]}, 0)));
        };
        check_gradients(g, {random_tensor({1, 3}, rng), random_tensor({2, 3}, rng)});
    }
    SECTION("slice_rows and slice_cols") {
        auto f = [](const std::vector<Tensor>& in) {
            return sum_all(square(slice_rows(in[0], 1, 3)));
        };
        check_gradients(f, {random_tensor({4, 3}, rng)});
        auto g = [](const std::vector<Tensor>& in) {
            return sum_all(square(slice_cols(in[0], 0, 2)));
        };
        check_gradients(g, {random_tensor({3, 4}, rng)});
    }
    SECTION("gather_rows with repeated indices") {
        auto f = [](const std::vector<Tensor>& in) {
            return mean_all(square(gather_rows(in[0], {0, 2, 2, 1, 0})));
        };
        check_gradients(f, {random_tensor({3, 3}, rng)});
    }
    SECTION("broadcast_rows and add_rowvec") {
        auto f = [](const std::vector<Tensor>& in) {
            return mean_all(square(broadcast_rows(in[0], 4)));
        };
        check_gradients(f, {random_tensor({1, 3}, rng)});
        auto g = [](const std::vector<Tensor>& in) {
            return mean_all(square(add_rowvec(in[0], in[1])));
        };
        check_gradients(g, {random_tensor({3, 4}, rng), random_tensor({4}, rng)});
    }
    SECTION("layer_norm") {
        auto f = [](const std::vector<Tensor>& in) {
            return mean_all(square(layer_norm(in[0], in[1], in[2])));
        };
        check_gradients(f, {random_tensor({3, 5}, rng), random_tensor({5}, rng, 0.5, 1.5),
                            random_tensor({5}, rng)});
    }
    SECTION("minmax_normalize") {
        // hand-spread entries: unique min and max, all others interior
        Tensor x = Tensor::from({5}, {0.0, 3.0, 1.1, 2.2, 0.7}, true);
        auto f = [](const std::vector<Tensor>& in) {
            return mean_all(square(minmax_normalize(in[0])));
        };
        check_gradients(f, {x});
    }
    SECTION("bce_with_logits_mean") {
        Tensor t = Tensor::from({2, 3}, {1, 0, 1, 0, 0, 1});
        auto f = [t](const std::vector<Tensor>& in) {
            return bce_with_logits_mean(in[0], t);
        };
        check_gradients(f, {random_tensor({2, 3}, rng)});
        // target-side gradient (soft targets)
        auto g = [](const std::vector<Tensor>& in) {
            return bce_with_logits_mean(in[0], in[1]);
        };
        check_gradients(g, {random_tensor({4}, rng), random_tensor({4}, rng, 0.1, 0.9)});
    }
    SECTION("sum_all and mean_all") {
        auto f = [](const std::vector<Tensor>& in) { return sum_all(in[0]); };
        check_gradients(f, {random_tensor({2, 2}, rng)});
        auto g = [](const std::vector<Tensor>& in) { return mean_all(in[0]); };
        check_gradients(g, {random_tensor({6}, rng)});
    }
    SECTION("composite expression") {
        auto f = [](const std::vector<Tensor>& in) {
            Tensor h = relu(add_rowvec(matmul(in[0], in[1]), in[2]));
            return mean_all(square(sub(h, in[3])));
        };
        check_gradients(f, {random_tensor_away_from({3, 4}, rng, 0.05),
                            random_tensor({4, 2}, rng), random_tensor({2}, rng),
                            random_tensor({3, 2}, rng)});
    }
}
