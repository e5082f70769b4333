#pragma once
// Shared test helpers: finite-difference gradient checking and random
// tensor construction.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "centrank/rng.hpp"
#include "centrank/tensor.hpp"

namespace testutil {

using GraphFn = std::function<centrank::Tensor(const std::vector<centrank::Tensor>&)>;

// Central finite differences against reverse-mode gradients. The function is
// re-run per probe (define-by-run graphs are throwaway). Relative error uses
// a small floor so near-zero analytic entries do not blow up the ratio.
inline void check_gradients(const GraphFn& f, std::vector<centrank::Tensor> inputs,
                            double rel_tol = 1e-5, double h = 1e-5) {
    centrank::Tensor loss = f(inputs);
    REQUIRE(loss.size() == 1);
    loss.backward();
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        if (!inputs[t].requires_grad()) continue;
        REQUIRE(inputs[t].has_grad());
        auto grads = inputs[t].grad();
        for (std::size_t k = 0; k < inputs[t].size(); ++k) {
            const double keep = inputs[t].data()[k];
            inputs[t].data()[k] = keep + h;
            const double up = f(inputs).item();
            inputs[t].data()[k] = keep - h;
            const double down = f(inputs).item();
            inputs[t].data()[k] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double ad = grads[k];
            const double err = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6});
            INFO("input " << t << " entry " << k << " ad=" << ad << " fd=" << fd);
            REQUIRE(err <= rel_tol);
        }
    }
}

inline centrank::Tensor random_tensor(std::vector<std::size_t> shape, centrank::Rng& rng,
                                      double lo = -2.0, double hi = 2.0) {
    std::size_t total = 1;
    for (std::size_t d : shape) total *= d;
    std::vector<double> data(total);
    for (double& v : data) v = rng.uniform(lo, hi);
    return centrank::Tensor::from(std::move(shape), std::move(data), true);
}

// Keeps relu/minmax test points away from their kinks so the finite
// difference stays two-sided smooth.
inline centrank::Tensor random_tensor_away_from(std::vector<std::size_t> shape,
                                                centrank::Rng& rng, double margin) {
    centrank::Tensor t = random_tensor(std::move(shape), rng);
    for (double& v : t.data())
        if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
    return t;
}

}  // namespace testutil
