#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "centrank/optim.hpp"

using namespace centrank;
namespace fs = std::filesystem;

TEST_CASE("xavier_uniform") {
    SECTION("bound for fans (3,3) is exactly 1") {
        REQUIRE(xavier_bound(3, 3) == 1.0);
    }
    SECTION("samples respect the bound") {
        Tensor t = xavier_uniform(8, 24, 7);
        const double bound = xavier_bound(8, 24);
        for (double v : t.data()) {
            REQUIRE(v <= bound);
            REQUIRE(v >= -bound);
        }
        REQUIRE(t.requires_grad());
    }
    SECTION("empirical mean of 1e5 samples is near zero") {
        Tensor t = xavier_uniform(250, 400, 99);
        double mean = 0.0;
        for (double v : t.data()) mean += v;
        mean /= double(t.size());
        REQUIRE(std::abs(mean) < 0.01);
    }
    SECTION("seed determinism") {
        REQUIRE(xavier_uniform(5, 5, 3).data() == xavier_uniform(5, 5, 3).data());
        REQUIRE(xavier_uniform(5, 5, 3).data() != xavier_uniform(5, 5, 4).data());
    }
    SECTION("zero fans rejected") {
        REQUIRE_THROWS_AS(xavier_bound(0, 3), UsageError);
    }
}

TEST_CASE("ParamStore") {
    ParamStore store;
    store.add("b", Tensor::from({2}, {1, 2}, true));
    store.add("a", Tensor::from({2}, {3, 4}, true));
    SECTION("duplicate and untracked rejected") {
        REQUIRE_THROWS_AS(store.add("a", Tensor::from({1}, {0}, true)), UsageError);
        REQUIRE_THROWS_AS(store.add("c", Tensor::from({1}, {0}, false)), UsageError);
    }
    SECTION("lookup") {
        REQUIRE(store.at("a").data() == std::vector<double>{3, 4});
        REQUIRE_THROWS_AS(store.at("zzz"), UsageError);
        REQUIRE(store.contains("b"));
    }
    SECTION("iteration is name-ordered") {
        std::vector<std::string> names;
        for (const auto& [name, slot] : store) names.push_back(name);
        REQUIRE(names == std::vector<std::string>{"a", "b"});
    }
}

TEST_CASE("adam_step") {
    SECTION("first step moves by about lr for nonzero grad") {
        ParamStore store;
        store.add("w", Tensor::from({3}, {1.0, -2.0, 0.5}, true));
        store.at("w").grad() = {0.5, -0.25, 2.0};
        adam_step(store);
        const auto& p = store.at("w").data();
        REQUIRE(std::abs(p[0] - (1.0 - 1e-3)) < 1e-9);
        REQUIRE(std::abs(p[1] - (-2.0 + 1e-3)) < 1e-9);
        REQUIRE(std::abs(p[2] - (0.5 - 1e-3)) < 1e-9);
        REQUIRE(store.step() == 1);
        REQUIRE_FALSE(store.at("w").has_grad());  // consumed
    }
    SECTION("zero gradient leaves parameters unchanged") {
        ParamStore store;
        store.add("w", Tensor::from({2}, {1.0, 2.0}, true));
        store.at("w").grad();  // allocate zeros
        adam_step(store);
        REQUIRE(store.at("w").data() == std::vector<double>{1.0, 2.0});
    }
    SECTION("constant gradient gives monotone movement against its sign") {
        ParamStore store;
        store.add("w", Tensor::from({1}, {0.0}, true));
        double prev = 0.0;
        for (int s = 0; s < 5; ++s) {
            store.at("w").grad() = {1.0};
            adam_step(store);
            REQUIRE(store.at("w").data()[0] < prev);
            prev = store.at("w").data()[0];
        }
    }
    SECTION("missing gradient is a usage error naming the parameter") {
        ParamStore store;
        store.add("w", Tensor::from({1}, {0.0}, true));
        store.add("u", Tensor::from({1}, {0.0}, true));
        store.at("u").grad() = {1.0};
        try {
            adam_step(store);
            FAIL("expected UsageError");
        } catch (const UsageError& e) {
            REQUIRE(std::string(e.what()).find("'w'") != std::string::npos);
        }
    }
}

TEST_CASE("checkpoint round-trip") {
    const fs::path path = fs::temp_directory_path() / "centrank_test.ckpt";
    ParamStore store;
    store.add("layer/w", xavier_uniform(4, 3, 11));
    store.add("layer/b", Tensor::from({3}, {0.1, 0.2, 0.3}, true));
    // advance the optimizer so moments are nonzero
    for (int s = 0; s < 3; ++s) {
        for (auto& [name, slot] : store) {
            auto& g = slot.param.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.01 * double(i + 1);
        }
        adam_step(store);
    }
    nlohmann::json meta;
    meta["mode"] = "RN";
    meta["d"] = 16;
    save_checkpoint(path, store, meta);

    SECTION("records and metadata survive") {
        Checkpoint ck = load_checkpoint(path);
        REQUIRE(ck.meta.at("mode") == "RN");
        REQUIRE(ck.step == 3);
        REQUIRE(ck.records.size() == 6);
        REQUIRE(ck.record("p:layer/w").shape == std::vector<std::size_t>{4, 3});
    }
    SECTION("restore reproduces parameters, moments and step") {
        ParamStore fresh;
        fresh.add("layer/w", xavier_uniform(4, 3, 999));  // different init
        fresh.add("layer/b", Tensor::from({3}, {0, 0, 0}, true));
        restore_params(fresh, load_checkpoint(path));
        REQUIRE(fresh.step() == store.step());
        for (auto& [name, slot] : store) {
            REQUIRE(fresh.at(name).data() == slot.param.data());
        }
        // continuing must match a run that never paused
        auto advance = [](ParamStore& s) {
            for (auto& [name, slot] : s) {
                auto& g = slot.param.grad();
                for (std::size_t i = 0; i < g.size(); ++i) g[i] = -0.02;
            }
            adam_step(s);
        };
        advance(store);
        advance(fresh);
        for (auto& [name, slot] : store) {
            REQUIRE(fresh.at(name).data() == slot.param.data());
        }
    }
    SECTION("missing record is a parse error naming the key") {
        ParamStore extra;
        extra.add("layer/w", xavier_uniform(4, 3, 1));
        extra.add("layer/b", Tensor::from({3}, {0, 0, 0}, true));
        extra.add("other", Tensor::from({1}, {0}, true));
        try {
            restore_params(extra, load_checkpoint(path));
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            REQUIRE(std::string(e.what()).find("p:other") != std::string::npos);
        }
    }
    SECTION("shape mismatch rejected") {
        ParamStore wrong;
        wrong.add("layer/w", xavier_uniform(3, 4, 1));
        wrong.add("layer/b", Tensor::from({3}, {0, 0, 0}, true));
        REQUIRE_THROWS_AS(restore_params(wrong, load_checkpoint(path)), ParseError);
    }
    SECTION("corrupt magic rejected") {
        const fs::path bad = fs::temp_directory_path() / "centrank_bad.ckpt";
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE and some trailing garbage";
        out.close();
        REQUIRE_THROWS_AS(load_checkpoint(bad), ParseError);
        fs::remove(bad);
    }
    SECTION("truncated file rejected") {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string bytes = ss.str();
        const fs::path cut = fs::temp_directory_path() / "centrank_cut.ckpt";
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() / 2));
        out.close();
        REQUIRE_THROWS_AS(load_checkpoint(cut), ParseError);
        fs::remove(cut);
    }
    fs::remove(path);
}
