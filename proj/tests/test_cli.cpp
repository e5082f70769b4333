#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "centrank/cli.hpp"

using namespace centrank;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    RunResult r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

struct Scratch {
    fs::path dir;
    Scratch() {
        static std::atomic<int> counter{0};
        dir = fs::temp_directory_path() /
              ("centrank_cli_" + std::to_string(counter.fetch_add(1)));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
    std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void require_same_tree(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a))
        names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    REQUIRE_FALSE(names.empty());
    for (const std::string& name : names) {
        INFO("file " << name);
        REQUIRE(fs::exists(b / name));
        REQUIRE(slurp(a / name) == slurp(b / name));
    }
}

const std::string kGenerateConfig =
    "# smoke dataset\n"
    "[run]\n"
    "seed = 11\n"
    "\n"
    "[generate]\n"
    "name = smoke\n"
    "spec = erdos-renyi p=0.3 n=8..12 count=6 seed=5\n";

std::string train_config(std::size_t epochs, bool resume) {
    std::ostringstream cfg;
    cfg << "[run]\nseed = 3\n\n[train]\n"
        << "dataset = data/smoke\n"
        << "probe = data/smoke\n"
        << "d = 4\nt_max = 2\nepochs = " << epochs
        << "\nbatches_per_epoch = 2\nbatch_size = 3\n"
        << "mode = rn\ncentralities = degree\n";
    if (resume) cfg << "resume = true\n";
    return cfg.str();
}

// Generates the shared smoke dataset under <scratch>/data/smoke.
void make_smoke(const Scratch& s) {
    const fs::path cfg = s.file("gen.ini", kGenerateConfig);
    RunResult r = run({"generate", "--config", cfg.string(), "--out-dir", s.path("data")});
    INFO(r.err);
    REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("argument plumbing") {
    REQUIRE(run({}).code == 2);
    REQUIRE(run({"frobnicate"}).code == 2);
    REQUIRE(run({"eval"}).code == 2);  // missing required options

    RunResult help = run({"--help"});
    REQUIRE(help.code == 0);
    REQUIRE(help.out.find("generate") != std::string::npos);
    REQUIRE(help.out.find("ingest-real") != std::string::npos);
}

TEST_CASE("generate command") {
    Scratch s;

    SECTION("writes the dataset and reports instance and edge counts") {
        const fs::path cfg = s.file("gen.ini", kGenerateConfig);
        RunResult r = run({"generate", "--config", cfg.string(), "--out-dir", s.path("a")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("6 instances") != std::string::npos);
        REQUIRE(r.out.find("wrote") != std::string::npos);

        Dataset ds = load_dataset(s.dir / "a" / "smoke");
        REQUIRE(ds.name == "smoke");
        REQUIRE(ds.instances.size() == 6);
        for (const Instance& inst : ds.instances) {
            REQUIRE(inst.graph.n >= 8);
            REQUIRE(inst.graph.n <= 12);
        }
    }

    SECTION("two runs with the same config and seed are byte-identical") {
        const fs::path cfg = s.file("gen.ini", kGenerateConfig);
        REQUIRE(run({"generate", "--config", cfg.string(), "--out-dir", s.path("a")}).code == 0);
        REQUIRE(run({"generate", "--config", cfg.string(), "--out-dir", s.path("b")}).code == 0);
        require_same_tree(s.dir / "a" / "smoke", s.dir / "b" / "smoke");
    }

    SECTION("the seed flag overrides the config seed") {
        const fs::path cfg = s.file("gen.ini", kGenerateConfig);
        // The spec line pins seed=5, so flag-level seed must not change it.
        REQUIRE(run({"generate", "--config", cfg.string(), "--out-dir", s.path("a")}).code == 0);
        REQUIRE(run({"generate", "--config", cfg.string(), "--out-dir", s.path("b"), "--seed",
                     "77"}).code == 0);
        require_same_tree(s.dir / "a" / "smoke", s.dir / "b" / "smoke");

        const fs::path cfg2 = s.file(
            "gen2.ini", "[generate]\nname = smoke\nspec = erdos-renyi p=0.3 n=8..12 count=6\n");
        REQUIRE(run({"generate", "--config", cfg2.string(), "--out-dir", s.path("c"), "--seed",
                     "1"}).code == 0);
        REQUIRE(run({"generate", "--config", cfg2.string(), "--out-dir", s.path("d"), "--seed",
                     "2"}).code == 0);
        REQUIRE(slurp(s.dir / "c/smoke/graph_000000.graph") !=
                slurp(s.dir / "d/smoke/graph_000000.graph"));
    }

    SECTION("preset datasets come from named recipes") {
        const fs::path cfg = s.file("gen.ini", "[generate]\npreset = different\ncount = 1\n");
        RunResult r = run({"generate", "--config", cfg.string(), "--out-dir", s.path("a")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        Dataset ds = load_dataset(s.dir / "a" / "different");
        REQUIRE(ds.instances.size() == 2);  // one per family in the recipe
        for (const Instance& inst : ds.instances) {
            REQUIRE(inst.graph.n >= 32);
            REQUIRE(inst.graph.n <= 128);
        }
    }

    SECTION("config mistakes exit with code 2 and name the offender") {
        RunResult missing = run({"generate", "--config", s.path("absent.ini")});
        REQUIRE(missing.code == 2);

        const fs::path bad_key = s.file("k.ini", "[generate]\npresett = train\n");
        RunResult r1 = run({"generate", "--config", bad_key.string()});
        REQUIRE(r1.code == 2);
        REQUIRE(r1.err.find("presett") != std::string::npos);

        const fs::path bad_family =
            s.file("f.ini", "[generate]\nspec = zipf-graph n=8..10 count=2\n");
        RunResult r2 = run({"generate", "--config", bad_family.string()});
        REQUIRE(r2.code == 2);
        REQUIRE(r2.err.find("zipf-graph") != std::string::npos);

        const fs::path both = s.file(
            "b.ini", "[generate]\npreset = train\nspec = erdos-renyi p=0.2 n=8..10 count=2\n");
        REQUIRE(run({"generate", "--config", both.string()}).code == 2);

        const fs::path bad_section = s.file("s.ini", "[generaet]\npreset = train\n");
        RunResult r3 = run({"generate", "--config", bad_section.string()});
        REQUIRE(r3.code == 2);
        REQUIRE(r3.err.find("generaet") != std::string::npos);

        const fs::path no_eq = s.file("e.ini", "[generate]\npreset train\n");
        REQUIRE(run({"generate", "--config", no_eq.string()}).code == 2);
    }
}

TEST_CASE("train command") {
    Scratch s;
    make_smoke(s);

    SECTION("trains, logs, and reports probe accuracy") {
        const fs::path cfg = s.file("train.ini", train_config(2, false));
        RunResult r = run({"train", "--config", cfg.string(), "--out-dir", s.path("t1")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("final probe accuracy: 0.") != std::string::npos);
        REQUIRE(fs::exists(s.dir / "t1/model.ck"));

        const std::string log = slurp(s.dir / "t1/epoch_log.csv");
        REQUIRE(log.rfind("epoch,loss_degree,probe_accuracy\n", 0) == 0);
        REQUIRE(std::count(log.begin(), log.end(), '\n') == 3);

        TrainedModel model = load_model(s.dir / "t1/model.ck");
        REQUIRE(model.epochs_done == 2);
        REQUIRE(model.config.d == 4);
        REQUIRE(model.config.seed == 3);
    }

    SECTION("identical runs and resumed runs produce byte-identical artifacts") {
        const fs::path cfg2 = s.file("train2.ini", train_config(2, false));
        REQUIRE(run({"train", "--config", cfg2.string(), "--out-dir", s.path("t1")}).code == 0);
        REQUIRE(run({"train", "--config", cfg2.string(), "--out-dir", s.path("t2")}).code == 0);
        REQUIRE(slurp(s.dir / "t1/model.ck") == slurp(s.dir / "t2/model.ck"));
        REQUIRE(slurp(s.dir / "t1/epoch_log.csv") == slurp(s.dir / "t2/epoch_log.csv"));

        // Interrupt after one epoch, then resume to two.
        const fs::path cfg1 = s.file("train1.ini", train_config(1, false));
        const fs::path cfgr = s.file("trainr.ini", train_config(2, true));
        REQUIRE(run({"train", "--config", cfg1.string(), "--out-dir", s.path("r")}).code == 0);
        RunResult resumed = run({"train", "--config", cfgr.string(), "--out-dir", s.path("r")});
        INFO(resumed.err);
        REQUIRE(resumed.code == 0);
        REQUIRE(resumed.out.find("trained epochs 2..2") != std::string::npos);
        REQUIRE(slurp(s.dir / "r/model.ck") == slurp(s.dir / "t1/model.ck"));
        REQUIRE(slurp(s.dir / "r/epoch_log.csv") == slurp(s.dir / "t1/epoch_log.csv"));
    }

    SECTION("resume refuses a checkpoint trained under another configuration") {
        const fs::path cfg1 = s.file("train1.ini", train_config(1, false));
        REQUIRE(run({"train", "--config", cfg1.string(), "--out-dir", s.path("r")}).code == 0);
        std::string other = train_config(2, true);
        other.replace(other.find("seed = 3"), 8, "seed = 4");
        const fs::path cfgo = s.file("traino.ini", other);
        RunResult r = run({"train", "--config", cfgo.string(), "--out-dir", s.path("r")});
        REQUIRE(r.code == 2);
        REQUIRE(r.err.find("different configuration") != std::string::npos);
    }

    SECTION("missing dataset directory exits with code 2") {
        std::string cfg_text = train_config(1, false);
        cfg_text.replace(cfg_text.find("data/smoke"), 10, "data/ghost");
        const fs::path cfg = s.file("train.ini", cfg_text);
        RunResult r = run({"train", "--config", cfg.string(), "--out-dir", s.path("t")});
        REQUIRE(r.code == 2);
        REQUIRE(r.err.find("dataset not found") != std::string::npos);
    }
}

TEST_CASE("eval command") {
    Scratch s;
    make_smoke(s);
    const fs::path cfg = s.file("train.ini", train_config(2, false));
    REQUIRE(run({"train", "--config", cfg.string(), "--out-dir", s.path("t")}).code == 0);
    const std::string ck = s.path("t/model.ck");
    const std::string ds = s.path("data/smoke");

    SECTION("emits table, records, and optional size sweep") {
        RunResult r = run({"eval", "--checkpoint", ck, "--dataset", ds, "--out-dir",
                           s.path("e"), "--sizes"});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("degree") != std::string::npos);
        REQUIRE(r.out.find("average") != std::string::npos);

        const std::string table = slurp(s.dir / "e/metrics.txt");
        REQUIRE(table.find("centrality") != std::string::npos);

        std::istringstream records(slurp(s.dir / "e/metrics.ndjson"));
        std::string line;
        REQUIRE(std::getline(records, line));
        const auto rec = nlohmann::json::parse(line);
        REQUIRE(rec.at("dataset") == "smoke");
        REQUIRE(rec.at("centrality") == "degree");

        const std::string sizes = slurp(s.dir / "e/sizes.csv");
        REQUIRE(sizes.rfind("n,count,accuracy_degree\n", 0) == 0);
    }

    SECTION("re-evaluation is byte-identical") {
        REQUIRE(run({"eval", "--checkpoint", ck, "--dataset", ds, "--out-dir", s.path("e1")})
                    .code == 0);
        REQUIRE(run({"eval", "--checkpoint", ck, "--dataset", ds, "--out-dir", s.path("e2")})
                    .code == 0);
        require_same_tree(s.dir / "e1", s.dir / "e2");
    }

    SECTION("architecture flags must agree with the checkpoint") {
        RunResult bad_d =
            run({"eval", "--checkpoint", ck, "--dataset", ds, "--d", "8"});
        REQUIRE(bad_d.code == 2);
        REQUIRE(bad_d.err.find("disagrees") != std::string::npos);
        RunResult bad_t =
            run({"eval", "--checkpoint", ck, "--dataset", ds, "--t-max", "7"});
        REQUIRE(bad_t.code == 2);
        RunResult good = run({"eval", "--checkpoint", ck, "--dataset", ds, "--d", "4",
                              "--t-max", "2", "--out-dir", s.path("g")});
        REQUIRE(good.code == 0);
    }

    SECTION("missing checkpoint exits with code 2") {
        RunResult r = run({"eval", "--checkpoint", s.path("ghost.ck"), "--dataset", ds});
        REQUIRE(r.code == 2);
        REQUIRE(r.err.find("checkpoint not found") != std::string::npos);
    }
}

TEST_CASE("ingest-real command") {
    Scratch s;
    const fs::path tri = s.file("tri.txt", "# triangle plus tail\n0 1\n1 2\n2 0\n2 3\n");
    const fs::path quad = s.file(
        "quad.mtx", "%%MatrixMarket matrix coordinate pattern symmetric\n4 4 3\n1 2\n2 3\n3 4\n");

    SECTION("ingests and appends across invocations") {
        RunResult r1 = run({"ingest-real", tri.string(), "--out-dir", s.path("i")});
        INFO(r1.err);
        REQUIRE(r1.code == 0);
        REQUIRE(r1.out.find("n=4") != std::string::npos);
        REQUIRE(r1.out.find("oracle") != std::string::npos);

        RunResult r2 = run({"ingest-real", quad.string(), "--out-dir", s.path("i")});
        REQUIRE(r2.code == 0);
        Dataset ds = load_dataset(s.dir / "i/real");
        REQUIRE(ds.instances.size() == 2);
        REQUIRE(ds.provenance_files ==
                std::vector<std::string>{"tri.txt", "quad.mtx"});
        REQUIRE(ds.instances[0].graph.edge_count() == 4);
        REQUIRE(ds.instances[1].graph.edge_count() == 3);
    }

    SECTION("extension dispatch can be overridden but never guessed") {
        const fs::path odd = s.file("odd.dat", "0 1\n1 2\n");
        RunResult bare = run({"ingest-real", odd.string(), "--out-dir", s.path("i")});
        REQUIRE(bare.code == 2);
        REQUIRE(bare.err.find("unsupported") != std::string::npos);
        RunResult forced =
            run({"ingest-real", odd.string(), "--format", "snap", "--out-dir", s.path("i")});
        REQUIRE(forced.code == 0);
        RunResult wrong =
            run({"ingest-real", odd.string(), "--format", "sanp", "--out-dir", s.path("i")});
        REQUIRE(wrong.code == 2);
    }

    SECTION("a refused centrality is stored absent, not fatal") {
        // Self-loops only: the cleaned graph has three vertices and no edges,
        // which the eigenvector oracle refuses.
        const fs::path loops = s.file("loops.txt", "0 0\n1 1\n2 2\n");
        RunResult r = run({"ingest-real", loops.string(), "--out-dir", s.path("i")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("eigenvector marked absent") != std::string::npos);
        Dataset ds = load_dataset(s.dir / "i/real");
        REQUIRE(ds.instances.size() == 1);
        const auto& eig = ds.instances[0].values[std::size_t(Measure::Eigenvector)];
        for (double v : eig) REQUIRE(std::isnan(v));
        const auto& deg = ds.instances[0].values[std::size_t(Measure::Degree)];
        for (double v : deg) REQUIRE(v == 0.0);
    }

    SECTION("malformed lines report the line number") {
        const fs::path bad = s.file("bad.txt", "0 1\nnot an edge\n");
        RunResult r = run({"ingest-real", bad.string(), "--out-dir", s.path("i")});
        REQUIRE(r.code == 1);
        REQUIRE(r.err.find("line 2") != std::string::npos);
    }
}

TEST_CASE("pca command") {
    Scratch s;
    make_smoke(s);
    const fs::path cfg = s.file("train.ini", train_config(1, false));
    REQUIRE(run({"train", "--config", cfg.string(), "--out-dir", s.path("t")}).code == 0);
    const std::string ck = s.path("t/model.ck");
    const fs::path tri = s.file("tri.txt", "0 1\n1 2\n2 0\n2 3\n");

    SECTION("emits one block per step with the declared columns") {
        RunResult r = run({"pca", "--checkpoint", ck, "--graph", tri.string(), "--out-dir",
                           s.path("p")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("step 0: degenerate") != std::string::npos);

        const std::string csv = slurp(s.dir / "p/pca.csv");
        REQUIRE(csv.rfind("step,vertex,projection,degree,betweenness,closeness,eigenvector\n",
                          0) == 0);
        // t_max = 2 → steps 0..2 of a 4-vertex graph, plus the header line.
        REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 13);
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);  // header
        for (int i = 0; i < 4; ++i) {
            std::getline(lines, line);
            REQUIRE(line.rfind("0," + std::to_string(i) + ",0.5,", 0) == 0);
        }
    }

    SECTION("reruns are byte-identical") {
        REQUIRE(run({"pca", "--checkpoint", ck, "--graph", tri.string(), "--out-dir",
                     s.path("p1")}).code == 0);
        REQUIRE(run({"pca", "--checkpoint", ck, "--graph", tri.string(), "--out-dir",
                     s.path("p2")}).code == 0);
        REQUIRE(slurp(s.dir / "p1/pca.csv") == slurp(s.dir / "p2/pca.csv"));
    }

    SECTION("a single-vertex graph degenerates with a warning, not an error") {
        const fs::path solo = s.file("solo.txt", "0 0\n");
        RunResult r = run({"pca", "--checkpoint", ck, "--graph", solo.string(), "--out-dir",
                           s.path("p")});
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(r.out.find("single-vertex") != std::string::npos);
        const std::string csv = slurp(s.dir / "p/pca.csv");
        REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 steps
        REQUIRE(csv.find("0,0,0.5,") != std::string::npos);
    }

    SECTION("missing checkpoint exits with code 2") {
        RunResult r = run({"pca", "--checkpoint", s.path("ghost.ck"), "--graph", tri.string()});
        REQUIRE(r.code == 2);
    }
}
