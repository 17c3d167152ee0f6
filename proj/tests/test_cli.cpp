#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& scratch_root() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "amfm_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    REQUIRE(out.good());
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const int id = counter++;
    const fs::path out = scratch_root() / ("out" + std::to_string(id) + ".txt");
    const fs::path err = scratch_root() / ("err" + std::to_string(id) + ".txt");
    const std::string cmd = std::string("\"") + AMFM_CLI_PATH + "\" " + args + " > \"" +
                            out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

int count_pgms(const fs::path& dir) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".pgm" ? 1 : 0;
    return n;
}

// Artifacts shared across cases, produced through the binary itself.
struct Artifacts {
    fs::path dir;
    fs::path filter;       // 31-tap 8-bit refined filter
    fs::path bank;         // default bank
    fs::path corpus;       // 3 videos x 2 frames
    fs::path dataset;      // original-kind blocks of the corpus
};

const Artifacts& artifacts() {
    static const Artifacts a = [] {
        Artifacts art;
        art.dir = scratch_root() / "artifacts";
        fs::create_directories(art.dir);
        art.filter = art.dir / "filter.txt";
        art.bank = art.dir / "bank.txt";
        art.corpus = art.dir / "corpus";
        art.dataset = art.dir / "blocks.afmd";

        RunResult r = run_cli("design-filter --taps 31 --beta 4 --transition 0.2 --n-fft 256"
                              " --bits 8 --iters 200 --seed 3 --out \"" +
                              art.filter.string() + "\"");
        REQUIRE(r.code == 0);
        r = run_cli("filterbank --out \"" + art.bank.string() + "\"");
        REQUIRE(r.code == 0);
        r = run_cli("dataset synth --out-dir \"" + art.corpus.string() +
                    "\" --videos 3 --frames 2 --seed 5 --threads 2");
        REQUIRE(r.code == 0);
        r = run_cli("dataset build --corpus \"" + art.corpus.string() +
                    "\" --input-kind original --out \"" + art.dataset.string() +
                    "\" --threads 2");
        REQUIRE(r.code == 0);
        return art;
    }();
    return a;
}

} // namespace

TEST_CASE("help and version exit cleanly") {
    RunResult r = run_cli("--help");
    CHECK(r.code == 0);
    for (const char* name : {"design-filter", "filterbank", "demodulate", "dataset", "train",
                             "evaluate", "pipeline"})
        CHECK(contains(r.out, name));

    for (const char* cmd : {"design-filter", "filterbank", "demodulate", "dataset",
                            "dataset synth", "dataset build", "dataset inspect", "train",
                            "evaluate", "pipeline"}) {
        r = run_cli(std::string(cmd) + " --help");
        CHECK(r.code == 0);
        CHECK(!r.out.empty());
    }

    r = run_cli("--version");
    CHECK(r.code == 0);
    CHECK(!r.out.empty());
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run_cli("").code == 1);
    CHECK(run_cli("frobnicate").code == 1);
    CHECK(run_cli("design-filter").code == 1);                    // missing --out
    CHECK(run_cli("dataset").code == 1);                          // missing subcommand
    CHECK(run_cli("demodulate --image x.pgm").code == 1);         // missing required flags
    CHECK(run_cli("filterbank").code == 1);                       // neither --out nor --report

    const fs::path out = scratch_root() / "unused.afmd";
    RunResult r = run_cli("dataset build --corpus nowhere --input-kind wavelet --out \"" +
                          out.string() + "\"");
    CHECK(r.code == 1);

    // Library-level rejection surfaces as a usage error too.
    r = run_cli("design-filter --taps 30 --out \"" + (scratch_root() / "even.txt").string() +
                "\"");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "error:"));
}

TEST_CASE("config file errors exit with 2") {
    const fs::path dir = scratch_root() / "configs";
    fs::create_directories(dir);
    const std::string out = " --out \"" + (dir / "f.txt").string() + "\"";

    spit(dir / "broken.json", "{ \"seed\": ");
    RunResult r = run_cli("design-filter --config \"" + (dir / "broken.json").string() + "\"" + out);
    CHECK(r.code == 2);

    spit(dir / "array.json", "[1, 2]");
    CHECK(run_cli("design-filter --config \"" + (dir / "array.json").string() + "\"" + out).code ==
          2);

    spit(dir / "rootkey.json", "{\"sede\": 7}");
    r = run_cli("pipeline --config \"" + (dir / "rootkey.json").string() + "\"");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "sede"));

    spit(dir / "nested.json", "{\"filter\": {\"tapz\": 51}}");
    r = run_cli("design-filter --config \"" + (dir / "nested.json").string() + "\"" + out);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "tapz"));

    spit(dir / "badtype.json", "{\"filter\": {\"taps\": \"fifty\"}}");
    CHECK(run_cli("design-filter --config \"" + (dir / "badtype.json").string() + "\"" + out)
              .code == 2);

    CHECK(run_cli("design-filter --config \"" + (dir / "absent.json").string() + "\"" + out)
              .code == 2);
}

TEST_CASE("design-filter writes fixed-point and float filter files") {
    const Artifacts& art = artifacts();
    const std::string text = slurp(art.filter);
    CHECK(text.rfind("taps=31 bits=8", 0) == 0);

    RunResult r = run_cli("design-filter --taps 31 --beta 4 --transition 0.2 --n-fft 256"
                          " --float --out \"" +
                          (scratch_root() / "float.txt").string() + "\"");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "designed 31 taps"));
    CHECK(slurp(scratch_root() / "float.txt").rfind("taps=31 bits=float", 0) == 0);
}

TEST_CASE("filterbank report prints one row per channel") {
    RunResult r = run_cli("filterbank --report --report-n-fft 96");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "channel scale theta"));
    int rows = 0;
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line)) {
        const size_t first = line.find_first_not_of(' ');
        if (first != std::string::npos &&
            std::isdigit(static_cast<unsigned char>(line[first])))
            ++rows;
    }
    CHECK(rows == 16);
}

TEST_CASE("demodulate writes the six plane images") {
    const Artifacts& art = artifacts();
    const fs::path dir = scratch_root() / "demod";
    fs::create_directories(dir);

    // 64x64 cosine probe as a plain text PGM.
    std::ostringstream pgm;
    pgm << "P2\n64 64\n255\n";
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
            pgm << static_cast<int>(std::lround(
                       127.0 + 100.0 * std::cos(2.0 * std::numbers::pi * (10.0 * c - 5.0 * r) / 64.0)))
                << (c == 63 ? "\n" : " ");
    spit(dir / "probe.pgm", pgm.str());

    RunResult r = run_cli("demodulate --image \"" + (dir / "probe.pgm").string() +
                          "\" --filter \"" + art.filter.string() + "\" --bank \"" +
                          art.bank.string() + "\" --out-dir \"" + (dir / "planes").string() +
                          "\" --threads 2");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "demodulated 64x64"));
    for (const char* name : {"ia", "ip", "fm", "channel", "if_x", "if_y"}) {
        const fs::path plane = dir / "planes" / (std::string(name) + ".pgm");
        CHECK(fs::exists(plane));
        CHECK(slurp(plane).rfind("P5", 0) == 0);
    }

    r = run_cli("demodulate --image \"" + (dir / "missing.pgm").string() + "\" --filter \"" +
                art.filter.string() + "\" --bank \"" + art.bank.string() + "\" --out-dir \"" +
                (dir / "planes2").string() + "\"");
    CHECK(r.code == 2);
}

TEST_CASE("dataset synth, build and inspect agree on the corpus shape") {
    const Artifacts& art = artifacts();
    CHECK(fs::exists(art.corpus / "annotations.csv"));
    CHECK(count_pgms(art.corpus / "frames") == 6);

    RunResult r = run_cli("dataset inspect \"" + art.dataset.string() + "\"");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "blocks 270"));
    CHECK(contains(r.out, "block_dims 50x50x1"));
    CHECK(contains(r.out, "input_kind original"));
    CHECK(contains(r.out, "videos 3"));
    CHECK(contains(r.out, "frames 6"));
    CHECK(contains(r.out, "positive_blocks"));
    CHECK(contains(r.out, "mean_target"));

    CHECK(run_cli("dataset inspect \"" + (scratch_root() / "absent.afmd").string() + "\"").code ==
          2);
    spit(scratch_root() / "junk.afmd", "hardly a dataset");
    CHECK(run_cli("dataset inspect \"" + (scratch_root() / "junk.afmd").string() + "\"").code == 2);
}

TEST_CASE("dataset build demodulates when asked for fm blocks") {
    const Artifacts& art = artifacts();
    const fs::path dir = scratch_root() / "fm_flow";
    fs::create_directories(dir);

    RunResult r = run_cli("dataset synth --out-dir \"" + (dir / "corpus").string() +
                          "\" --videos 1 --frames 1 --seed 2 --threads 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "wrote 1 videos x 1 frames"));

    // Demodulated kinds refuse to run without the filter and bank.
    r = run_cli("dataset build --corpus \"" + (dir / "corpus").string() +
                "\" --input-kind fm --out \"" + (dir / "fm.afmd").string() + "\"");
    CHECK(r.code == 1);

    r = run_cli("dataset build --corpus \"" + (dir / "corpus").string() +
                "\" --input-kind fm --filter \"" + art.filter.string() + "\" --bank \"" +
                art.bank.string() + "\" --out \"" + (dir / "fm.afmd").string() + "\" --threads 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "wrote 45 blocks (fm)"));

    r = run_cli("dataset inspect \"" + (dir / "fm.afmd").string() + "\"");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "blocks 45"));
    CHECK(contains(r.out, "input_kind fm"));
}

TEST_CASE("train and evaluate round trip on CLI artifacts") {
    const Artifacts& art = artifacts();
    const fs::path dir = scratch_root() / "train_flow";
    fs::create_directories(dir);
    const fs::path net_single = dir / "net_single.afmn";
    const fs::path net_multi = dir / "net_multi.afmn";

    RunResult r = run_cli("train --dataset \"" + art.dataset.string() + "\" --out \"" +
                          net_single.string() + "\" --history \"" + (dir / "history.csv").string() +
                          "\" --loss-svg \"" + (dir / "loss.svg").string() +
                          "\" --epochs 1 --batch-size 45 --threads 2 --seed 3");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "train single: epochs 1"));
    CHECK(fs::exists(net_single));
    CHECK(slurp(dir / "history.csv").rfind("epoch,train_loss,val_loss,train_auc,val_auc", 0) == 0);
    CHECK(slurp(dir / "loss.svg").find("<svg") != std::string::npos);

    r = run_cli("train --mode multi --dataset \"" + art.dataset.string() + "\" --out \"" +
                net_multi.string() + "\" --epochs 1 --batch-size 2 --threads 2 --seed 3");
    CHECK(r.code == 1); // --single-net is mandatory in multi mode
    r = run_cli("train --mode multi --dataset \"" + art.dataset.string() + "\" --single-net \"" +
                net_single.string() + "\" --out \"" + net_multi.string() +
                "\" --epochs 1 --batch-size 2 --threads 2 --seed 3");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "train multi: epochs 1"));

    r = run_cli("evaluate --dataset \"" + art.dataset.string() + "\" --net \"" +
                net_single.string() + "\" --out-dir \"" + (dir / "eval_single").string() +
                "\" --threads 2");
    REQUIRE(r.code == 0);
    json m = json::parse(slurp(dir / "eval_single" / "metrics.json"));
    CHECK(m.at("blocks").get<int>() == 270);
    CHECK(m.at("auc").at("single").get<double>() >= 0.0);
    CHECK(m.at("auc").at("single").get<double>() <= 1.0);
    CHECK(!m.at("auc").contains("multi"));
    const json& c = m.at("confusion");
    CHECK(c.at("tp").get<int>() + c.at("fp").get<int>() + c.at("tn").get<int>() +
              c.at("fn").get<int>() ==
          270);

    r = run_cli("evaluate --dataset \"" + art.dataset.string() + "\" --net \"" +
                net_single.string() + "\" --multi \"" + net_multi.string() + "\" --out-dir \"" +
                (dir / "eval_multi").string() + "\" --threads 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "auc single"));
    m = json::parse(slurp(dir / "eval_multi" / "metrics.json"));
    CHECK(m.at("auc").contains("multi"));
    CHECK(fs::exists(dir / "eval_multi" / "roc.csv"));
    CHECK(fs::exists(dir / "eval_multi" / "roc.svg"));
    CHECK(fs::exists(dir / "eval_multi" / "overlay_v00_0.ppm"));
}

TEST_CASE("pipeline produces the full artifact set") {
    const fs::path dir = scratch_root() / "pipeline";
    fs::create_directories(dir);
    spit(dir / "run.json", R"({
  "filter": {"taps": 31, "kaiser_beta": 4.0, "transition": 0.2, "n_fft": 256, "bits": 8,
             "sa": {"max_iterations": 200}},
  "dataset": {"input_kind": "original", "synth": {"videos": 3, "frames_per_video": 2}},
  "split": {"validation_fraction": 0.5},
  "train": {"epochs": 2, "batch_size": 45, "threads": 2},
  "multi_train": {"epochs": 2, "batch_size": 2, "threads": 2}
})");

    const fs::path out = dir / "run";
    RunResult r = run_cli("pipeline --config \"" + (dir / "run.json").string() +
                          "\" --seed 7 --out-dir \"" + out.string() + "\" --threads 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "corpus: 3 videos x 2 frames"));
    CHECK(contains(r.out, "dataset: 270 blocks (original)"));
    CHECK(contains(r.out, "auc: single"));

    for (const char* name :
         {"filter.txt", "bank.txt", "net_single.afmn", "net_multi.afmn", "history_single.csv",
          "history_multi.csv", "loss_single.svg", "loss_multi.svg", "roc_single.csv",
          "roc_single.svg", "roc_multi.csv", "roc_multi.svg", "metrics.json"})
        CHECK(fs::exists(out / name));
    CHECK(count_pgms(out / "corpus" / "frames") == 6);
    CHECK(fs::exists(out / "overlay_v02_0.ppm"));

    const json m = json::parse(slurp(out / "metrics.json"));
    CHECK(m.at("seed").get<int>() == 7);
    CHECK(m.at("input_kind").get<std::string>() == "original");
    CHECK(m.at("filter").at("taps").get<int>() == 31);
    CHECK(m.at("filter").at("objective_refined").get<double>() >=
          m.at("filter").at("objective_quantized").get<double>());
    CHECK(m.at("videos").at("train") == json::array({"v00"}));
    CHECK(m.at("videos").at("validation") == json::array({"v01"}));
    CHECK(m.at("videos").at("test") == json::array({"v02"}));
    CHECK(m.at("blocks").at("train").get<int>() == 90);
    CHECK(m.at("blocks").at("validation").get<int>() == 90);
    CHECK(m.at("blocks").at("test").get<int>() == 90);
    for (const char* key : {"single", "multi"}) {
        const double auc = m.at("auc").at(key).get<double>();
        CHECK(auc >= 0.0);
        CHECK(auc <= 1.0);
    }
}
