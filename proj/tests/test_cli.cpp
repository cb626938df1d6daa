#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "binsleuth/rng.hpp"
#include "support/elf_fixture.hpp"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out; // stdout only; stderr goes to a side file per run
    std::string err;
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("binsleuth-cli-" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

// Runs the installed CLI with `args` (already shell-quoted where needed),
// capturing stdout, stderr, and the exit code.
RunResult run_cli(const std::string& args, const std::string& env = "") {
    static int serial = 0;
    const std::string err_path =
        (std::filesystem::temp_directory_path() /
         ("binsleuth-cli-err-" + std::to_string(::getpid()) + "-" + std::to_string(serial++)))
            .string();
    const std::string cmd = env + (env.empty() ? "" : " ") + BINSLEUTH_CLI_PATH + " " + args +
                            " 2>" + shell_quote(err_path);
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = slurp(err_path);
    std::filesystem::remove(err_path);
    return result;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> little_elf(const std::vector<std::uint8_t>& text) {
    elffix::Builder builder(true, false);
    return builder.build({{".text", 1, 0x4, text, 0}});
}

// A tiny but valid corpus on disk: synth output plus its manifest.
std::string make_corpus(const TempDir& dir, int files_per_spec = 4, int bytes = 4096,
                        int seed = 5) {
    const auto r = run_cli("synth --out " + shell_quote(dir.file("corpus")) +
                           " --files-per-spec " + std::to_string(files_per_spec) + " --bytes " +
                           std::to_string(bytes) + " --seed " + std::to_string(seed));
    REQUIRE(r.exit_code == 0);
    return dir.file("corpus") + "/manifest.jsonl";
}

} // namespace

TEST_CASE("carve failures use exit 1 with the error code named on stderr") {
    TempDir dir("badmagic");
    write_file(dir.file("plain.bin"), {1, 2, 3, 4, 5, 6, 7, 8});
    const auto r = run_cli("carve " + shell_quote(dir.file("plain.bin")));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("BadMagic") != std::string::npos);

    const auto raw = run_cli("carve --raw " + shell_quote(dir.file("plain.bin")));
    CHECK(raw.exit_code == 0);
    CHECK(raw.out == std::string("\x01\x02\x03\x04\x05\x06\x07\x08", 8));
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("carve --no-such-flag x").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("--version").out.find("0.1.0") != std::string::npos);
}

TEST_CASE("carve prints bytes to stdout and the summary to stderr") {
    TempDir dir("carve");
    const std::vector<std::uint8_t> text{0x90, 0x31, 0xC0, 0xC3, 0xAA, 0xBB, 0xCC, 0xDD, 0x01,
                                         0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08};
    write_file(dir.file("a.o"), little_elf(text));
    const auto r = run_cli("carve " + shell_quote(dir.file("a.o")));
    CHECK(r.exit_code == 0);
    CHECK(r.out == std::string(text.begin(), text.end()));
    CHECK(r.err.find("1 section, 16 bytes") != std::string::npos);

    // With --out the summary moves to stdout and the bytes land in the file.
    const auto to_file = run_cli("carve --out " + shell_quote(dir.file("code.bin")) + " " +
                                 shell_quote(dir.file("a.o")));
    CHECK(to_file.exit_code == 0);
    CHECK(to_file.out.find("1 section, 16 bytes") != std::string::npos);
    CHECK(slurp(dir.file("code.bin")) == std::string(text.begin(), text.end()));
}

TEST_CASE("featurize emits the 264-column CSV and honors --max-bytes") {
    TempDir dir("feat");
    const std::string manifest = make_corpus(dir);
    const auto r = run_cli("featurize --manifest " + shell_quote(manifest));
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    REQUIRE(std::getline(lines, header));
    CHECK(header.rfind("label,source_id,code_len,sampled_len,f000,", 0) == 0);
    CHECK(std::count(header.begin(), header.end(), ',') == 263);
    int rows = 0;
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 32); // 8 ISAs x 4 files

    const auto capped =
        run_cli("featurize --manifest " + shell_quote(manifest) + " --max-bytes 256");
    CHECK(capped.exit_code == 0);
    CHECK(capped.out.find(",4096,256,") != std::string::npos);
}

TEST_CASE("featurize output is byte-identical across reruns and job counts") {
    TempDir dir("det");
    const std::string manifest = make_corpus(dir);
    const std::string base = "featurize --manifest " + shell_quote(manifest) +
                             " --max-bytes 512 --seed 11";
    const auto a = run_cli(base + " --jobs 1");
    const auto b = run_cli(base + " --jobs 1");
    const auto c = run_cli(base + " --jobs 4");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);

    const auto other = run_cli("featurize --manifest " + shell_quote(manifest) +
                               " --max-bytes 512 --seed 12");
    CHECK(other.out != a.out);
}

TEST_CASE("the seed falls back to BINSLEUTH_SEED and then to 42") {
    TempDir dir("seedenv");
    const std::string manifest = make_corpus(dir, 2, 2048);
    const std::string base = "featurize --manifest " + shell_quote(manifest) + " --max-bytes 128";
    const auto env_seed = run_cli(base, "BINSLEUTH_SEED=11");
    const auto flag_seed = run_cli(base + " --seed 11");
    CHECK(env_seed.out == flag_seed.out);

    // An explicit flag beats the environment.
    const auto flag_wins = run_cli(base + " --seed 11", "BINSLEUTH_SEED=99");
    CHECK(flag_wins.out == flag_seed.out);

    const auto fallback = run_cli(base);
    const auto forty_two = run_cli(base + " --seed 42");
    CHECK(fallback.out == forty_two.out);

    const auto garbage = run_cli(base, "BINSLEUTH_SEED=banana");
    CHECK(garbage.exit_code == 1);
    CHECK(garbage.err.find("DomainError") != std::string::npos);
}

TEST_CASE("train, eval, and predict round-trip through the CSV and model files") {
    TempDir dir("round");
    const std::string manifest = make_corpus(dir, 6, 4096);
    const std::string csv = dir.file("features.csv");
    REQUIRE(run_cli("featurize --manifest " + shell_quote(manifest) + " --out " +
                    shell_quote(csv))
                .exit_code == 0);

    const std::string model = dir.file("model.json");
    const auto trained = run_cli("train --features " + shell_quote(csv) + " --model gnb --out " +
                                 shell_quote(model));
    CHECK(trained.exit_code == 0);
    CHECK(trained.out.find("gnb") != std::string::npos);
    CHECK(slurp(model).find("\"provenance\"") != std::string::npos);

    const auto eval = run_cli("eval --features " + shell_quote(csv) + " --folds 4 --json");
    CHECK(eval.exit_code == 0);
    CHECK(eval.out.find("\"accuracy\"") != std::string::npos);
    CHECK(eval.out.find("\"tool_version\"") != std::string::npos);

    // Pick one corpus file and check prediction output shape.
    std::istringstream manifest_in(slurp(manifest));
    std::string first_line;
    REQUIRE(std::getline(manifest_in, first_line));
    const auto path_at = first_line.find("\"path\":\"") + 8;
    const std::string sample_path = first_line.substr(path_at, first_line.find('"', path_at) - path_at);
    const auto pred = run_cli("predict --model " + shell_quote(model) + " --raw " +
                              shell_quote(sample_path));
    CHECK(pred.exit_code == 0);
    CHECK(pred.out.find(sample_path + "\t") == 0);

    const auto pred_json = run_cli("predict --model " + shell_quote(model) + " --raw --json " +
                                   shell_quote(sample_path));
    CHECK(pred_json.exit_code == 0);
    CHECK(pred_json.out.find("\"scores\"") != std::string::npos);
}

TEST_CASE("predicting with mismatched dimensions is a typed runtime failure") {
    TempDir dir("dim");
    // Hand-written minimal model with feature_dim 3: real inputs have 260.
    std::ofstream model(dir.file("tiny.json"));
    model << R"({
      "classes": ["a", "b"],
      "feature_dim": 3,
      "format_version": 1,
      "kind": "knn",
      "params": {"k": 1, "train_x": [[0,0,0],[1,1,1]], "train_y": [0, 1]}
    })";
    model.close();
    write_file(dir.file("some.bin"), {1, 2, 3, 4, 5, 6, 7, 8});
    const auto r = run_cli("predict --model " + shell_quote(dir.file("tiny.json")) + " --raw " +
                           shell_quote(dir.file("some.bin")));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("DimensionMismatch") != std::string::npos);
}

TEST_CASE("sweep prints the size,model,accuracy CSV") {
    TempDir dir("sweep");
    const std::string manifest = make_corpus(dir, 4, 2048);
    const auto r = run_cli("sweep --manifest " + shell_quote(manifest) +
                           " --sizes 16,256 --model knn:k=1 --model gnb --seed 3");
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    REQUIRE(std::getline(lines, header));
    CHECK(header == "size,model,accuracy");
    std::vector<std::string> rows;
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].rfind("16,knn:k=1,", 0) == 0);
    CHECK(rows[1].rfind("256,knn:k=1,", 0) == 0);
    CHECK(rows[2].rfind("16,gnb,", 0) == 0);
    CHECK(rows[3].rfind("256,gnb,", 0) == 0);

    const auto rerun = run_cli("sweep --manifest " + shell_quote(manifest) +
                               " --sizes 16,256 --model knn:k=1 --model gnb --seed 3");
    CHECK(rerun.out == r.out);
}

TEST_CASE("eval rejects malformed feature CSVs with a typed error") {
    TempDir dir("badcsv");
    std::ofstream bad(dir.file("bad.csv"));
    bad << "label,source_id,code_len,sampled_len,f000\nx,y,1,1,0.5\n";
    bad.close();
    const auto r = run_cli("eval --features " + shell_quote(dir.file("bad.csv")));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("IoError") != std::string::npos);
}
