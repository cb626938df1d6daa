#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "binsleuth/carver.hpp"
#include "binsleuth/corpus.hpp"
#include "binsleuth/error.hpp"
#include "binsleuth/eval.hpp"
#include "binsleuth/features.hpp"
#include "binsleuth/learners.hpp"
#include "binsleuth/parallel.hpp"
#include "binsleuth/rng.hpp"
#include "binsleuth/version.hpp"

namespace {

using binsleuth::Errc;
using binsleuth::Error;
using nlohmann::json;

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value) {
    if (opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("BINSLEUTH_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw Error(Errc::DomainError, std::string("BINSLEUTH_SEED is not a number: ") + env);
        return v;
    }
    return 42;
}

std::string digest_hex(const std::vector<std::uint8_t>& bytes) {
    const std::uint64_t h = binsleuth::fnv1a64(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json input_digests(const std::vector<std::string>& paths) {
    json j = json::object();
    for (const std::string& path : paths) j[path] = digest_hex(binsleuth::read_binary_file(path));
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
    out << text;
    if (!out) throw Error(Errc::IoError, "failed writing " + path);
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

void print_skips(const std::vector<binsleuth::SkippedFile>& skipped) {
    for (const auto& skip : skipped)
        std::cerr << "skipped " << skip.path << ": " << skip.reason << "\n";
}

binsleuth::CodeSample carve_one(const std::string& path, bool raw) {
    const std::vector<std::uint8_t> bytes = binsleuth::read_binary_file(path);
    return raw ? binsleuth::carve_raw(bytes, path)
               : binsleuth::carve_code(binsleuth::parse_elf(bytes), bytes, path);
}

std::vector<binsleuth::FeatureVector> load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    return binsleuth::read_feature_csv(in);
}

binsleuth::Model load_model_file(const std::string& path) {
    const std::vector<std::uint8_t> bytes = binsleuth::read_binary_file(path);
    return binsleuth::load_model(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

int run(int argc, char** argv) {
    CLI::App app{"architecture and endianness classification of compiled object code"};
    app.require_subcommand(1);
    app.set_version_flag("--version", binsleuth::kToolVersion);

    // carve
    auto* carve = app.add_subcommand("carve", "extract code bytes from a binary");
    std::string carve_file;
    bool carve_raw_flag = false;
    std::string carve_out;
    carve->add_option("file", carve_file, "input binary")->required();
    carve->add_flag("--raw", carve_raw_flag, "treat the whole file as code");
    carve->add_option("--out", carve_out, "write code bytes here instead of stdout");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "emit feature vectors as CSV");
    std::string feat_manifest;
    std::vector<std::string> feat_files;
    bool feat_raw = false;
    std::uint64_t feat_max_bytes = 0;
    std::uint64_t feat_seed = 0;
    int feat_jobs = 1;
    std::string feat_out;
    featurize->add_option("--manifest", feat_manifest, "JSON-lines manifest of labeled files");
    featurize->add_option("files", feat_files, "unlabeled input files");
    featurize->add_flag("--raw", feat_raw, "treat bare files as raw code");
    auto* feat_max_opt =
        featurize->add_option("--max-bytes", feat_max_bytes, "sample at most this many bytes");
    auto* feat_seed_opt = featurize->add_option("--seed", feat_seed, "sampling seed");
    featurize->add_option("--jobs", feat_jobs, "worker threads");
    featurize->add_option("--out", feat_out, "output CSV path (default stdout)");

    // train
    auto* train = app.add_subcommand("train", "fit a model on a feature CSV");
    std::string train_features;
    std::string train_model_spec = "tree";
    std::string train_out;
    std::uint64_t train_seed = 0;
    train->add_option("--features", train_features, "feature CSV")->required();
    train->add_option("--model", train_model_spec,
                      "model spec: knn:k=3 | gnb | tree:min_leaf=2 | forest:trees=100 | "
                      "logreg:l2=1e-4,epochs=500,learn_rate=0.5");
    train->add_option("--out", train_out, "model JSON path")->required();
    auto* train_seed_opt = train->add_option("--seed", train_seed, "trainer seed");

    // predict
    auto* predict = app.add_subcommand("predict", "classify files with a trained model");
    std::string pred_model;
    std::vector<std::string> pred_files;
    bool pred_raw = false;
    std::uint64_t pred_max_bytes = 0;
    std::uint64_t pred_seed = 0;
    bool pred_json = false;
    predict->add_option("--model", pred_model, "model JSON")->required();
    predict->add_option("files", pred_files, "binaries to classify")->required();
    predict->add_flag("--raw", pred_raw, "treat files as raw code");
    auto* pred_max_opt =
        predict->add_option("--max-bytes", pred_max_bytes, "sample at most this many bytes");
    auto* pred_seed_opt = predict->add_option("--seed", pred_seed, "sampling seed");
    predict->add_flag("--json", pred_json, "machine-readable output");

    // eval
    auto* eval = app.add_subcommand("eval", "stratified cross-validation on a feature CSV");
    std::string eval_features;
    std::string eval_model_spec = "tree";
    int eval_folds = 10;
    std::uint64_t eval_seed = 0;
    int eval_jobs = 1;
    bool eval_json = false;
    std::string eval_out;
    eval->add_option("--features", eval_features, "feature CSV")->required();
    eval->add_option("--model", eval_model_spec, "model spec");
    eval->add_option("--folds", eval_folds, "fold count");
    auto* eval_seed_opt = eval->add_option("--seed", eval_seed, "fold and trainer seed");
    eval->add_option("--jobs", eval_jobs, "worker threads");
    eval->add_flag("--json", eval_json, "emit JSON report");
    eval->add_option("--out", eval_out, "report path (default stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "fragment-size accuracy sweep");
    std::string sweep_manifest;
    std::vector<std::uint64_t> sweep_sizes;
    std::vector<std::string> sweep_models;
    std::uint64_t sweep_seed = 0;
    int sweep_jobs = 1;
    bool sweep_json = false;
    std::string sweep_out;
    sweep->add_option("--manifest", sweep_manifest, "JSON-lines manifest")->required();
    sweep->add_option("--sizes", sweep_sizes, "max sample sizes in bytes")
        ->required()
        ->delimiter(',');
    sweep->add_option("--model", sweep_models,
                      "model spec, repeatable (default: knn:k=1 knn:k=3 gnb tree forest logreg)");
    auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "holdout and sampling seed");
    sweep->add_option("--jobs", sweep_jobs, "worker threads");
    sweep->add_flag("--json", sweep_json, "emit JSON instead of CSV");
    sweep->add_option("--out", sweep_out, "output path (default stdout)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-ISA corpus");
    std::string synth_specs;
    std::string synth_out;
    int synth_files = 200;
    std::uint64_t synth_bytes = 32768;
    std::uint64_t synth_seed = 0;
    synth->add_option("--specs", synth_specs, "spec JSON (default: built-in 8-ISA set)");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--files-per-spec", synth_files, "files generated per ISA");
    synth->add_option("--bytes", synth_bytes, "bytes per file");
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "generation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (carve->parsed()) {
        const binsleuth::CodeSample sample = carve_one(carve_file, carve_raw_flag);
        std::ostringstream summary;
        summary << sample.section_count() << (sample.section_count() == 1 ? " section, " : " sections, ")
                << sample.bytes.size() << " bytes\n";
        if (carve_out.empty()) {
            std::cout.write(reinterpret_cast<const char*>(sample.bytes.data()),
                            static_cast<std::streamsize>(sample.bytes.size()));
            std::cerr << summary.str();
        } else {
            write_text_file(carve_out,
                            std::string(sample.bytes.begin(), sample.bytes.end()));
            std::cout << summary.str();
        }
        return 0;
    }

    if (featurize->parsed()) {
        binsleuth::DatasetManifest manifest;
        if (!feat_manifest.empty()) manifest = binsleuth::load_manifest_file(feat_manifest);
        for (const std::string& path : feat_files) {
            binsleuth::ManifestEntry entry;
            entry.path = path;
            entry.mode = feat_raw ? binsleuth::CarveMode::Raw : binsleuth::CarveMode::Elf;
            manifest.entries.push_back(std::move(entry));
        }
        if (manifest.entries.empty()) {
            std::cerr << "featurize: need --manifest or input files\n";
            return 2;
        }
        binsleuth::BuildOptions options;
        if (feat_max_opt->count() > 0) options.fragment_bytes = feat_max_bytes;
        options.seed = resolve_seed(feat_seed_opt, feat_seed);
        options.jobs = feat_jobs;
        const binsleuth::FeaturizeResult result =
            binsleuth::featurize_manifest(manifest, options);
        print_skips(result.skipped);
        std::ostringstream csv;
        binsleuth::write_feature_csv(csv, result.features);
        emit(csv.str(), feat_out);
        return 0;
    }

    if (train->parsed()) {
        const std::uint64_t seed = resolve_seed(train_seed_opt, train_seed);
        const binsleuth::Dataset data = binsleuth::make_dataset(load_features(train_features));
        const binsleuth::ModelSpec spec = binsleuth::parse_model_spec(train_model_spec);
        const binsleuth::Model model = binsleuth::train_model(data, spec, seed);

        json doc = json::parse(binsleuth::save_model(model));
        doc["provenance"] = {{"tool_version", binsleuth::kToolVersion},
                             {"seed", seed},
                             {"model", spec.display},
                             {"inputs", input_digests({train_features})}};
        write_text_file(train_out, doc.dump(2) + "\n");
        std::cout << "trained " << spec.display << " on " << data.size() << " instances, "
                  << data.classes.size() << " classes -> " << train_out << "\n";
        return 0;
    }

    if (predict->parsed()) {
        const std::uint64_t seed = resolve_seed(pred_seed_opt, pred_seed);
        const binsleuth::Model model = load_model_file(pred_model);
        json predictions = json::array();
        for (const std::string& path : pred_files) {
            const binsleuth::CodeSample sample = carve_one(path, pred_raw);
            const binsleuth::FeatureVector fv =
                pred_max_opt->count() > 0
                    ? binsleuth::featurize_fragment(sample, pred_max_bytes,
                                                    binsleuth::derive_seed(seed, path))
                    : binsleuth::featurize_full(sample);
            const binsleuth::Prediction pred = binsleuth::predict(model, fv.values);
            if (pred_json) {
                json scores = json::object();
                for (std::size_t c = 0; c < model.classes.size(); ++c)
                    scores[model.classes[c]] = pred.scores[c];
                predictions.push_back(
                    {{"path", path}, {"label", pred.label}, {"scores", std::move(scores)}});
            } else {
                std::cout << path << "\t" << pred.label << "\n";
            }
        }
        if (pred_json) {
            const json doc = {{"tool_version", binsleuth::kToolVersion},
                              {"seed", seed},
                              {"model", pred_model},
                              {"predictions", std::move(predictions)}};
            std::cout << doc.dump(2) << "\n";
        }
        return 0;
    }

    if (eval->parsed()) {
        const std::uint64_t seed = resolve_seed(eval_seed_opt, eval_seed);
        const binsleuth::Dataset data = binsleuth::make_dataset(load_features(eval_features));
        const binsleuth::ModelSpec spec = binsleuth::parse_model_spec(eval_model_spec);
        const binsleuth::EvalReport report =
            binsleuth::cross_validate(data, spec, eval_folds, seed, eval_jobs);
        if (eval_json) {
            json doc = binsleuth::report_to_json(report);
            doc["tool_version"] = binsleuth::kToolVersion;
            doc["model"] = spec.display;
            doc["inputs"] = input_digests({eval_features});
            emit(doc.dump(2) + "\n", eval_out);
        } else {
            emit(binsleuth::render_text(report), eval_out);
        }
        return 0;
    }

    if (sweep->parsed()) {
        const std::uint64_t seed = resolve_seed(sweep_seed_opt, sweep_seed);
        const binsleuth::DatasetManifest manifest =
            binsleuth::load_manifest_file(sweep_manifest);
        if (manifest.entries.empty()) throw Error(Errc::EmptyDataset, "manifest has no entries");

        const std::size_t n = manifest.entries.size();
        std::vector<std::optional<binsleuth::CodeSample>> samples(n);
        std::vector<std::optional<binsleuth::FeatureVector>> features(n);
        std::vector<std::string> failures(n);
        binsleuth::parallel_for(n, sweep_jobs, [&](std::size_t i) {
            const binsleuth::ManifestEntry& entry = manifest.entries[i];
            try {
                binsleuth::CodeSample sample =
                    carve_one(entry.path, entry.mode == binsleuth::CarveMode::Raw);
                features[i] = binsleuth::featurize_full(sample, entry.label);
                samples[i] = std::move(sample);
            } catch (const Error& e) {
                failures[i] = std::string(binsleuth::errc_name(e.code())) + ": " + e.what();
            }
        });

        std::vector<binsleuth::CodeSample> kept_samples;
        std::vector<binsleuth::FeatureVector> kept_features;
        std::vector<binsleuth::SkippedFile> skipped;
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i]) {
                kept_samples.push_back(std::move(*samples[i]));
                kept_features.push_back(std::move(*features[i]));
            } else {
                skipped.push_back({manifest.entries[i].path, failures[i]});
            }
        }
        print_skips(skipped);
        if (kept_samples.empty())
            throw Error(Errc::AllFilesFailed, "no manifest file produced a feature vector");

        std::vector<binsleuth::ModelSpec> specs;
        const std::vector<std::string> model_texts =
            sweep_models.empty()
                ? std::vector<std::string>{"knn:k=1", "knn:k=3", "gnb", "tree", "forest", "logreg"}
                : sweep_models;
        for (const std::string& text : model_texts)
            specs.push_back(binsleuth::parse_model_spec(text));

        const binsleuth::Dataset full = binsleuth::make_dataset(kept_features);
        std::vector<std::size_t> sizes(sweep_sizes.begin(), sweep_sizes.end());
        const binsleuth::SweepResult result =
            binsleuth::size_sweep(full, kept_samples, sizes, specs, seed, sweep_jobs);
        if (sweep_json) {
            json doc = binsleuth::sweep_to_json(result);
            doc["tool_version"] = binsleuth::kToolVersion;
            doc["seed"] = seed;
            doc["inputs"] = input_digests({sweep_manifest});
            emit(doc.dump(2) + "\n", sweep_out);
        } else {
            emit(binsleuth::sweep_csv(result), sweep_out);
        }
        return 0;
    }

    if (synth->parsed()) {
        const std::uint64_t seed = resolve_seed(synth_seed_opt, synth_seed);
        std::vector<binsleuth::SynthIsaSpec> specs;
        if (synth_specs.empty()) {
            specs = binsleuth::default_synth_specs();
        } else {
            std::ifstream in(synth_specs, std::ios::binary);
            if (!in) throw Error(Errc::IoError, "cannot open " + synth_specs);
            specs = binsleuth::load_synth_specs(in);
        }
        const std::vector<binsleuth::SynthFile> corpus =
            binsleuth::gen_synth_corpus(specs, synth_files, synth_bytes, seed);
        binsleuth::write_synth_corpus(corpus, synth_out);
        std::cout << "wrote " << corpus.size() << " files for " << specs.size()
                  << " ISAs to " << synth_out << " (manifest.jsonl included)\n";
        return 0;
    }

    return 2; // unreachable with require_subcommand(1)
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << binsleuth::errc_name(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
