// Command-line pipeline: dataset generation, training, prediction,
// evaluation, sample-average-approximation tables and latency benchmarks.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "loadcast/baseline.hpp"
#include "loadcast/dataset.hpp"
#include "loadcast/evaluation.hpp"
#include "loadcast/io.hpp"
#include "loadcast/nmt.hpp"
#include "loadcast/saa.hpp"

using namespace loadcast;

namespace {

int default_jobs() {
    if (const char* env = std::getenv("LOADCAST_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

std::pair<int, int> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ValidationError("range must look like lo:hi, got '" + text + "'");
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
}

struct GenArgs {
    std::string catalog;
    std::string cls = "A";
    int n = 1000;
    std::uint64_t seed = 0;
    std::string out;
    std::string containers, platforms;
    int max_railcars = -1;
    int jobs = default_jobs();
    std::uint64_t node_budget = SolverLimits{}.node_budget;
    bool allow_inexact = false;
};

int run_gen(const GenArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    DatasetSpec spec;
    spec.class_label = args.cls;
    spec.sampler = class_spec(parse_class(args.cls));
    if (!args.containers.empty()) {
        std::tie(spec.sampler.container_lo, spec.sampler.container_hi) =
            parse_range(args.containers);
        spec.class_label = "custom";
    }
    if (!args.platforms.empty()) {
        std::tie(spec.sampler.platform_lo, spec.sampler.platform_hi) =
            parse_range(args.platforms);
        spec.class_label = "custom";
    }
    if (args.max_railcars >= 0) {
        spec.sampler.max_railcars = args.max_railcars;
        spec.class_label = "custom";
    }
    spec.count = args.n;
    spec.seed = args.seed;
    const BuildStats stats =
        build_dataset(spec, cat, WeightModel::defaults_for(cat), SolverLimits{args.node_budget},
                      args.out, args.jobs, args.allow_inexact);
    std::cout << "class " << spec.class_label << ": train " << stats.split_sizes[0]
              << ", valid " << stats.split_sizes[1] << ", test " << stats.split_sizes[2]
              << ", inexact labels " << stats.inexact_labels << "\n";
    return 0;
}

struct TrainArgs {
    std::string catalog;
    std::string data;
    std::string model = "nmt";
    std::string out;
    std::uint64_t seed = 1;
    std::string optimizer = "adadelta";
    int minibatch = 64;
    double dropout = 0.2;
    int patience = 1;
    int max_epochs = 50;
    int d_embed = 64;
    int d_hidden = 128;
    std::string hidden = "256,256";
    bool no_mask = false;
    bool resume = false;
    int width = 5;
};

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t at = 0;
    while (at < text.size()) {
        const auto comma = text.find(',', at);
        const std::string item =
            text.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
        out.push_back(std::stoi(item));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return out;
}

int run_train(const TrainArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    const LanguagePair lang = make_language(cat);

    TrainConfig cfg;
    cfg.optimizer =
        args.optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::adadelta;
    if (args.optimizer != "adam" && args.optimizer != "adadelta") {
        throw ValidationError("unknown optimizer '" + args.optimizer + "'");
    }
    cfg.minibatch = args.minibatch;
    cfg.dropout = args.dropout;
    cfg.patience = args.patience;
    cfg.max_epochs = args.max_epochs;
    cfg.seed = args.seed;
    cfg.mask = !args.no_mask;
    cfg.beam_width = args.width;

    std::filesystem::create_directories(args.out);
    const std::string state_path = args.out + "/train_state.bin";
    const std::string ckpt_path = args.out + "/model.ckpt";
    const std::string history_path = args.out + "/history.txt";
    History history;
    if (args.resume) {
        history = parse_history(read_file(history_path));
    }

    const Corpus train = read_corpus(args.data + "/train.src", args.data + "/train.tgt", lang);
    const Corpus valid = read_corpus(args.data + "/valid.src", args.data + "/valid.tgt", lang);

    if (args.model == "nmt") {
        NmtTrainState<float> state;
        if (args.resume) {
            state = load_nmt_train_state<float>(state_path, lang, cat.hash());
        } else {
            state.current = init_nmt_params<float>(args.d_embed, args.d_hidden, lang, args.seed);
        }
        nmt_train(state, train, valid, cat, lang, cfg);
        history.insert(history.end(), state.history.begin(), state.history.end());
        save_nmt(ckpt_path, state.best, cat.hash());
        save_nmt_train_state(state_path, state, cat.hash());
        write_file(history_path, history_text(history));
    } else if (args.model == "baseline") {
        const auto train_x = transform_dataset(train, lang, cat);
        const auto valid_x = transform_dataset(valid, lang, cat);
        write_expanded(args.out + "/train.expanded", train_x, lang);
        write_expanded(args.out + "/valid.expanded", valid_x, lang);
        BaselineTrainState<float> state;
        if (args.resume) {
            state = load_baseline_train_state<float>(state_path, lang, cat, cat.hash());
        } else {
            state.current =
                init_baseline_params<float>(lang, cat, parse_int_list(args.hidden), args.seed);
        }
        baseline_train<float>(state, train_x, valid_x, cat, lang, cfg);
        history.insert(history.end(), state.history.begin(), state.history.end());
        save_baseline(ckpt_path, state.best, cat.hash());
        save_baseline_train_state(state_path, state, cat.hash());
        write_file(history_path, history_text(history));
    } else {
        throw ValidationError("unknown model '" + args.model + "'");
    }
    std::cout << "checkpoint " << ckpt_path << "\n";
    const History parsed = parse_history(read_file(history_path));
    if (!parsed.empty()) {
        std::cout << "epochs " << parsed.size() << ", final valid_nll "
                  << parsed.back().valid_loss << "\n";
    }
    return 0;
}

struct PredictArgs {
    std::string catalog, checkpoint, src, out;
    int width = 5;
};

// Shared by predict and bench: a closure mapping a statement to a description.
std::function<SolutionDescription(const Instance&)> make_predictor(
    const std::string& checkpoint, const RailcarCatalog& cat, const LanguagePair& lang,
    int width) {
    const BlockFile file = read_block_file(checkpoint);
    if (file.kind == 0) {
        auto params = std::make_shared<NmtParams<float>>(
            load_nmt<float>(checkpoint, lang, cat.hash()));
        return [params, &cat, &lang, width](const Instance& xa) {
            return nmt_predict(*params, xa, cat, lang, width);
        };
    }
    if (file.kind == 1) {
        auto params = std::make_shared<BaselineParams<float>>(
            load_baseline<float>(checkpoint, lang, cat, cat.hash()));
        return [params, &cat, &lang, width](const Instance& xa) {
            return baseline_generate(*params, xa, cat, lang, width);
        };
    }
    throw ValidationError("checkpoint is not a model file: " + checkpoint);
}

int run_predict(const PredictArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    const LanguagePair lang = make_language(cat);
    const auto predict = make_predictor(args.checkpoint, cat, lang, args.width);
    std::vector<std::string> out;
    for (const std::string& line : read_lines(args.src)) {
        const Instance xa = decode_input(line_to_tokens(line, lang.source), lang, cat);
        out.push_back(tokens_to_line(encode_output(predict(xa), lang, cat), lang.target));
    }
    write_lines(args.out, out);
    std::cout << "predicted " << out.size() << " statements\n";
    return 0;
}

struct EvalArgs {
    std::string catalog, pred, gold, csv;
};

int run_eval(const EvalArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    const LanguagePair lang = make_language(cat);
    const auto pred_lines = read_lines(args.pred);
    const auto gold_lines = read_lines(args.gold);
    if (pred_lines.size() != gold_lines.size()) {
        throw ValidationError("prediction and gold files differ in line count");
    }
    std::vector<SolutionDescription> predicted, actual;
    for (std::size_t i = 0; i < pred_lines.size(); ++i) {
        predicted.push_back(decode_output(line_to_tokens(pred_lines[i], lang.target), lang, cat));
        actual.push_back(decode_output(line_to_tokens(gold_lines[i], lang.target), lang, cat));
    }
    const DReport report = dataset_D(actual, predicted, cat);
    std::cout << report_text(report);
    std::cout << "aggregate error     " << aggregate_error(actual, predicted, cat) << "\n";
    if (!args.csv.empty()) {
        write_file(args.csv, report_csv_header() + report_csv_row("eval", report));
    }
    return 0;
}

struct SaaArgs {
    std::string catalog, src, gold, csv;
    std::uint64_t seed = 0;
    std::string scenarios = "5,10,25,50,99";
    int jobs = default_jobs();
    std::uint64_t node_budget = SolverLimits{}.node_budget;
};

int run_saa(const SaaArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    const LanguagePair lang = make_language(cat);
    const auto src_lines = read_lines(args.src);
    const auto gold_lines = read_lines(args.gold);
    if (src_lines.size() != gold_lines.size()) {
        throw ValidationError("statement and gold files differ in line count");
    }
    std::vector<Instance> xas;
    std::vector<SolutionDescription> actual;
    for (std::size_t i = 0; i < src_lines.size(); ++i) {
        xas.push_back(decode_input(line_to_tokens(src_lines[i], lang.source), lang, cat));
        actual.push_back(decode_output(line_to_tokens(gold_lines[i], lang.target), lang, cat));
    }
    SaaConfig config;
    config.scenario_counts = parse_int_list(args.scenarios);
    config.seed = args.seed;
    config.jobs = args.jobs;
    config.limits.node_budget = args.node_budget;
    const auto rows = saa_bound(xas, actual, config, WeightModel::defaults_for(cat), cat);
    std::cout << saa_table_text(rows);
    if (!args.csv.empty()) write_file(args.csv, saa_table_csv(rows));
    return 0;
}

struct BenchArgs {
    std::string catalog, checkpoint, src, csv;
    int width = 5;
    int limit = 0;
};

int run_bench(const BenchArgs& args) {
    const RailcarCatalog cat = load_catalog(args.catalog);
    const LanguagePair lang = make_language(cat);
    const auto predict = make_predictor(args.checkpoint, cat, lang, args.width);
    std::vector<Instance> xas;
    for (const std::string& line : read_lines(args.src)) {
        xas.push_back(decode_input(line_to_tokens(line, lang.source), lang, cat));
        if (args.limit > 0 && static_cast<int>(xas.size()) >= args.limit) break;
    }
    if (xas.empty()) throw ValidationError("no statements to benchmark");
    const TimingReport report = time_predictions(predict, xas);
    std::cout << "instances           " << report.n << "\n";
    std::cout << "latency mean [s]    " << report.mean_s << "\n";
    std::cout << "latency std [s]     " << report.std_s << "\n";
    std::cout << "latency stderr [s]  " << report.stderr_s << "\n";
    if (!args.csv.empty()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "n,latency_mean_s,latency_std_s,latency_stderr_s\n%d,%g,%g,%g\n",
                      report.n, report.mean_s, report.std_s, report.stderr_s);
        write_file(args.csv, buf);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"container-railcar load planning prediction pipeline"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "sample statements and label them");
    cmd_gen->add_option("--catalog", gen.catalog)->required();
    cmd_gen->add_option("--class", gen.cls, "A, B, C or D");
    cmd_gen->add_option("--n", gen.n)->required();
    cmd_gen->add_option("--seed", gen.seed)->required();
    cmd_gen->add_option("--out", gen.out)->required();
    cmd_gen->add_option("--containers", gen.containers, "override as lo:hi");
    cmd_gen->add_option("--platforms", gen.platforms, "override as lo:hi");
    cmd_gen->add_option("--max-railcars", gen.max_railcars);
    cmd_gen->add_option("--jobs", gen.jobs);
    cmd_gen->add_option("--node-budget", gen.node_budget);
    cmd_gen->add_flag("--allow-inexact", gen.allow_inexact,
                      "keep budget-limited labels and count them in the manifest");

    TrainArgs train;
    CLI::App* cmd_train = app.add_subcommand("train", "fit a predictor on a dataset");
    cmd_train->add_option("--catalog", train.catalog)->required();
    cmd_train->add_option("--data", train.data)->required();
    cmd_train->add_option("--model", train.model, "nmt or baseline");
    cmd_train->add_option("--out", train.out)->required();
    cmd_train->add_option("--seed", train.seed)->required();
    cmd_train->add_option("--optimizer", train.optimizer, "adadelta or adam");
    cmd_train->add_option("--minibatch", train.minibatch);
    cmd_train->add_option("--dropout", train.dropout);
    cmd_train->add_option("--patience", train.patience);
    cmd_train->add_option("--max-epochs", train.max_epochs);
    cmd_train->add_option("--d-embed", train.d_embed);
    cmd_train->add_option("--d-hidden", train.d_hidden);
    cmd_train->add_option("--hidden", train.hidden, "baseline hidden sizes, comma separated");
    cmd_train->add_flag("--no-mask", train.no_mask,
                        "disable feasibility masking during training and validation");
    cmd_train->add_flag("--resume", train.resume, "continue from <out>/train_state.bin");
    cmd_train->add_option("--width", train.width);

    PredictArgs predict;
    CLI::App* cmd_predict = app.add_subcommand("predict", "decode statements to descriptions");
    cmd_predict->add_option("--catalog", predict.catalog)->required();
    cmd_predict->add_option("--checkpoint", predict.checkpoint)->required();
    cmd_predict->add_option("--src", predict.src)->required();
    cmd_predict->add_option("--out", predict.out)->required();
    cmd_predict->add_option("--width", predict.width);

    EvalArgs eval;
    CLI::App* cmd_eval = app.add_subcommand("eval", "score predictions against gold labels");
    cmd_eval->add_option("--catalog", eval.catalog)->required();
    cmd_eval->add_option("--pred", eval.pred)->required();
    cmd_eval->add_option("--gold", eval.gold)->required();
    cmd_eval->add_option("--csv", eval.csv);

    SaaArgs saa;
    CLI::App* cmd_saa = app.add_subcommand("saa", "sample-average-approximation table");
    cmd_saa->add_option("--catalog", saa.catalog)->required();
    cmd_saa->add_option("--src", saa.src)->required();
    cmd_saa->add_option("--gold", saa.gold)->required();
    cmd_saa->add_option("--seed", saa.seed)->required();
    cmd_saa->add_option("--scenarios", saa.scenarios, "comma separated counts");
    cmd_saa->add_option("--jobs", saa.jobs);
    cmd_saa->add_option("--node-budget", saa.node_budget);
    cmd_saa->add_option("--csv", saa.csv);

    BenchArgs bench;
    CLI::App* cmd_bench = app.add_subcommand("bench", "per-instance prediction latency");
    cmd_bench->add_option("--catalog", bench.catalog)->required();
    cmd_bench->add_option("--checkpoint", bench.checkpoint)->required();
    cmd_bench->add_option("--src", bench.src)->required();
    cmd_bench->add_option("--width", bench.width);
    cmd_bench->add_option("--limit", bench.limit, "benchmark only the first N statements");
    cmd_bench->add_option("--csv", bench.csv);

    try {
        app.parse(argc, argv);
        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_train->parsed()) return run_train(train);
        if (cmd_predict->parsed()) return run_predict(predict);
        if (cmd_eval->parsed()) return run_eval(eval);
        if (cmd_saa->parsed()) return run_saa(saa);
        if (cmd_bench->parsed()) return run_bench(bench);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
