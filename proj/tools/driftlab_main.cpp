#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftlab/corpus/dataset.hpp"
#include "driftlab/corpus/sample.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/eval/metrics.hpp"
#include "driftlab/learn/train.hpp"
#include "driftlab/model/checkpoint.hpp"
#include "driftlab/model/model.hpp"
#include "driftlab/syntax/analyze.hpp"
#include "driftlab/syntax/candidates.hpp"
#include "driftlab/syntax/lexer.hpp"
#include "driftlab/toygen.hpp"
#include "driftlab/util/format.hpp"

namespace {

using namespace driftlab;
namespace fs = std::filesystem;

// key=value configuration file; command-line flags take precedence
struct KvConfig {
    std::map<std::string, std::string> values;

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static KvConfig load(const std::string& path) {
        KvConfig config;
        if (path.empty()) return config;
        std::istringstream lines(read_text_file(path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            std::string text = trim(line);
            if (text.empty() || text[0] == '#') continue;
            std::size_t eq = text.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected key=value");
            }
            config.values[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
        }
        return config;
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        std::istringstream in(it->second);
        T value;
        if constexpr (std::is_same_v<T, bool>) {
            std::string word = it->second;
            if (word == "true" || word == "1" || word == "on") return true;
            if (word == "false" || word == "0" || word == "off") return false;
            throw ConfigError("bad boolean for " + key + ": " + word);
        } else if constexpr (std::is_same_v<T, std::string>) {
            return it->second;
        } else {
            if (!(in >> value) || !in.eof()) {
                throw ConfigError("bad value for " + key + ": " + it->second);
            }
            return value;
        }
    }
};

std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_value,
                           const KvConfig* config = nullptr) {
    if (cmd->count("--seed") > 0) return flag_value;
    if (config && config->values.count("seed")) {
        return config->get<std::uint64_t>("seed", 0);
    }
    if (const char* env = std::getenv("DRIFTLAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("DRIFTLAB_SEED is not a number: ") + env);
        }
    }
    return 0;
}

template <typename T>
T pick(const CLI::App* cmd, const std::string& flag, const KvConfig& config,
       const std::string& key, T flag_value, T fallback) {
    if (cmd->count(flag) > 0) return flag_value;
    return config.get<T>(key, fallback);
}

void print_split_stats(const DatasetSplit& split) {
    std::cout << "split " << split.name << " repos " << split.stats.repo_count << " buggy "
              << split.stats.buggy << " nonbuggy " << split.stats.nonbuggy << "\n";
}

// ----- build -----

struct BuildArgs {
    std::string corpus, out, kind = "var-misuse";
    std::uint64_t seed = 0;
    std::size_t max_len = kDefaultMaxLen;
};

int run_build(const CLI::App* cmd, const BuildArgs& args) {
    BugKind kind = bug_kind_from_string(args.kind);
    std::vector<RepoData> repos = load_corpus(args.corpus, kind);

    std::vector<const RepoData*> with_bugs;
    std::vector<const FunctionUnit*> clean_functions;
    std::size_t skipped_files = 0, skipped_functions = 0, skipped_pairs = 0;
    for (const RepoData& repo : repos) {
        skipped_files += repo.skipped_files;
        skipped_functions += repo.skipped_functions;
        skipped_pairs += repo.skipped_pairs;
        if (!repo.real_bugs.empty()) {
            with_bugs.push_back(&repo);
        } else {
            for (const FunctionUnit& fn : repo.functions) clean_functions.push_back(&fn);
        }
    }
    if (clean_functions.empty() && with_bugs.empty()) {
        throw FormatError("no eligible functions in corpus " + args.corpus);
    }

    Rng rng(resolve_seed(cmd, args.seed));
    BuildCounters counters;
    Rng syn_rng = rng.fork(1);
    DatasetSplit syn = build_syn_train(clean_functions, kind, args.max_len, syn_rng,
                                       &counters);
    Rng split_rng = rng.fork(2);
    RealSplits real = split_by_repo(with_bugs, {0.5, 0.25, 0.25}, kind, args.max_len,
                                    split_rng, &counters);

    // joint dedup; real splits first, then the paired synthetic set
    DedupState dedup_state;
    real.train.samples = dedup_with(dedup_state, std::move(real.train.samples), false);
    real.val.samples = dedup_with(dedup_state, std::move(real.val.samples), false);
    real.test.samples = dedup_with(dedup_state, std::move(real.test.samples), false);
    syn.samples = dedup_with(dedup_state, std::move(syn.samples), true);
    real.train.stats = compute_stats(real.train.samples);
    real.val.stats = compute_stats(real.val.samples);
    real.test.stats = compute_stats(real.test.samples);
    syn.stats = compute_stats(syn.samples);

    fs::create_directories(args.out);
    write_split(syn, fs::path(args.out) / "syn-train.jsonl");
    write_split(real.train, fs::path(args.out) / "real-train.jsonl");
    write_split(real.val, fs::path(args.out) / "real-val.jsonl");
    write_split(real.test, fs::path(args.out) / "real-test.jsonl");

    print_split_stats(syn);
    print_split_stats(real.train);
    print_split_stats(real.val);
    print_split_stats(real.test);
    std::cout << "skipped files " << skipped_files << " functions " << skipped_functions
              << " pairs " << skipped_pairs << " build " << counters.skipped
              << " duplicates " << dedup_state.dropped << "\n";
    return 0;
}

// ----- train -----

struct TrainArgs {
    std::string config_path, syn, real, val, out = "model.ckpt", init_from, log_path;
    std::string phase = "both", order, kind;
    std::uint64_t seed = 0;
    double beta = -1.0, gamma = 2.0, ratio = 0.0, lr = 1e-3;
    double percent_syn = 100.0, percent_real = 100.0;
    std::size_t epochs1 = 2, epochs2 = 4, batch = 2;
    std::size_t model_dim = 128, layers = 6, max_len = kDefaultMaxLen;
    bool log_pointer_loss = false;
};

BugKind split_kind(const DatasetSplit& split) {
    if (split.samples.empty()) throw ConfigError("split " + split.name + " is empty");
    BugKind kind = split.samples.front().kind;
    for (const Sample& s : split.samples) {
        if (s.kind != kind) {
            throw ConfigError("split " + split.name + " mixes bug kinds");
        }
    }
    return kind;
}

int run_train(const CLI::App* cmd, const TrainArgs& args) {
    KvConfig file = KvConfig::load(args.config_path);
    std::string phase = pick<std::string>(cmd, "--phase", file, "phase", args.phase, "both");
    if (phase != "1" && phase != "2" && phase != "both") {
        throw ConfigError("--phase must be 1, 2 or both");
    }
    bool run1 = phase != "2", run2 = phase != "1";

    TrainConfig tconfig;
    tconfig.seed = resolve_seed(cmd, args.seed, &file);
    tconfig.phase1_epochs =
        run1 ? pick<std::size_t>(cmd, "--epochs1", file, "phase1_epochs", args.epochs1, 2) : 0;
    tconfig.phase2_epochs =
        run2 ? pick<std::size_t>(cmd, "--epochs2", file, "phase2_epochs", args.epochs2, 4) : 0;
    tconfig.batch_size = pick<std::size_t>(cmd, "--batch", file, "batch_size", args.batch, 2);
    tconfig.learning_rate = pick<double>(cmd, "--lr", file, "learning_rate", args.lr, 1e-3);

    std::string syn_path = pick<std::string>(cmd, "--syn", file, "syn", args.syn, "");
    std::string real_path = pick<std::string>(cmd, "--real", file, "real", args.real, "");
    std::string val_path = pick<std::string>(cmd, "--val", file, "val", args.val, "");
    if (val_path.empty()) throw ConfigError("--val is required");
    if (run1 && syn_path.empty()) throw ConfigError("--syn is required for phase 1");
    if (run2 && real_path.empty()) throw ConfigError("--real is required for phase 2");

    Rng rng(tconfig.seed);
    std::optional<DatasetSplit> syn, real;
    DatasetSplit val = read_split(val_path);
    if (run1) {
        syn = read_split(syn_path);
        double percent = pick<double>(cmd, "--percent-syn", file, "percent_syn",
                                      args.percent_syn, 100.0);
        if (percent != 100.0) {
            Rng sub_rng = rng.fork(101);
            *syn = subsample_fraction(*syn, percent, sub_rng);
        }
    }
    if (run2) {
        real = read_split(real_path);
        double percent = pick<double>(cmd, "--percent-real", file, "percent_real",
                                      args.percent_real, 100.0);
        if (percent != 100.0) {
            Rng sub_rng = rng.fork(102);
            *real = subsample_fraction(*real, percent, sub_rng);
        }
        double ratio = pick<double>(cmd, "--ratio", file, "ratio", args.ratio, 0.0);
        if (ratio != 0.0) {
            Rng sub_rng = rng.fork(103);
            *real = subsample_ratio(*real, ratio, sub_rng);
        }
    }

    BugKind kind = syn ? split_kind(*syn) : split_kind(*real);
    if (syn && real && split_kind(*real) != kind) {
        throw ConfigError("synthetic and real splits have different bug kinds");
    }
    if (split_kind(val) != kind) throw ConfigError("validation split has a different bug kind");

    ModelParams params;
    std::string init_from =
        pick<std::string>(cmd, "--init-from", file, "init_from", args.init_from, "");
    if (!init_from.empty()) {
        params = load_checkpoint(init_from);
        if (params.config.kind != kind) {
            throw ConfigError("checkpoint bug kind does not match datasets");
        }
        for (const char* flag : {"--order", "--model-dim", "--layers", "--max-len"}) {
            if (cmd->count(flag) > 0) {
                throw ConfigError(std::string(flag) +
                                  " cannot be combined with --init-from");
            }
        }
        if (cmd->count("--gamma") > 0) params.config.gamma = args.gamma;
        if (cmd->count("--beta") > 0 && args.beta >= 0.0) params.config.beta = args.beta;
    } else {
        ModelConfig mconfig;
        mconfig.kind = kind;
        mconfig.model_dim =
            pick<std::size_t>(cmd, "--model-dim", file, "model_dim", args.model_dim, 128);
        mconfig.layers = pick<std::size_t>(cmd, "--layers", file, "layers", args.layers, 6);
        mconfig.heads_order =
            pick<std::string>(cmd, "--order", file, "order", args.order, "loc,cls,rep");
        mconfig.max_len =
            pick<std::size_t>(cmd, "--max-len", file, "max_len", args.max_len, kDefaultMaxLen);
        mconfig.gamma = pick<double>(cmd, "--gamma", file, "gamma", args.gamma, 2.0);
        double beta = pick<double>(cmd, "--beta", file, "beta", args.beta, -1.0);
        mconfig.beta = beta < 0.0 ? default_beta(kind) : beta;
        mconfig.log_pointer_loss = pick<bool>(cmd, "--log-pointer-loss", file,
                                              "log_pointer_loss", args.log_pointer_loss,
                                              false);

        std::vector<const DatasetSplit*> vocab_sources;
        if (syn) vocab_sources.push_back(&*syn);
        if (real) vocab_sources.push_back(&*real);
        Vocab vocab = Vocab::build(vocab_sources);
        mconfig.vocab_size = vocab.size();
        validate_config(mconfig);
        Rng init_rng = rng.fork(1);
        params = init_params(mconfig, std::move(vocab), init_rng);
    }

    std::ofstream log_file;
    if (!args.log_path.empty()) {
        log_file.open(args.log_path, std::ios::trunc);
        if (!log_file) throw IoError("cannot open log file: " + args.log_path);
    }
    auto on_epoch = [&](const EpochLog& log) {
        std::string line = format_epoch_log(log);
        std::cout << line << "\n";
        if (log_file.is_open()) log_file << line << "\n";
    };

    TrainResult result = train_two_phase(std::move(params), syn ? &*syn : nullptr,
                                         real ? &*real : nullptr, val, tconfig, on_epoch);
    if (tconfig.phase2_epochs > 0) {
        std::string line = "selected epoch " + std::to_string(result.best_epoch) +
                           " val_ap " + fmt_double(result.best_val_ap);
        std::cout << line << "\n";
        if (log_file.is_open()) log_file << line << "\n";
    }
    save_checkpoint(args.out, result.params);
    std::cout << "checkpoint " << args.out << "\n";
    return 0;
}

// ----- eval -----

struct EvalArgs {
    std::string model, data, out;
    double tau = 0.5;
    bool curves = false;
};

int run_eval(const CLI::App* cmd, const EvalArgs& args) {
    ModelParams params = load_checkpoint(args.model);
    DatasetSplit split = read_split(args.data);
    if (!split.samples.empty() && split_kind(split) != params.config.kind) {
        throw ConfigError("dataset bug kind does not match checkpoint");
    }
    EvalReport report = evaluate(params, split, args.tau);
    std::string text = format_report(report, args.curves);
    std::cout << text;
    if (!args.out.empty()) write_text_file(args.out, text);
    (void)cmd;
    return 0;
}

// ----- scan -----

struct ScanArgs {
    std::string model, dir, out;
    double tau = 0.5;
};

struct ScanWarning {
    std::string repo, file, function, kind;
    std::string loc_text, repair_text;
    std::size_t loc_begin = 0, loc_end = 0;
    std::size_t loc_index = 0;
    std::uint64_t fn_hash = 0;
    double score = 0.0;
};

int run_scan(const CLI::App* cmd, const ScanArgs& args) {
    ModelParams params = load_checkpoint(args.model);
    BugKind kind = params.config.kind;

    std::vector<fs::path> files;
    if (!args.dir.empty() && fs::exists(args.dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(args.dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".py") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ScanWarning> warnings;
    std::set<std::tuple<std::uint64_t, std::size_t>> seen;
    for (const fs::path& file : files) {
        std::string rel = fs::relative(file, args.dir).generic_string();
        std::string repo = rel.find('/') == std::string::npos ? "." : rel.substr(0, rel.find('/'));
        TokenStream tokens;
        try {
            tokens = lex(read_text_file(file));
        } catch (const Error& e) {
            std::cerr << "skipping " << rel << ": " << e.what() << "\n";
            continue;
        }
        for (const FunctionSpan& span : find_functions(tokens)) {
            if (span.decorated) continue;
            TokenStream fn = slice_tokens(tokens, span.begin, span.end);
            SyntacticFacts facts;
            try {
                facts = analyze(fn);
            } catch (const Error&) {
                continue;
            }
            CandidateMap cands = extract_candidates(facts, fn, kind);
            if (!is_eligible(cands)) continue;
            SampleMeta meta{repo, rel, span.qualified, "nonbuggy"};
            auto sample = make_nonbuggy_sample(fn, cands, params.config.max_len, meta);
            if (!sample) continue;
            Prediction pred;
            try {
                pred = forward(params, *sample);
            } catch (const Error& e) {
                std::cerr << "skipping " << rel << "::" << span.qualified << ": " << e.what()
                          << "\n";
                continue;
            }
            if (pred.p_cls[1] < args.tau) continue;
            Pointed at = point(pred);
            if (at.loc == 0 || at.loc - 1 >= fn.size()) continue;
            ScanWarning w;
            w.repo = repo;
            w.file = rel;
            w.function = span.qualified;
            w.kind = to_string(kind);
            const Token& loc_tok = fn[at.loc - 1];
            w.loc_text = loc_tok.text;
            w.loc_begin = loc_tok.begin;
            w.loc_end = loc_tok.end;
            w.loc_index = at.loc - 1;
            w.fn_hash = token_text_hash(sample->tokens);
            w.score = pred.p_cls[1];
            if (kind == BugKind::WrongBinop) {
                w.repair_text = operator_vocab()[at.rep];
            } else if (at.rep >= 1 && at.rep - 1 < fn.size()) {
                w.repair_text = fn[at.rep - 1].text;
            }
            if (seen.emplace(w.fn_hash, w.loc_index).second) {
                warnings.push_back(std::move(w));
            }
        }
    }

    std::stable_sort(warnings.begin(), warnings.end(),
                     [](const ScanWarning& a, const ScanWarning& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.file != b.file) return a.file < b.file;
                         if (a.function != b.function) return a.function < b.function;
                         return a.loc_index < b.loc_index;
                     });

    std::ostringstream out;
    for (const ScanWarning& w : warnings) {
        nlohmann::json line{{"repo", w.repo},          {"file", w.file},
                            {"function", w.function},  {"kind", w.kind},
                            {"loc", w.loc_text},       {"loc_begin", w.loc_begin},
                            {"loc_end", w.loc_end},    {"repair", w.repair_text},
                            {"score", w.score}};
        out << line.dump() << "\n";
    }
    std::cout << out.str();
    if (!args.out.empty()) write_text_file(args.out, out.str());
    std::cerr << "warnings " << warnings.size() << "\n";
    (void)cmd;
    return 0;
}

// ----- gen-toy -----

struct GenToyArgs {
    std::string out;
    std::uint64_t seed = 0;
    std::size_t clean_repos = 16, paired_repos = 20;
    std::size_t clean_functions = 40, paired_functions = 72;
};

int run_gen_toy(const CLI::App* cmd, const GenToyArgs& args) {
    ToyGenConfig config;
    config.out_dir = args.out;
    config.seed = resolve_seed(cmd, args.seed);
    config.clean_repos = args.clean_repos;
    config.paired_repos = args.paired_repos;
    config.functions_per_clean_repo = args.clean_functions;
    config.functions_per_paired_repo = args.paired_functions;
    ToyGenStats stats = generate_toy_corpus(config);
    std::cout << "repos " << stats.repos << " functions " << stats.functions
              << " var-misuse-pairs " << stats.var_misuse_pairs << " wrong-binop-pairs "
              << stats.wrong_binop_pairs << " arg-swap-pairs " << stats.arg_swap_pairs
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-phase token-level bug detector pipeline"};
    app.require_subcommand(1);

    BuildArgs build_args;
    CLI::App* build = app.add_subcommand("build", "build datasets from a corpus directory");
    build->add_option("--corpus", build_args.corpus, "corpus directory")->required();
    build->add_option("--out", build_args.out, "output directory")->required();
    build->add_option("--kind", build_args.kind, "bug kind");
    build->add_option("--seed", build_args.seed, "random seed");
    build->add_option("--max-len", build_args.max_len, "token length cap");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "two-phase training");
    train->add_option("--config", train_args.config_path, "key=value config file");
    train->add_option("--syn", train_args.syn, "synthetic training split");
    train->add_option("--real", train_args.real, "real training split");
    train->add_option("--val", train_args.val, "validation split");
    train->add_option("--out", train_args.out, "output checkpoint");
    train->add_option("--init-from", train_args.init_from, "checkpoint to continue from");
    train->add_option("--log", train_args.log_path, "metrics log file");
    train->add_option("--phase", train_args.phase, "1, 2 or both");
    train->add_option("--seed", train_args.seed, "random seed");
    train->add_option("--beta", train_args.beta, "contrastive weight");
    train->add_option("--gamma", train_args.gamma, "focal exponent");
    train->add_option("--order", train_args.order, "head order or flat");
    train->add_option("--ratio", train_args.ratio, "non-buggy per buggy in phase 2");
    train->add_option("--percent-syn", train_args.percent_syn, "synthetic repo percentage");
    train->add_option("--percent-real", train_args.percent_real, "real repo percentage");
    train->add_option("--epochs1", train_args.epochs1, "phase 1 epochs");
    train->add_option("--epochs2", train_args.epochs2, "phase 2 epochs");
    train->add_option("--batch", train_args.batch, "batch size");
    train->add_option("--lr", train_args.lr, "learning rate");
    train->add_option("--model-dim", train_args.model_dim, "feature dimension");
    train->add_option("--layers", train_args.layers, "transformation layers");
    train->add_option("--max-len", train_args.max_len, "token length cap");
    train->add_flag("--log-pointer-loss", train_args.log_pointer_loss,
                    "log-form pointer losses");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--model", eval_args.model, "checkpoint")->required();
    eval->add_option("--data", eval_args.data, "dataset split")->required();
    eval->add_option("--tau", eval_args.tau, "classification threshold");
    eval->add_option("--out", eval_args.out, "report file");
    eval->add_flag("--curves", eval_args.curves, "include PR curve points");

    ScanArgs scan_args;
    CLI::App* scan = app.add_subcommand("scan", "scan a source tree for bugs");
    scan->add_option("--model", scan_args.model, "checkpoint")->required();
    scan->add_option("--dir", scan_args.dir, "source directory")->required();
    scan->add_option("--tau", scan_args.tau, "warning threshold");
    scan->add_option("--out", scan_args.out, "warning output file");

    GenToyArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-toy", "generate the bundled toy corpus");
    gen->add_option("--out", gen_args.out, "output directory")->required();
    gen->add_option("--seed", gen_args.seed, "random seed");
    gen->add_option("--clean-repos", gen_args.clean_repos, "repos without fix pairs");
    gen->add_option("--paired-repos", gen_args.paired_repos, "repos with fix pairs");
    gen->add_option("--clean-functions", gen_args.clean_functions, "functions per clean repo");
    gen->add_option("--paired-functions", gen_args.paired_functions,
                    "functions per paired repo");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) return run_build(build, build_args);
        if (train->parsed()) return run_train(train, train_args);
        if (eval->parsed()) return run_eval(eval, eval_args);
        if (scan->parsed()) return run_scan(scan, scan_args);
        if (gen->parsed()) return run_gen_toy(gen, gen_args);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
