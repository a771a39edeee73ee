#include "driftlab/toygen.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/util/format.hpp"

namespace driftlab {

namespace {

namespace fs = std::filesystem;

const char* kVerbs[] = {"get",  "calc", "make", "find", "read", "scan", "load", "sync",
                        "push", "pull", "emit", "fold", "norm", "trim", "grow", "clip"};

const char* kArithOps[] = {"+", "-", "*"};
const char* kCmpOps[] = {"<", ">", "<=", ">="};

// chained-assignment arithmetic, the corpus backbone
struct ChainTuple {
    const char *a, *b, *c, *d, *e, *f;
};
const ChainTuple kChainTuples[] = {
    {"width", "height", "scale", "area", "result", "extra"},
    {"price", "count", "rate", "subtotal", "total", "rounded"},
    {"speed", "duration", "boost", "distance", "outcome", "margin"},
    {"mass", "velocity", "drag", "momentum", "loadout", "spare"},
    {"base", "bonus", "penalty", "gross", "net", "final"},
    {"rows", "cols", "depth", "plane", "volume", "padded"},
    {"alpha", "sigma", "decay", "blend", "mixed", "capped"},
    {"start", "stop", "stride", "span", "window", "shifted"},
};

// legitimate self-products; frequent only in the paired repos
struct SquareTuple {
    const char *a, *b, *c, *d;
};
const SquareTuple kSquareTuples[] = {
    {"factor", "offset", "energy", "damped"}, {"radius", "rim", "disk", "trimmed"},
    {"side", "gap", "patch", "inset"},        {"gain", "bias", "lift", "eased"},
    {"step", "pad", "jump", "bounded"},       {"heat", "vent", "flux", "cooled"},
};

// the fixed structural site all mined variable-misuse bugs live at
struct RecordTuple {
    const char *a, *b, *c, *d, *obj, *method;
};
const RecordTuple kRecordTuples[] = {
    {"amount", "balance", "fee", "charged", "ledger", "record"},
    {"order", "stock", "hold", "reserved", "journal", "post"},
    {"ticket", "quota", "used", "granted", "audit", "note"},
    {"request", "budget", "spent", "allowed", "tracker", "mark"},
};

// comparisons and helper calls; hosts the mined operator and swap bugs
struct GuardTuple {
    const char *a, *b, *c, *d, *callee;
};
const GuardTuple kGuardTuples[] = {
    {"cur", "low", "high", "snapped", "clamp"},
    {"level", "cap", "slack", "fitted", "wrap"},
    {"seek", "head", "tail", "pinned", "fit"},
    {"tick", "warm", "cold", "held", "snap"},
};

enum Family { kChain, kSquare, kRecord, kGuard };

struct ToyFunction {
    Family family;
    std::string fixed;
    std::string var_misuse_buggy;   // record family only
    std::string wrong_binop_buggy;  // guard family only
    std::string arg_swap_buggy;     // guard family, variant 0 only
};

std::string make_name(Rng& rng, const char* noun, std::size_t counter) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%s_%04zu", kVerbs[rng.next_below(16)], noun, counter);
    return buf;
}

ToyFunction emit_chain(Rng& rng, std::size_t counter) {
    const ChainTuple& t = kChainTuples[rng.next_below(std::size(kChainTuples))];
    std::string name = make_name(rng, t.d, counter);
    const char* op1 = kArithOps[rng.next_below(3)];
    const char* op2 = kArithOps[rng.next_below(3)];
    const char* op3 = kArithOps[rng.next_below(3)];
    const char* cmp = kCmpOps[rng.next_below(4)];
    ToyFunction fn;
    fn.family = kChain;
    std::string s;
    switch (rng.next_below(4)) {
        case 0:
            s = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n";
            s += std::string("    ") + t.d + " = " + t.a + " " + op1 + " " + t.b + "\n";
            s += std::string("    ") + t.e + " = " + t.d + " " + op2 + " " + t.c + "\n";
            s += std::string("    return ") + t.e + "\n";
            break;
        case 1:
            s = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n";
            s += std::string("    ") + t.d + " = " + t.a + " " + op1 + " " + t.b + "\n";
            s += std::string("    ") + t.e + " = " + t.d + " " + op2 + " " + t.c + "\n";
            s += std::string("    ") + t.f + " = " + t.e + " " + op3 + " " + t.a + "\n";
            s += std::string("    return ") + t.f + "\n";
            break;
        case 2:
            s = "def " + name + "(" + t.a + ", " + t.b + "):\n";
            s += std::string("    ") + t.d + " = " + t.a + " " + op1 + " " + t.b + "\n";
            s += std::string("    return ") + t.d + " " + op2 + " " + t.b + "\n";
            break;
        default:
            s = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n";
            s += std::string("    if ") + t.a + " " + cmp + " " + t.b + ":\n";
            s += std::string("        return ") + t.c + "\n";
            s += std::string("    ") + t.d + " = " + t.b + " " + op1 + " " + t.c + "\n";
            s += std::string("    return ") + t.d + "\n";
            break;
    }
    fn.fixed = s;
    return fn;
}

ToyFunction emit_square(Rng& rng, std::size_t counter) {
    const SquareTuple& t = kSquareTuples[rng.next_below(std::size(kSquareTuples))];
    std::string name = make_name(rng, t.c, counter);
    ToyFunction fn;
    fn.family = kSquare;
    std::string s;
    switch (rng.next_below(3)) {
        case 0:
            s = "def " + name + "(" + t.a + ", " + t.b + "):\n";
            s += std::string("    ") + t.c + " = " + t.a + " * " + t.a + "\n";
            s += std::string("    return ") + t.c + " + " + t.b + "\n";
            break;
        case 1:
            s = "def " + name + "(" + t.a + ", " + t.b + "):\n";
            s += std::string("    ") + t.c + " = " + t.a + " * " + t.a + "\n";
            s += std::string("    ") + t.d + " = " + t.c + " - " + t.b + "\n";
            s += std::string("    return ") + t.d + "\n";
            break;
        default:
            s = "def " + name + "(" + t.a + ", " + t.b + "):\n";
            s += std::string("    ") + t.c + " = " + t.a + " * " + t.a + " + " + t.b + " * " +
                 t.b + "\n";
            s += std::string("    return ") + t.c + "\n";
            break;
    }
    fn.fixed = s;
    return fn;
}

ToyFunction emit_record(Rng& rng, std::size_t counter) {
    const RecordTuple& t = kRecordTuples[rng.next_below(std::size(kRecordTuples))];
    std::string name = make_name(rng, t.d, counter);
    ToyFunction fn;
    fn.family = kRecord;
    std::string head = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n" +
                       "    " + t.d + " = " + t.b + " - " + t.c + "\n";
    std::string tail = std::string("    return ") + t.d + "\n";
    fn.fixed = head + "    " + t.obj + "." + t.method + "(" + t.a + ", " + t.d + ")\n" + tail;
    fn.var_misuse_buggy =
        head + "    " + t.obj + "." + t.method + "(" + t.a + ", " + t.b + ")\n" + tail;
    return fn;
}

const char* flip_cmp(const char* cmp) {
    if (std::string(cmp) == "<") return ">=";
    if (std::string(cmp) == ">") return "<=";
    if (std::string(cmp) == "<=") return ">";
    return "<";
}

ToyFunction emit_guard(Rng& rng, std::size_t counter) {
    const GuardTuple& t = kGuardTuples[rng.next_below(std::size(kGuardTuples))];
    std::string name = make_name(rng, t.d, counter);
    const char* cmp = kCmpOps[rng.next_below(4)];
    ToyFunction fn;
    fn.family = kGuard;
    if (rng.next_below(2) == 0) {
        auto body = [&](const char* c, const char* arg1, const char* arg2) {
            std::string s = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n";
            s += std::string("    if ") + t.a + " " + c + " " + t.b + ":\n";
            s += std::string("        return ") + t.c + " + " + t.a + "\n";
            s += std::string("    ") + t.d + " = " + t.callee + "(" + arg1 + ", " + arg2 +
                 ")\n";
            s += std::string("    return ") + t.d + " - " + t.b + "\n";
            return s;
        };
        fn.fixed = body(cmp, t.a, t.c);
        fn.wrong_binop_buggy = body(flip_cmp(cmp), t.a, t.c);
        fn.arg_swap_buggy = body(cmp, t.c, t.a);
    } else {
        auto body = [&](const char* c) {
            std::string s = "def " + name + "(" + t.a + ", " + t.b + ", " + t.c + "):\n";
            s += std::string("    ") + t.d + " = " + t.callee + "(" + t.b + ", " + t.c + ")\n";
            s += std::string("    if ") + t.d + " " + c + " " + t.a + ":\n";
            s += std::string("        return ") + t.d + "\n";
            s += std::string("    return ") + t.a + " - " + t.c + "\n";
            return s;
        };
        fn.fixed = body(cmp);
        fn.wrong_binop_buggy = body(flip_cmp(cmp));
    }
    return fn;
}

ToyFunction emit(Family family, Rng& rng, std::size_t counter) {
    switch (family) {
        case kChain: return emit_chain(rng, counter);
        case kSquare: return emit_square(rng, counter);
        case kRecord: return emit_record(rng, counter);
        case kGuard: return emit_guard(rng, counter);
    }
    throw ConfigError("unknown toy family");
}

std::string commit_id(Rng& rng) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%012llx",
                  static_cast<unsigned long long>(rng.next_u64() & 0xffffffffffffULL));
    return buf;
}

}  // namespace

ToyGenStats generate_toy_corpus(const ToyGenConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("toy generator needs an output directory");
    fs::create_directories(config.out_dir);
    Rng root(config.seed);
    ToyGenStats stats;
    std::size_t counter = 0;

    std::size_t total_repos = config.clean_repos + config.paired_repos;
    for (std::size_t r = 0; r < total_repos; ++r) {
        bool paired = r >= config.clean_repos;
        Rng rng = root.fork(r + 1);
        char repo_name[32];
        std::snprintf(repo_name, sizeof(repo_name), "repo_%02zu", r);
        fs::path repo_dir = config.out_dir / repo_name;
        fs::create_directories(repo_dir);

        std::size_t n = paired ? config.functions_per_paired_repo
                               : config.functions_per_clean_repo;
        std::vector<Family> plan;
        plan.reserve(n);
        if (paired) {
            // 40% chain, 30% square, 20% record, 10% guard
            std::size_t square = n * 3 / 10, record = n / 5, guard = n / 10;
            for (std::size_t i = 0; i < square; ++i) plan.push_back(kSquare);
            for (std::size_t i = 0; i < record; ++i) plan.push_back(kRecord);
            for (std::size_t i = 0; i < guard; ++i) plan.push_back(kGuard);
        } else {
            // mostly chain, a little guard, a rare legitimate self-product
            std::size_t guard = n * 28 / 100;
            for (std::size_t i = 0; i < guard; ++i) plan.push_back(kGuard);
            if (r % 2 == 0) plan.push_back(kSquare);
        }
        while (plan.size() < n) plan.push_back(kChain);
        rng.shuffle(plan);

        std::vector<ToyFunction> functions;
        functions.reserve(n);
        std::vector<std::size_t> record_at, guard_at;
        for (std::size_t i = 0; i < n; ++i) {
            ToyFunction fn = emit(plan[i], rng, counter++);
            if (fn.family == kRecord) record_at.push_back(i);
            if (fn.family == kGuard) guard_at.push_back(i);
            functions.push_back(std::move(fn));
        }

        // corpus files, a dozen functions each
        const std::size_t per_file = 12;
        for (std::size_t start = 0, file_idx = 0; start < n; start += per_file, ++file_idx) {
            std::string text;
            for (std::size_t i = start; i < std::min(n, start + per_file); ++i) {
                if (!text.empty()) text += "\n";
                text += functions[i].fixed;
            }
            char fname[32];
            std::snprintf(fname, sizeof(fname), "src_%02zu.py", file_idx);
            write_text_file(repo_dir / fname, text);
        }
        stats.functions += n;
        ++stats.repos;

        if (!paired) continue;

        // mined-bug pairs: misuse bugs at the record site on every paired
        // repo, operator and swap bugs on alternating ones
        fs::create_directories(repo_dir / "pairs");
        nlohmann::json manifest_lines = nlohmann::json::array();
        std::size_t pair_idx = 0;
        auto add_pair = [&](const std::string& before_text, const std::string& after_text) {
            char base[32];
            std::snprintf(base, sizeof(base), "bug_%02zu", pair_idx++);
            std::string before_rel = std::string("pairs/") + base + "_before.py";
            std::string after_rel = std::string("pairs/") + base + "_after.py";
            write_text_file(repo_dir / before_rel, before_text);
            write_text_file(repo_dir / after_rel, after_text);
            manifest_lines.push_back({{"before", before_rel},
                                      {"after", after_rel},
                                      {"commit", commit_id(rng)}});
        };

        rng.shuffle(record_at);
        std::size_t misuse_bugs = std::min<std::size_t>(record_at.size(), 2);
        for (std::size_t i = 0; i < misuse_bugs; ++i) {
            const ToyFunction& fn = functions[record_at[i]];
            add_pair(fn.var_misuse_buggy, fn.fixed);
            ++stats.var_misuse_pairs;
        }
        rng.shuffle(guard_at);
        std::size_t gi = 0;
        if (r % 2 == 0 && gi < guard_at.size()) {
            const ToyFunction& fn = functions[guard_at[gi++]];
            add_pair(fn.wrong_binop_buggy, fn.fixed);
            ++stats.wrong_binop_pairs;
        }
        if (r % 2 == 1) {
            while (gi < guard_at.size() && functions[guard_at[gi]].arg_swap_buggy.empty()) {
                ++gi;
            }
            if (gi < guard_at.size()) {
                const ToyFunction& fn = functions[guard_at[gi++]];
                add_pair(fn.arg_swap_buggy, fn.fixed);
                ++stats.arg_swap_pairs;
            }
        }

        std::string manifest_text;
        for (const auto& line : manifest_lines) manifest_text += line.dump() + "\n";
        write_text_file(repo_dir / "pairs.jsonl", manifest_text);
    }
    return stats;
}

}  // namespace driftlab
