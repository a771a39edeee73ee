#include "driftlab/corpus/sample.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftlab/util/format.hpp"

namespace driftlab {

namespace {

using nlohmann::json;

std::vector<std::uint8_t> zeros(std::size_t n) {
    return std::vector<std::uint8_t>(n, 0);
}

bool any_set(const std::vector<std::uint8_t>& bits) {
    return std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t count_set(const std::vector<std::uint8_t>& bits) {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

// Shifted by one for the prepended classification token; bits beyond
// max_len are dropped by truncation.
void set_shifted(std::vector<std::uint8_t>& bits, std::size_t token_index,
                 std::size_t max_len) {
    std::size_t pos = token_index + 1;
    if (pos < max_len && pos < bits.size()) bits[pos] = 1;
}

std::vector<std::string> cls_prefixed_texts(const TokenStream& fn, std::size_t max_len) {
    std::vector<std::string> texts;
    texts.reserve(std::min(fn.size() + 1, max_len));
    texts.push_back(kClsToken);
    for (const Token& tok : fn) {
        if (texts.size() >= max_len) break;
        texts.push_back(tok.text);
    }
    return texts;
}

}  // namespace

SplitStats compute_stats(const std::vector<Sample>& samples) {
    SplitStats stats;
    std::unordered_set<std::string> repos;
    for (const Sample& s : samples) {
        repos.insert(s.meta.repo);
        if (s.label == 1) {
            ++stats.buggy;
        } else {
            ++stats.nonbuggy;
        }
    }
    stats.repo_count = repos.size();
    return stats;
}

void validate_sample(const Sample& sample) {
    std::size_t n = sample.tokens.size();
    if (n == 0 || sample.tokens[0] != kClsToken) {
        throw FormatError("sample must start with the classification token");
    }
    if (sample.label != 1 && sample.label != -1) {
        throw FormatError("label must be -1 or +1");
    }
    if (sample.loc_mask.size() != n || sample.loc_target.size() != n) {
        throw FormatError("loc vectors must match token count");
    }
    std::size_t rep_len = sample.kind == BugKind::WrongBinop ? kOperatorVocabSize : n;
    if (sample.rep_mask.size() != rep_len || sample.rep_target.size() != rep_len) {
        throw FormatError("rep vectors have the wrong length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sample.loc_target[i] && !sample.loc_mask[i]) {
            throw FormatError("loc target outside loc mask");
        }
    }
    for (std::size_t i = 0; i < rep_len; ++i) {
        if (sample.rep_target[i] && !sample.rep_mask[i]) {
            throw FormatError("rep target outside rep mask");
        }
    }
    if (sample.label == 1) {
        if (count_set(sample.loc_target) != 1) {
            throw FormatError("buggy sample needs exactly one loc target bit");
        }
        if (!any_set(sample.rep_target)) {
            throw FormatError("buggy sample needs at least one rep target bit");
        }
    } else {
        if (any_set(sample.loc_target) || any_set(sample.rep_target)) {
            throw FormatError("non-buggy sample must have all-zero targets");
        }
    }
    const std::string& o = sample.meta.origin;
    if (o != "synthetic" && o != "real" && o != "nonbuggy") {
        throw FormatError("unknown sample origin: " + o);
    }
}

std::optional<Sample> make_nonbuggy_sample(const TokenStream& fn,
                                           const CandidateMap& candidates,
                                           std::size_t max_len, SampleMeta meta) {
    if (candidates.locs.empty()) return std::nullopt;
    Sample s;
    s.kind = candidates.kind;
    s.tokens = cls_prefixed_texts(fn, max_len);
    std::size_t n = s.tokens.size();
    s.label = -1;
    s.loc_mask = zeros(n);
    s.loc_target = zeros(n);
    std::size_t rep_len = s.kind == BugKind::WrongBinop ? kOperatorVocabSize : n;
    s.rep_mask = zeros(rep_len);
    s.rep_target = zeros(rep_len);
    for (std::size_t loc : candidates.locs) {
        if (loc + 1 >= n) continue;
        s.loc_mask[loc + 1] = 1;
        auto it = candidates.rep_of.find(loc);
        if (it == candidates.rep_of.end()) continue;
        for (std::size_t rep : it->second) {
            if (s.kind == BugKind::WrongBinop) {
                s.rep_mask[rep] = 1;
            } else {
                set_shifted(s.rep_mask, rep, n);
            }
        }
    }
    if (!any_set(s.loc_mask) || !any_set(s.rep_mask)) return std::nullopt;
    s.meta = std::move(meta);
    if (s.meta.origin.empty()) s.meta.origin = "nonbuggy";
    return s;
}

std::optional<Sample> make_buggy_sample(const TokenStream& buggy_fn,
                                        const BugEdit& edit, BugKind kind,
                                        std::size_t max_len, SampleMeta meta) {
    SyntacticFacts facts;
    try {
        facts = analyze(buggy_fn);
    } catch (const Error&) {
        return std::nullopt;
    }
    CandidateMap cands = extract_candidates(facts, buggy_fn, kind);
    auto it = cands.rep_of.find(edit.loc_index);
    if (it == cands.rep_of.end()) return std::nullopt;

    Sample s;
    s.kind = kind;
    s.tokens = cls_prefixed_texts(buggy_fn, max_len);
    std::size_t n = s.tokens.size();
    if (edit.loc_index + 1 >= n) return std::nullopt;
    s.label = 1;
    s.loc_mask = zeros(n);
    s.loc_target = zeros(n);
    std::size_t rep_len = kind == BugKind::WrongBinop ? kOperatorVocabSize : n;
    s.rep_mask = zeros(rep_len);
    s.rep_target = zeros(rep_len);

    for (std::size_t loc : cands.locs) {
        if (loc + 1 < n) s.loc_mask[loc + 1] = 1;
    }
    s.loc_target[edit.loc_index + 1] = 1;

    // rep mask: the true location's repair candidates
    for (std::size_t rep : it->second) {
        if (kind == BugKind::WrongBinop) {
            s.rep_mask[rep] = 1;
        } else {
            set_shifted(s.rep_mask, rep, n);
        }
    }

    switch (kind) {
        case BugKind::VarMisuse: {
            // every in-scope definition token of the original variable
            if (edit.repair >= buggy_fn.size()) return std::nullopt;
            const std::string& original = buggy_fn[edit.repair].text;
            for (std::size_t rep : it->second) {
                if (buggy_fn[rep].text == original) set_shifted(s.rep_target, rep, n);
            }
            break;
        }
        case BugKind::WrongBinop: {
            if (edit.repair >= kOperatorVocabSize) return std::nullopt;
            s.rep_target[edit.repair] = 1;
            break;
        }
        case BugKind::ArgSwap: {
            set_shifted(s.rep_target, edit.repair, n);
            break;
        }
    }
    if (!any_set(s.rep_target)) return std::nullopt;
    for (std::size_t i = 0; i < rep_len; ++i) {
        if (s.rep_target[i] && !s.rep_mask[i]) return std::nullopt;
    }
    s.meta = std::move(meta);
    validate_sample(s);
    return s;
}

std::uint64_t token_text_hash(const std::vector<std::string>& tokens) {
    // FNV-1a over texts with a separator byte, so ["ab","c"] != ["a","bc"]
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    };
    for (const std::string& t : tokens) {
        for (char c : t) mix(static_cast<unsigned char>(c));
        mix(0x1f);
    }
    return h;
}

std::vector<Sample> dedup_with(DedupState& state, std::vector<Sample> samples,
                               bool paired) {
    std::vector<Sample> out;
    out.reserve(samples.size());
    if (!paired) {
        for (Sample& s : samples) {
            std::uint64_t key = token_text_hash(s.tokens);
            if (state.seen.insert(key).second) {
                out.push_back(std::move(s));
            } else {
                ++state.dropped;
            }
        }
        return out;
    }
    if (samples.size() % 2 != 0) {
        throw FormatError("paired dedup needs an even sample count");
    }
    for (std::size_t i = 0; i + 1 < samples.size(); i += 2) {
        std::uint64_t ka = token_text_hash(samples[i].tokens);
        std::uint64_t kb = token_text_hash(samples[i + 1].tokens);
        if (state.seen.count(ka) || state.seen.count(kb) || ka == kb) {
            state.dropped += 2;
            continue;
        }
        state.seen.insert(ka);
        state.seen.insert(kb);
        out.push_back(std::move(samples[i]));
        out.push_back(std::move(samples[i + 1]));
    }
    return out;
}

std::vector<Sample> dedup(std::vector<Sample> samples) {
    DedupState state;
    return dedup_with(state, std::move(samples), false);
}

namespace {

json bits_to_json(const std::vector<std::uint8_t>& bits) {
    json arr = json::array();
    for (std::uint8_t b : bits) arr.push_back(static_cast<int>(b));
    return arr;
}

std::vector<std::uint8_t> bits_from_json(const json& arr, const char* what) {
    if (!arr.is_array()) throw FormatError(std::string(what) + " must be an array");
    std::vector<std::uint8_t> bits;
    bits.reserve(arr.size());
    for (const json& v : arr) {
        if (!v.is_number_integer()) throw FormatError(std::string(what) + " entries must be 0/1");
        int b = v.get<int>();
        if (b != 0 && b != 1) throw FormatError(std::string(what) + " entries must be 0/1");
        bits.push_back(static_cast<std::uint8_t>(b));
    }
    return bits;
}

}  // namespace

void write_split(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const Sample& s : split.samples) {
        json rec;
        rec["version"] = kDatasetVersion;
        rec["kind"] = to_string(s.kind);
        rec["tokens"] = s.tokens;
        rec["label"] = s.label;
        rec["loc_mask"] = bits_to_json(s.loc_mask);
        rec["loc_target"] = bits_to_json(s.loc_target);
        rec["rep_mask"] = bits_to_json(s.rep_mask);
        rec["rep_target"] = bits_to_json(s.rep_target);
        rec["meta"] = {{"repo", s.meta.repo},
                       {"file", s.meta.file},
                       {"function", s.meta.function},
                       {"origin", s.meta.origin}};
        out << rec.dump() << '\n';
    }
    write_text_file(path, out.str());

    SplitStats stats = compute_stats(split.samples);
    json side;
    side["name"] = split.name;
    side["repo_count"] = stats.repo_count;
    side["buggy"] = stats.buggy;
    side["nonbuggy"] = stats.nonbuggy;
    write_text_file(path.string() + ".stats.json", side.dump(2) + "\n");
}

DatasetSplit read_split(const std::filesystem::path& path) {
    DatasetSplit split;
    std::string content = read_text_file(path);
    std::istringstream lines(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            if (!rec.contains("version") || rec["version"].get<int>() != kDatasetVersion) {
                throw FormatError("unsupported dataset version");
            }
            Sample s;
            s.kind = bug_kind_from_string(rec.at("kind").get<std::string>());
            s.tokens = rec.at("tokens").get<std::vector<std::string>>();
            s.label = rec.at("label").get<int>();
            s.loc_mask = bits_from_json(rec.at("loc_mask"), "loc_mask");
            s.loc_target = bits_from_json(rec.at("loc_target"), "loc_target");
            s.rep_mask = bits_from_json(rec.at("rep_mask"), "rep_mask");
            s.rep_target = bits_from_json(rec.at("rep_target"), "rep_target");
            const json& meta = rec.at("meta");
            s.meta.repo = meta.at("repo").get<std::string>();
            s.meta.file = meta.at("file").get<std::string>();
            s.meta.function = meta.at("function").get<std::string>();
            s.meta.origin = meta.at("origin").get<std::string>();
            validate_sample(s);
            split.samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }

    std::filesystem::path side = path.string() + ".stats.json";
    if (std::filesystem::exists(side)) {
        try {
            json j = json::parse(read_text_file(side));
            split.name = j.value("name", path.stem().string());
        } catch (const json::exception&) {
            split.name = path.stem().string();
        }
    } else {
        split.name = path.stem().string();
    }
    split.stats = compute_stats(split.samples);
    return split;
}

}  // namespace driftlab
