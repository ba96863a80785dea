#include "atntopo/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "atntopo/classify.hpp"
#include "atntopo/features.hpp"
#include "atntopo/io.hpp"
#include "atntopo/parallel.hpp"
#include "atntopo/persistence.hpp"
#include "atntopo/rtd.hpp"
#include "atntopo/scoring.hpp"

namespace atntopo {

std::string format_metric(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace {

using nlohmann::json;

// Container values are float32, so derived quantities carry about seven
// significant digits; printing more would only show float noise.
std::string format_sig(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 7);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("invalid ") + what + " entry '" + item + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (double v : parse_list(s, "index"))
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw std::invalid_argument("invalid component index " + format_double(v));
        else
            out.push_back(static_cast<std::size_t>(v));
    return out;
}

AttentionDirection parse_direction(const std::string& s) {
    if (s == "both") return AttentionDirection::Both;
    if (s == "forward") return AttentionDirection::Forward;
    if (s == "backward") return AttentionDirection::Backward;
    throw std::invalid_argument("unknown direction '" + s + "' (expected both, forward or backward)");
}

// Turns a JSON config object into flags placed ahead of the user's own, so
// explicit flags win under the take-last policy.
std::vector<std::string> config_args(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config " + path.string() + " must be a JSON object");
    std::vector<std::string> out;
    for (const auto& [key, value] : j.items()) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            out.push_back(flag);
            out.push_back(joined);
        } else if (value.is_string()) {
            out.push_back(flag);
            out.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            out.push_back(flag);
            out.push_back(value.dump());
        } else {
            throw std::runtime_error("config key '" + key + "' has an unsupported value");
        }
    }
    return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
        else continue;
        if (args.empty() || args[0].rfind("-", 0) == 0) return args;
        std::vector<std::string> out{args[0]};
        for (auto& a : config_args(path)) out.push_back(std::move(a));
        out.insert(out.end(), args.begin() + 1, args.end());
        return out;
    }
    return args;
}

struct Options {
    std::string input, output, other, model, heads_path;
    std::string thresholds, bar_thresholds;
    std::string rule = "h0m", rules = "both", mode = "top", direction = "both";
    std::size_t beam_cap = 40, initial_top_k = 0, restarts = 5, folds = 3, cycle_cap = kDefaultCycleCap;
    std::uint64_t seed = 0;
    int layer = -1, head = -1;
    bool drop_special = false;
    std::string grid = "none", penalty = "l2", mask;
    std::optional<std::size_t> n_comp;
    double reg = 0.1;
    std::size_t max_iter = 5000;
    double tol = 1e-6;
};

FeatureConfig feature_config(const Options& o) {
    FeatureConfig cfg;
    if (!o.thresholds.empty()) cfg.thresholds = parse_list(o.thresholds, "threshold");
    if (!o.bar_thresholds.empty()) cfg.bar_thresholds = parse_list(o.bar_thresholds, "bar threshold");
    cfg.drop_special = o.drop_special;
    cfg.cycle_cap = o.cycle_cap;
    cfg.validate();
    return cfg;
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
    if (o.output.empty()) out << text;
    else atomic_write(o.output, [&](std::ostream& os) { os << text; });
}

int cmd_features(const Options& o, std::ostream& out, std::ostream& err) {
    const FeatureConfig cfg = feature_config(o);
    const auto records = read_sentences(o.input);
    std::vector<FeatureRow> rows(records.size());
    std::vector<std::size_t> warnings(records.size(), 0);
    parallel_for(records.size(), [&](std::size_t i) {
        const AttentionContainer c = read_container(records[i].attention);
        warnings[i] = c.warnings.size();
        rows[i] = {records[i].id, records[i].label, sentence_features(c.grid, cfg)};
    });
    write_feature_table(o.output, rows);
    std::size_t total = 0;
    for (std::size_t w : warnings) total += w;
    if (total > 0) err << "atntopo: warning: " << total << " attention-map problems found while reading\n";
    out << "wrote " << rows.size() << " rows to " << o.output << "\n";
    return 0;
}

const AttentionMap& pick_head(const AttentionGrid& g, const Options& o) {
    return g.at(HeadId{std::max(o.layer, 0), std::max(o.head, 0)});
}

int cmd_barcode(const Options& o, std::ostream& out, std::ostream&) {
    const AttentionContainer c = read_container(o.input);
    const AttentionMap& m = pick_head(c.grid, o);
    const FeatureConfig cfg = feature_config(o);
    const AttentionMap a =
        cfg.drop_special ? m.restricted([&] {
            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < m.size(); ++i)
                if (!m.meta.is_special(i)) keep.push_back(i);
            return keep;
        }())
                         : m;
    const Barcode b = full_barcode(symmetrize_distance(a));
    std::ostringstream os;
    os << "dim\tbirth\tdeath\n";
    for (int dim : {0, 1})
        for (const Bar& bar : b.dimension(dim))
            os << dim << '\t' << format_sig(bar.birth) << '\t' << format_sig(bar.death) << '\n';
    emit(o, out, os.str());
    return 0;
}

int cmd_rtd(const Options& o, std::ostream& out, std::ostream&) {
    if (o.other.empty()) throw std::invalid_argument("rtd needs --other");
    const AttentionContainer a = read_container(o.input);
    const AttentionContainer b = read_container(o.other);
    const AttentionDirection dir = parse_direction(o.direction);
    std::vector<HeadId> heads;
    if (o.layer >= 0 || o.head >= 0) heads.push_back({std::max(o.layer, 0), std::max(o.head, 0)});
    else
        for (std::size_t l = 0; l < a.grid.layers; ++l)
            for (std::size_t h = 0; h < a.grid.heads; ++h) heads.push_back({static_cast<int>(l), static_cast<int>(h)});
    std::vector<std::pair<double, double>> values(heads.size());
    parallel_for(heads.size(), [&](std::size_t k) {
        const auto [da, db] = aligned_distances(a.grid.at(heads[k]), b.grid.at(heads[k]), dir);
        values[k] = {rtd(da, db), rtd(db, da)};
    });
    std::ostringstream os;
    os << "layer\thead\trtd_ab\trtd_ba\n";
    for (std::size_t k = 0; k < heads.size(); ++k)
        os << heads[k].layer << '\t' << heads[k].head << '\t' << format_sig(values[k].first) << '\t'
           << format_sig(values[k].second) << '\n';
    emit(o, out, os.str());
    return 0;
}

std::vector<MinimalPair> load_pairs(const fs::path& path) {
    const auto records = read_pairs(path);
    if (records.empty()) throw std::invalid_argument(path.string() + " contains no pairs");
    std::vector<MinimalPair> pairs(records.size());
    parallel_for(records.size(), [&](std::size_t i) { pairs[i] = load_pair(records[i]); });
    return pairs;
}

std::vector<Rule> selected_rules(const std::string& s) {
    if (s == "both") return {Rule::H0M, Rule::RTD};
    return {parse_rule(s)};
}

HeadConfig all_heads_config(const AttentionGrid& g, Rule rule) {
    HeadConfig c;
    c.mode = HeadMode::All;
    const Rule rules[] = {rule};
    c.members = candidate_universe(g.layers, g.heads, rules);
    return c;
}

// Per-pair votes for pair-specific configs; ties use the seeded coin.
struct Scored {
    std::vector<Choice> choices;
    std::size_t correct = 0;
};

Scored score_with(const VoteTable& table, const std::vector<std::vector<std::size_t>>& members, std::uint64_t seed) {
    Scored s;
    for (std::size_t i = 0; i < table.pair_count(); ++i) {
        std::size_t votes_a = 0;
        for (std::size_t m : members[i]) votes_a += table.choice(m, i) == Choice::A;
        const std::size_t votes_b = members[i].size() - votes_a;
        const Choice c = votes_a > votes_b ? Choice::A : votes_b > votes_a ? Choice::B : tie_break(seed, i);
        s.choices.push_back(c);
        s.correct += c == table.acceptable(i);
    }
    return s;
}

int cmd_score_pairs(const Options& o, std::ostream& out, std::ostream& err) {
    const auto pairs = load_pairs(o.input);
    const HeadMode mode = parse_mode(o.mode);
    const AttentionDirection dir = parse_direction(o.direction);

    std::vector<HeadConfig> per_pair(pairs.size());
    if (!o.heads_path.empty()) {
        const HeadManifest manifest = head_manifest_from_json(json::parse(read_file(o.heads_path)));
        for (std::size_t i = 0; i < pairs.size(); ++i)
            per_pair[i] = manifest.for_phenomenon(mode == HeadMode::Phenomenon ? pairs[i].phenomenon : "").config;
    } else if (mode == HeadMode::All) {
        const HeadConfig c = all_heads_config(pairs.front().a.attention, parse_rule(o.rule));
        std::fill(per_pair.begin(), per_pair.end(), c);
    } else if (mode == HeadMode::Top) {
        // Without a manifest the head comes from --layer/--head, defaulting to (0, 0) like barcode.
        HeadConfig c{{Candidate{HeadId{std::max(o.layer, 0), std::max(o.head, 0)}, parse_rule(o.rule)}}, HeadMode::Top};
        std::fill(per_pair.begin(), per_pair.end(), c);
    } else {
        throw std::invalid_argument("score-pairs --mode " + o.mode + " needs a --heads manifest");
    }

    std::set<Candidate> used;
    for (const auto& c : per_pair) used.insert(c.members.begin(), c.members.end());
    const VoteTable table = VoteTable::build(pairs, std::vector<Candidate>(used.begin(), used.end()), dir);
    std::vector<std::vector<std::size_t>> members(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (const Candidate& c : per_pair[i].members) members[i].push_back(table.index_of(c));

    // Only the all-heads vote is randomized, so only it is restarted.
    const std::size_t restarts = mode == HeadMode::All ? std::max<std::size_t>(1, o.restarts) : 1;
    Scored best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Scored s = score_with(table, members, o.seed + r);
        if (r == 0 || s.correct > best.correct) best = std::move(s);
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        os << i << '\t' << pairs[i].phenomenon << '\t' << (best.choices[i] == Choice::A ? 'A' : 'B') << '\t'
           << (best.choices[i] == pairs[i].acceptable ? 1 : 0) << '\n';
    emit(o, out, os.str());
    err << "accuracy=" << format_metric(static_cast<double>(best.correct) / static_cast<double>(pairs.size())) << "\n";
    return 0;
}

int cmd_select_heads(const Options& o, std::ostream& out, std::ostream&) {
    const auto pairs = load_pairs(o.input);
    const HeadMode mode = parse_mode(o.mode);
    const AttentionGrid& g = pairs.front().a.attention;
    const AttentionDirection dir = parse_direction(o.direction);

    HeadManifest manifest;
    manifest.mode = mode;
    manifest.seed = o.seed;
    manifest.beam_cap = o.beam_cap;
    const std::vector<Rule> rules = mode == HeadMode::All ? std::vector<Rule>{parse_rule(o.rule)} : selected_rules(o.rules);
    const VoteTable table = VoteTable::build(pairs, candidate_universe(g.layers, g.heads, rules), dir);

    switch (mode) {
        case HeadMode::Top: {
            const ScoredCandidate s = select_top_head(table);
            manifest.configs.push_back({"", HeadConfig{{s.candidate}, HeadMode::Top}, s.accuracy});
            break;
        }
        case HeadMode::Phenomenon: {
            std::set<std::string> phenomena;
            for (const auto& p : pairs) phenomena.insert(p.phenomenon);
            for (const std::string& ph : phenomena) {
                const ScoredCandidate s = select_phenomenon_head(table, ph);
                manifest.configs.push_back({ph, HeadConfig{{s.candidate}, HeadMode::Phenomenon}, s.accuracy});
            }
            break;
        }
        case HeadMode::Ensemble: {
            const EnsembleResult r = select_ensemble(table, {o.beam_cap, o.initial_top_k});
            manifest.configs.push_back({"", r.config, r.accuracy});
            break;
        }
        case HeadMode::All: {
            std::vector<std::size_t> all(table.candidate_count());
            for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
            double best = 0.0;
            for (std::size_t r = 0; r < std::max<std::size_t>(1, o.restarts); ++r)
                best = std::max(best, table.accuracy(all, o.seed + r));
            manifest.configs.push_back({"", HeadConfig{table.candidates(), HeadMode::All}, best});
            break;
        }
    }
    const std::string text = head_manifest_to_json(manifest).dump(2) + "\n";
    emit(o, out, text);
    if (!o.output.empty())
        for (const auto& c : manifest.configs)
            out << (c.phenomenon.empty() ? "all" : c.phenomenon) << '\t' << c.config.members.size() << " member(s)\t"
                << "accuracy=" << format_metric(c.selection_accuracy) << '\n';
    return 0;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream&) {
    const LabeledDataset ds = read_feature_table(o.input);
    ds.validate();
    PipelineParams params;
    params.n_comp = o.n_comp;
    if (!o.mask.empty()) params.active_components = parse_index_list(o.mask);
    params.logreg.reg = o.reg;
    params.logreg.penalty = parse_penalty(o.penalty);
    params.logreg.max_iter = o.max_iter;
    params.logreg.tol = o.tol;

    if (o.grid == "standard") {
        std::vector<PipelineParams> grid = standard_grid();
        for (auto& g : grid) {
            g.logreg.penalty = params.logreg.penalty;
            g.logreg.max_iter = params.logreg.max_iter;
            g.logreg.tol = params.logreg.tol;
            g.active_components = params.active_components;
        }
        const GridResult r = grid_search(ds.x, ds.labels, grid, o.folds, o.seed);
        params = r.best;
        const std::size_t limit = std::min<std::size_t>(ds.rows() - 1, static_cast<std::size_t>(ds.x.cols()));
        if (params.n_comp) params.n_comp = std::min(*params.n_comp, limit);
        out << "grid best: " << params.describe() << "\tcv_mcc=" << format_metric(r.best_score) << '\n';
    } else if (o.grid != "none") {
        throw std::invalid_argument("unknown grid '" + o.grid + "' (expected none or standard)");
    }
    SavedModel m{Pipeline::fit(ds.x, ds.labels, params), ds.feature_names};
    write_model(o.output, m);
    const std::vector<int> pred = m.pipeline.predict(ds.x);
    out << "train acc=" << format_metric(accuracy_score(pred, ds.labels))
        << "\tmcc=" << format_metric(mcc(pred, ds.labels)) << '\n';
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
    const LabeledDataset ds = read_feature_table(o.input);
    ds.validate();
    if (ds.rows() == 0) throw std::invalid_argument(o.input + " has no rows");
    const SavedModel m = read_model(o.model);
    if (m.feature_names != ds.feature_names)
        throw std::invalid_argument("feature columns of " + o.input + " do not match the model");
    const std::vector<int> pred = m.pipeline.predict(ds.x);
    if (!o.output.empty()) {
        const Eigen::VectorXd prob = m.pipeline.predict_proba(ds.x);
        atomic_write(o.output, [&](std::ostream& os) {
            os << "id\tlabel\tprediction\tprobability\n";
            for (std::size_t i = 0; i < ds.rows(); ++i)
                os << ds.ids[i] << '\t' << ds.labels[i] << '\t' << pred[i] << '\t'
                   << format_double(prob(static_cast<Eigen::Index>(i))) << '\n';
        });
    }
    out << "acc=" << format_metric(accuracy_score(pred, ds.labels)) << "\tmcc=" << format_metric(mcc(pred, ds.labels))
        << '\n';
    return 0;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topological features and scoring for Transformer attention maps", "atntopo"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    Options o;
    std::string config_path;

    auto common = [&](CLI::App* sub, bool output_required) {
        sub->add_option("--config", config_path, "JSON file whose keys mirror the flags");
        sub->add_option("--seed", o.seed, "Seed for tie-breaking and fold assignment");
        auto* opt = sub->add_option("--output,-o", o.output, "Output path");
        if (output_required) opt->required();
    };
    auto feature_flags = [&](CLI::App* sub) {
        sub->add_option("--thresholds", o.thresholds, "Comma-separated filtration thresholds");
        sub->add_option("--bar-thresholds", o.bar_thresholds, "Comma-separated barcode statistic thresholds");
        sub->add_option("--cycle-cap", o.cycle_cap, "Cap on counted simple cycles");
        sub->add_flag("--drop-special", o.drop_special, "Remove special-token vertices before computing features");
    };
    auto head_flags = [&](CLI::App* sub) {
        sub->add_option("--layer", o.layer, "Layer index");
        sub->add_option("--head", o.head, "Head index");
    };

    auto* features = app.add_subcommand("features", "Compute the feature table for a sentence list");
    features->add_option("--input,-i", o.input, "Sentence TSV")->required();
    common(features, true);
    feature_flags(features);

    auto* barcode = app.add_subcommand("barcode", "Print the H0/H1 barcode of one head");
    barcode->add_option("--input,-i", o.input, "Attention container")->required();
    common(barcode, false);
    head_flags(barcode);
    barcode->add_flag("--drop-special", o.drop_special, "Remove special-token vertices");

    auto* rtd_cmd = app.add_subcommand("rtd", "RTD in both directions between two containers");
    rtd_cmd->add_option("--input,-i", o.input, "First attention container")->required();
    rtd_cmd->add_option("--other", o.other, "Second attention container")->required();
    rtd_cmd->add_option("--direction", o.direction, "both, forward or backward attention");
    common(rtd_cmd, false);
    head_flags(rtd_cmd);

    auto* score = app.add_subcommand("score-pairs", "Choose the acceptable sentence of each minimal pair");
    score->add_option("--input,-i", o.input, "Pairs JSONL")->required();
    score->add_option("--rule", o.rule, "h0m or rtd");
    score->add_option("--mode", o.mode, "top, phenomenon, ensemble or all");
    score->add_option("--heads", o.heads_path, "Head manifest from select-heads");
    score->add_option("--restarts", o.restarts, "Seeds tried in all-heads mode; the best is reported");
    score->add_option("--direction", o.direction, "both, forward or backward attention for RTD");
    common(score, false);
    head_flags(score);

    auto* select = app.add_subcommand("select-heads", "Select heads on a pair set and write a manifest");
    select->add_option("--input,-i", o.input, "Pairs JSONL")->required();
    select->add_option("--mode", o.mode, "top, phenomenon, ensemble or all");
    select->add_option("--rule", o.rule, "Rule for all-heads mode");
    select->add_option("--rules", o.rules, "Candidate rules: h0m, rtd or both");
    select->add_option("--beam-cap", o.beam_cap, "Beam width for ensemble search");
    select->add_option("--initial-top-k", o.initial_top_k, "Start the beam from the k best singletons (0 = all)");
    select->add_option("--restarts", o.restarts, "Seeds tried in all-heads mode");
    select->add_option("--direction", o.direction, "both, forward or backward attention for RTD");
    common(select, true);

    auto* train = app.add_subcommand("train", "Fit standardize/PCA/logistic-regression on a feature table");
    train->add_option("--input,-i", o.input, "Feature table")->required();
    train->add_option("--n-comp", o.n_comp, "PCA components (omit for no PCA)");
    train->add_option("--mask", o.mask, "Comma-separated active PCA components");
    train->add_option("--reg", o.reg, "Regularization strength");
    train->add_option("--penalty", o.penalty, "l2 or l1");
    train->add_option("--max-iter", o.max_iter, "Optimizer iteration limit");
    train->add_option("--tol", o.tol, "Gradient-norm tolerance");
    train->add_option("--grid", o.grid, "none or standard");
    train->add_option("--folds", o.folds, "Cross-validation folds for grid search");
    common(train, true);
    train->alias("fit");

    auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a feature table");
    eval->add_option("--input,-i", o.input, "Feature table")->required();
    eval->add_option("--model", o.model, "Saved model")->required();
    common(eval, false);

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
        if (*features) return cmd_features(o, out, err);
        if (*barcode) return cmd_barcode(o, out, err);
        if (*rtd_cmd) return cmd_rtd(o, out, err);
        if (*score) return cmd_score_pairs(o, out, err);
        if (*select) return cmd_select_heads(o, out, err);
        if (*train) return cmd_train(o, out, err);
        if (*eval) return cmd_eval(o, out, err);
        return 1;
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        out << (parsed.empty() ? app.help() : parsed.front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "atntopo: error: " << one_line(e.what()) << '\n';
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    } catch (const std::exception& e) {
        err << "atntopo: error: " << one_line(e.what()) << '\n';
        return 1;
    }
}

}  // namespace atntopo
