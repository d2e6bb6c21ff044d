#include "promptrec/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "promptrec/checkpoint.hpp"
#include "promptrec/error.hpp"
#include "promptrec/io.hpp"

namespace fs = std::filesystem;

namespace promptrec {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"seed", "42"},
        {"encoder", "gru"},
        {"data.mode", "canonical"},
        {"data.min_len", "3"},
        {"data.max_len", "50"},
        {"data.min_item_count", "0"},
        {"data.col_session", ""},
        {"data.col_time", ""},
        {"data.col_item", ""},
        {"data.col_behavior", ""},
        {"reward.click", "0.2"},
        {"reward.purchase", "1.0"},
        {"reward.lambda", "0.5"},
        {"reward.discount_mode", "absolute"},
        {"train.batch_size", "256"},
        {"train.learning_rate", "0.01"},
        {"train.epochs", "10"},
        {"train.dim", "64"},
        {"train.dropout", "0"},
        {"train.block_variant", "self_attention"},
        {"train.loss_weight", "immediate"},
        {"train.layer_norm", "false"},
        {"train.baseline", "false"},
        {"infer.mu", "2"},
        {"infer.epsilon", "0"},
        {"infer.runs", "1"},
        {"infer.ks", "5,10,20"},
        {"sweep.parameter", "mu"},
        {"sweep.grid", "1,2,3,4"},
        {"synth.vocab", "50"},
        {"synth.sessions", "1000"},
        {"synth.bias", "0.5"},
        {"synth.fanout", "1"},
        {"synth.min_len", "5"},
        {"synth.max_len", "12"},
        {"synth.output", ""},
        {"paths.input", ""},
        {"paths.work_dir", "work"},
        {"paths.checkpoint", ""},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

// Exclusive lock file guarding a work directory against concurrent writers.
class WorkDirLock {
public:
    explicit WorkDirLock(const std::string& dir) {
        fs::create_directories(dir);
        path_ = (fs::path(dir) / ".lock").string();
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw IoError("work directory '" + dir + "' is locked ('" + path_ +
                          "' exists); remove it if no other run is active");
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] ssize_t n = ::write(fd, pid.c_str(), pid.size());
        ::close(fd);
    }
    ~WorkDirLock() { ::unlink(path_.c_str()); }
    WorkDirLock(const WorkDirLock&) = delete;
    WorkDirLock& operator=(const WorkDirLock&) = delete;

private:
    std::string path_;
};

std::string work_file(const RunConfig& cfg, const char* name) {
    return (fs::path(cfg.work_dir()) / name).string();
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ostringstream os;
    for (const auto& [key, value] : entries) os << key << " = " << value << '\n';
    write_text_file(path, os.str());
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::map<std::string, std::string> out;
    for (const std::string& line : read_lines(path)) {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::uint64_t config_hash_hex(const RunConfig& cfg, std::string* hex_out) {
    const std::uint64_t h = cfg.hash();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    *hex_out = buf;
    return h;
}

EventLayout layout_for(const RunConfig& cfg) {
    EventLayout layout = cfg.get("data.mode") == "retailrocket" ? EventLayout::retailrocket()
                                                                : EventLayout::challenge15();
    if (!cfg.get("data.col_session").empty()) layout.session_col = cfg.get("data.col_session");
    if (!cfg.get("data.col_time").empty()) layout.time_col = cfg.get("data.col_time");
    if (!cfg.get("data.col_item").empty()) layout.item_col = cfg.get("data.col_item");
    if (!cfg.get("data.col_behavior").empty()) layout.behavior_col = cfg.get("data.col_behavior");
    return layout;
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.values_ = default_values();
    return cfg;
}

void RunConfig::load_file(const std::string& path) {
    for (const std::string& raw : read_lines(path)) {
        const std::string no_comment = raw.substr(0, raw.find('#'));
        const std::string line = trim(no_comment);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValueError("config '" + path + "': expected key = value, got '" + raw + "'");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValueError("config: unknown key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValueError("config: unknown key '" + key + "'");
    return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
    return parse_int(get(key), key.c_str());
}

double RunConfig::get_double(const std::string& key) const {
    return parse_double(get(key), key.c_str());
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValueError("config: key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : split(get(key), ',')) {
        if (!trim(tok).empty()) out.push_back(parse_double(trim(tok), key.c_str()));
    }
    return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& tok : split(get(key), ',')) {
        if (!trim(tok).empty()) {
            out.push_back(static_cast<int>(parse_int(trim(tok), key.c_str())));
        }
    }
    return out;
}

std::string RunConfig::checkpoint_path() const {
    const std::string& explicit_path = get("paths.checkpoint");
    if (!explicit_path.empty()) return explicit_path;
    return (fs::path(work_dir()) / "model.ckpt").string();
}

RewardConfig RunConfig::reward() const {
    RewardConfig r;
    r.r_click = get_double("reward.click");
    r.r_purchase = get_double("reward.purchase");
    r.lambda = get_double("reward.lambda");
    r.discount_mode = discount_mode_from_name(get("reward.discount_mode"));
    r.validate();
    return r;
}

TrainConfig RunConfig::train() const {
    TrainConfig t;
    t.batch_size = static_cast<std::size_t>(get_int("train.batch_size"));
    t.learning_rate = get_double("train.learning_rate");
    t.epochs = static_cast<std::size_t>(get_int("train.epochs"));
    t.loss_weight = get_bool("train.baseline")
                        ? LossWeightMode::none
                        : loss_weight_mode_from_name(get("train.loss_weight"));
    t.seed = seed();
    t.validate();
    return t;
}

ModelConfig RunConfig::model(std::size_t vocab) const {
    ModelConfig m;
    m.vocab = vocab;
    m.dim = static_cast<std::size_t>(get_int("train.dim"));
    m.encoder = get("encoder");
    m.block = get_bool("train.baseline") ? BlockVariant::plain
                                         : block_variant_from_name(get("train.block_variant"));
    m.layer_norm = get_bool("train.layer_norm");
    m.dropout = get_double("train.dropout");
    m.validate();
    return m;
}

InferenceConfig RunConfig::infer() const {
    InferenceConfig i;
    i.mu = get_double("infer.mu");
    i.epsilon = get_double("infer.epsilon");
    i.seed = seed();
    i.ks = get_int_list("infer.ks");
    i.validate();
    return i;
}

SynthSpec RunConfig::synth() const {
    SynthSpec s;
    s.vocab = static_cast<int>(get_int("synth.vocab"));
    s.sessions = static_cast<int>(get_int("synth.sessions"));
    s.high_bias = get_double("synth.bias");
    s.fanout = static_cast<int>(get_int("synth.fanout"));
    s.min_len = static_cast<int>(get_int("synth.min_len"));
    s.max_len = static_cast<int>(get_int("synth.max_len"));
    s.seed = seed();
    s.validate();
    return s;
}

std::map<std::string, std::string> RunConfig::semantic_values() const {
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : values_) {
        if (key.rfind("paths.", 0) == 0 || key == "synth.output") continue;
        out.emplace(key, value);
    }
    return out;
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    for (const auto& [key, value] : semantic_values()) os << key << " = " << value << '\n';
    return os.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

int cmd_prepare(const RunConfig& cfg) {
    const std::string mode = cfg.get("data.mode");
    const RewardConfig reward_cfg = cfg.reward();

    // Validate the input before any artifact is written.
    std::vector<Session> sessions;
    std::vector<std::string> item_names;
    std::size_t skipped = 0;
    if (mode == "synthetic") {
        sessions = synth_corpus(cfg.synth());
    } else {
        const std::string& input = cfg.get("paths.input");
        if (input.empty()) throw ValueError("prepare: paths.input is required for mode " + mode);
        if (!fs::exists(input)) throw IoError("prepare: input '" + input + "' does not exist");
        if (mode == "canonical") {
            sessions = read_sessions_tsv(input);
        } else if (mode == "challenge15" || mode == "retailrocket") {
            std::ifstream in(input, std::ios::binary);
            if (!in) throw IoError("prepare: cannot open '" + input + "'");
            ParsedEvents parsed = parse_events_csv(in, layout_for(cfg));
            IngestResult ingested = ingest_events(parsed.events, parsed.skipped);
            sessions = std::move(ingested.sessions);
            item_names = std::move(ingested.item_names);
            skipped = ingested.skipped;
        } else {
            throw ValueError("prepare: unknown data.mode '" + mode + "'");
        }
    }
    const std::size_t ingested_count = sessions.size();

    const long long min_count = cfg.get_int("data.min_item_count");
    sessions = filter_sessions(sessions, static_cast<int>(cfg.get_int("data.min_len")),
                               static_cast<int>(cfg.get_int("data.max_len")),
                               min_count > 0 ? std::optional<int>(static_cast<int>(min_count))
                                             : std::nullopt);
    item_names = compact_items(sessions, item_names);
    const std::size_t item_count = item_names.size() - 1;

    std::size_t clicks = 0, purchases = 0;
    for (const Session& s : sessions) {
        for (Behavior b : s.behaviors) {
            (b == Behavior::purchase ? purchases : clicks) += 1;
        }
    }

    const DatasetSplit split = split_dataset(sessions, cfg.seed());
    const std::vector<PromptSample> prompts = generate_prompts(split.train, reward_cfg);
    const StepRewardTable table = StepRewardTable::from_samples(prompts);

    const WorkDirLock lock(cfg.work_dir());
    write_sessions_tsv(split.train, work_file(cfg, "sessions_train.tsv"));
    write_sessions_tsv(split.validation, work_file(cfg, "sessions_validation.tsv"));
    write_sessions_tsv(split.test, work_file(cfg, "sessions_test.tsv"));
    write_item_map_tsv(item_names, work_file(cfg, "item_map.tsv"));
    write_prompts_tsv(prompts, work_file(cfg, "prompts_train.tsv"));
    write_step_table_csv(table, work_file(cfg, "step_rewards.csv"));

    std::string hash_hex;
    config_hash_hex(cfg, &hash_hex);
    write_manifest(work_file(cfg, "manifest.txt"),
                   {{"artifact", "prepared"},
                    {"config_hash", hash_hex},
                    {"seed", std::to_string(cfg.seed())},
                    {"dataset_mode", mode},
                    {"sessions_ingested", std::to_string(ingested_count)},
                    {"sessions_kept", std::to_string(sessions.size())},
                    {"rows_skipped", std::to_string(skipped)},
                    {"items", std::to_string(item_count)},
                    {"clicks", std::to_string(clicks)},
                    {"purchases", std::to_string(purchases)},
                    {"train_sessions", std::to_string(split.train.size())},
                    {"validation_sessions", std::to_string(split.validation.size())},
                    {"test_sessions", std::to_string(split.test.size())},
                    {"train_prompts", std::to_string(prompts.size())}});

    std::cout << "prepared " << sessions.size() << " sessions (" << item_count << " items, "
              << prompts.size() << " training prompts, " << skipped << " rows skipped) into "
              << cfg.work_dir() << '\n';
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    const auto manifest = read_manifest(work_file(cfg, "manifest.txt"));
    auto it = manifest.find("items");
    if (it == manifest.end()) {
        throw IoError("train: manifest missing 'items'; run prepare first");
    }
    const std::size_t vocab = static_cast<std::size_t>(parse_int(it->second, "items"));

    const std::vector<PromptSample> prompts =
        read_prompts_tsv(work_file(cfg, "prompts_train.tsv"));
    const StepRewardTable table = read_step_table_csv(work_file(cfg, "step_rewards.csv"));
    const RewardConfig reward_cfg = cfg.reward();

    std::vector<Session> validation;
    const std::string val_path = work_file(cfg, "sessions_validation.tsv");
    if (fs::exists(val_path)) validation = read_sessions_tsv(val_path);

    const WorkDirLock lock(cfg.work_dir());

    Rng rng(cfg.seed());
    Model model(cfg.model(vocab), rng);
    const TrainConfig train_cfg = cfg.train();

    ValidationFn validator;
    if (!validation.empty()) {
        validator = [&](Model& m) {
            InferenceConfig ic = cfg.infer();
            ic.ks = {10};
            // Model selection: purchase NDCG@10 on the validation split.
            return evaluate(m, validation, reward_cfg, table, ic).purchase.ndcg.at(10);
        };
    }

    const std::string last_path = work_file(cfg, "model_last.ckpt");
    const std::string best_path = cfg.checkpoint_path();
    EpochHook hook = [&](Model& m, std::size_t epoch, bool best) {
        (void)epoch;
        save_checkpoint(last_path, m, cfg.seed(), cfg.semantic_values());
        if (best) save_checkpoint(best_path, m, cfg.seed(), cfg.semantic_values());
    };

    const TrainResult result = train_model(model, prompts, train_cfg, rng, validator, hook);

    // Loss trace: one row per mini-batch.
    const std::size_t batches_per_epoch =
        (prompts.size() + train_cfg.batch_size - 1) / train_cfg.batch_size;
    std::ostringstream trace;
    trace << "epoch,batch,loss\n";
    for (std::size_t i = 0; i < result.batch_losses.size(); ++i) {
        trace << (i / batches_per_epoch + 1) << ',' << (i % batches_per_epoch + 1) << ','
              << format_g17(result.batch_losses[i]) << '\n';
    }
    write_text_file(work_file(cfg, "loss_trace.csv"), trace.str());

    for (std::size_t e = 0; e < result.epoch_mean_losses.size(); ++e) {
        std::cout << "epoch " << (e + 1) << "  train_loss "
                  << format_fixed(result.epoch_mean_losses[e]);
        if (e < result.validation_scores.size()) {
            std::cout << "  val_purchase_ndcg10 " << format_fixed(result.validation_scores[e]);
        }
        std::cout << '\n';
    }
    if (result.best_epoch > 0) {
        std::cout << "best epoch " << result.best_epoch << "; checkpoint " << best_path << '\n';
    }
    if (result.halted) {
        std::cerr << "training halted: " << result.halt_reason << '\n';
        if (result.best_epoch > 0) {
            std::cerr << "last good checkpoint: " << best_path << '\n';
        }
        return 3;
    }
    return 0;
}

namespace {

struct EvalInputs {
    LoadedCheckpoint checkpoint;
    std::vector<Session> test;
    StepRewardTable table;

    EvalInputs(const RunConfig& cfg)
        : checkpoint(load_checkpoint(cfg.checkpoint_path())),
          test(read_sessions_tsv(work_file(cfg, "sessions_test.tsv"))),
          table(read_step_table_csv(work_file(cfg, "step_rewards.csv"))) {}
};

}  // namespace

int cmd_evaluate(const RunConfig& cfg) {
    if (!fs::exists(cfg.checkpoint_path())) {
        throw IoError("evaluate: checkpoint '" + cfg.checkpoint_path() + "' does not exist");
    }
    EvalInputs in(cfg);
    const WorkDirLock lock(cfg.work_dir());
    const int runs = static_cast<int>(cfg.get_int("infer.runs"));
    EvalReport report = evaluate_runs(in.checkpoint.model, in.test, cfg.reward(), in.table,
                                      cfg.infer(), runs);
    std::string hash_hex;
    config_hash_hex(cfg, &hash_hex);
    report.config_echo["config_hash"] = hash_hex;
    report.config_echo["checkpoint_seed"] = std::to_string(in.checkpoint.seed);

    const std::string text = report_text(report);
    write_text_file(work_file(cfg, "report.txt"), text);
    write_text_file(work_file(cfg, "report.csv"), report_csv(report));
    std::cout << text;
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    if (!fs::exists(cfg.checkpoint_path())) {
        throw IoError("sweep: checkpoint '" + cfg.checkpoint_path() + "' does not exist");
    }
    EvalInputs in(cfg);
    const WorkDirLock lock(cfg.work_dir());
    const std::string parameter = cfg.get("sweep.parameter");
    const std::vector<double> grid = cfg.get_double_list("sweep.grid");
    const std::vector<SweepPoint> points =
        sweep(in.checkpoint.model, in.test, cfg.reward(), in.table, cfg.infer(), parameter, grid);
    const std::string csv = sweep_csv(points);
    const std::string out_path = work_file(cfg, ("sweep_" + parameter + ".csv").c_str());
    write_text_file(out_path, csv);
    std::cout << "swept " << parameter << " over " << points.size() << " points -> " << out_path
              << '\n';
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    const std::vector<Session> sessions = synth_corpus(cfg.synth());
    const WorkDirLock lock(cfg.work_dir());
    std::string out_path = cfg.get("synth.output");
    if (out_path.empty()) out_path = work_file(cfg, "synthetic_sessions.tsv");
    write_sessions_tsv(sessions, out_path);
    std::cout << "wrote " << sessions.size() << " synthetic sessions -> " << out_path << '\n';
    return 0;
}

namespace {

struct FlagBinding {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

void add_common_flags(CLI::App* sub, std::deque<FlagBinding>& bindings,
                      std::vector<std::string>& overrides, std::string& config_path,
                      CLI::Option*& config_opt) {
    config_opt = sub->add_option("--config", config_path, "configuration file (key = value)");
    auto bind = [&](const char* flag, const char* key, const char* help) {
        bindings.push_back({key, "", nullptr});
        FlagBinding& b = bindings.back();
        b.option = sub->add_option(flag, b.value, help);
    };
    bind("--input", "paths.input", "input dataset path");
    bind("--work-dir", "paths.work_dir", "artifact directory");
    bind("--checkpoint", "paths.checkpoint", "checkpoint path");
    bind("--seed", "seed", "global random seed");
    bind("--encoder", "encoder", "state encoder: gru | attn");
    bind("--mode", "data.mode", "dataset mode: canonical | challenge15 | retailrocket | synthetic");
    bind("--min-len", "data.min_len", "minimum session length");
    bind("--max-len", "data.max_len", "maximum session length");
    bind("--min-item-count", "data.min_item_count", "drop items seen fewer times (0 = off)");
    bind("--block-variant", "train.block_variant",
         "prompt block: self_attention | mean_pool | mlp | plain");
    bind("--loss-weight", "train.loss_weight", "loss weighting: immediate | none | cumulative");
    bind("--epochs", "train.epochs", "training epochs");
    bind("--batch-size", "train.batch_size", "mini-batch size");
    bind("--learning-rate", "train.learning_rate", "Adam learning rate");
    bind("--dim", "train.dim", "embedding size");
    bind("--dropout", "train.dropout", "dropout ratio on the attention branch");
    bind("--mu", "infer.mu", "inference reward expectation");
    bind("--epsilon", "infer.epsilon", "inference reward deviation");
    bind("--runs", "infer.runs", "evaluation repetitions (seeds seed..seed+runs-1)");
    bind("--ks", "infer.ks", "ranking cutoffs, comma separated");
    bind("--lambda", "reward.lambda", "reward discount factor");
    bind("--discount-mode", "reward.discount_mode", "discounting: absolute | relative");
    bind("--param", "sweep.parameter", "sweep parameter: mu | epsilon");
    bind("--grid", "sweep.grid", "sweep grid, comma separated");
    bind("--vocab", "synth.vocab", "synthetic vocabulary size");
    bind("--sessions", "synth.sessions", "synthetic session count");
    bind("--bias", "synth.bias", "synthetic high-tier logging probability");
    bind("--fanout", "synth.fanout", "synthetic successors per (item, tier)");
    bind("--output", "synth.output", "synthetic corpus output path");

    // Boolean flags get a fixed value when present.
    bindings.push_back({"train.layer_norm", "true", nullptr});
    bindings.back().option = sub->add_flag("--layer-norm", "enable layer normalization");
    bindings.push_back({"train.baseline", "true", nullptr});
    bindings.back().option =
        sub->add_flag("--baseline", "plain cross-entropy training (no prompt, no weighting)");

    sub->add_option("--set", overrides, "generic key=value override")->take_all();
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"reward-prompted next-item recommender"};
    app.require_subcommand(1);

    struct SubState {
        CLI::App* sub = nullptr;
        std::deque<FlagBinding> bindings;
        std::vector<std::string> overrides;
        std::string config_path;
        CLI::Option* config_opt = nullptr;
        int (*command)(const RunConfig&) = nullptr;
    };
    std::deque<SubState> subs;
    const std::pair<const char*, int (*)(const RunConfig&)> commands[] = {
        {"prepare", cmd_prepare}, {"train", cmd_train},   {"evaluate", cmd_evaluate},
        {"sweep", cmd_sweep},     {"synth", cmd_synth},
    };
    const std::map<std::string, const char*> descriptions = {
        {"prepare", "ingest, filter, split, and generate the prompt training set"},
        {"train", "train the reward-conditioned recommender"},
        {"evaluate", "rank the test set under the prompted reward"},
        {"sweep", "evaluate across a mu or epsilon grid"},
        {"synth", "generate a synthetic session corpus"},
    };
    for (const auto& [name, fn] : commands) {
        subs.emplace_back();
        SubState& state = subs.back();
        state.sub = app.add_subcommand(name, descriptions.at(name));
        state.command = fn;
        add_common_flags(state.sub, state.bindings, state.overrides, state.config_path,
                         state.config_opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    for (SubState& state : subs) {
        if (!state.sub->parsed()) continue;
        try {
            RunConfig cfg = RunConfig::defaults();
            if (state.config_opt->count() > 0) cfg.load_file(state.config_path);
            for (const FlagBinding& b : state.bindings) {
                if (b.option->count() > 0) cfg.set(b.key, b.value);
            }
            for (const std::string& kv : state.overrides) {
                const std::size_t eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw ValueError("--set expects key=value, got '" + kv + "'");
                }
                cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
            }
            return state.command(cfg);
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        } catch (const NumericalError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 3;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 1;
}

}  // namespace promptrec
