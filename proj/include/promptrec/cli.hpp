#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "promptrec/data.hpp"
#include "promptrec/eval.hpp"
#include "promptrec/model.hpp"
#include "promptrec/train.hpp"

namespace promptrec {

// Flat dotted-key configuration with precedence CLI > file > defaults.
// Every valid key is present in the defaults; setting an unknown key is an
// error so typos fail fast.
class RunConfig {
public:
    static RunConfig defaults();

    // `key = value` lines; '#' starts a comment.
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed")); }
    std::string work_dir() const { return get("paths.work_dir"); }
    std::string checkpoint_path() const;

    RewardConfig reward() const;
    TrainConfig train() const;
    ModelConfig model(std::size_t vocab) const;
    InferenceConfig infer() const;
    SynthSpec synth() const;

    // Semantic settings only: everything except output/input locations
    // (paths.*, synth.output), which affect where artifacts land but never
    // their bytes.
    std::map<std::string, std::string> semantic_values() const;
    // Sorted `key = value` lines over the semantic settings; hashed into
    // every manifest.
    std::string canonical() const;
    std::uint64_t hash() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Commands return process exit codes: 0 ok, 1 validation error, 2 I/O error,
// 3 numerical failure.
int cmd_prepare(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);

int run_cli(int argc, const char* const* argv);

}  // namespace promptrec
