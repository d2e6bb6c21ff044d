#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace promptrec {

inline constexpr int kContextLen = 10;
inline constexpr int kMaxSessionLen = 50;
inline constexpr int kMinSessionLen = 3;

enum class Behavior { click, purchase };

const char* behavior_name(Behavior b);
Behavior behavior_from_name(const std::string& name);

// One user's ordered interaction sequence. Item indices are 1-based;
// 0 is reserved for context padding and never appears in a session.
struct Session {
    std::string id;
    std::vector<int> items;
    std::vector<Behavior> behaviors;

    std::size_t length() const { return items.size(); }
    void validate() const;
};

enum class DiscountMode { absolute, relative };

const char* discount_mode_name(DiscountMode m);
DiscountMode discount_mode_from_name(const std::string& name);

struct RewardConfig {
    double r_click = 0.2;
    double r_purchase = 1.0;
    double lambda = 0.5;
    DiscountMode discount_mode = DiscountMode::absolute;

    double reward_for(Behavior b) const { return b == Behavior::purchase ? r_purchase : r_click; }
    void validate() const;
};

// Training tuple {cumulative reward, context, step} -> action, with the
// immediate reward of the action kept for loss weighting.
struct PromptSample {
    double cumulative_reward = 0.0;
    std::array<int, kContextLen> context{};  // left-padded with 0
    int step = 1;                            // untruncated position, >= 1
    int action = 0;                          // item index, never 0
    double immediate_reward = 0.0;
};

struct DatasetSplit {
    std::vector<Session> train;
    std::vector<Session> validation;
    std::vector<Session> test;
};

// ---- raw event ingestion ----------------------------------------------

struct EventRecord {
    std::string session_id;
    std::string timestamp;  // compared numerically when both sides parse
    double time_value = 0.0;
    bool time_numeric = false;
    std::string item;
    Behavior behavior = Behavior::click;
};

// Column names and behavior-token mapping for raw event CSVs.
struct EventLayout {
    std::string session_col;
    std::string time_col;
    std::string item_col;
    std::string behavior_col;
    std::map<std::string, Behavior> behavior_tokens;

    static EventLayout challenge15();
    static EventLayout retailrocket();
};

struct ParsedEvents {
    std::vector<EventRecord> events;
    std::size_t skipped = 0;  // unparseable or unknown-behavior rows
};

ParsedEvents parse_events_csv(std::istream& in, const EventLayout& layout);

struct IngestResult {
    std::vector<Session> sessions;       // sorted by session_id
    std::vector<std::string> item_names; // 1-based; item_names[i] = original id
    std::size_t skipped = 0;
};

// Groups events by session, sorts each session by timestamp, and re-indexes
// items densely from 1 in first-appearance order.
IngestResult ingest_events(const std::vector<EventRecord>& events, std::size_t skipped = 0);

// Drops items seen fewer than min_item_count times (when set), then keeps
// sessions whose length lies in [min_len, max_len].
std::vector<Session> filter_sessions(std::vector<Session> sessions, int min_len = kMinSessionLen,
                                     int max_len = kMaxSessionLen,
                                     std::optional<int> min_item_count = std::nullopt);

// Re-densifies item indices after filtering; rewrites sessions in place and
// returns the compacted name table.
std::vector<std::string> compact_items(std::vector<Session>& sessions,
                                       const std::vector<std::string>& item_names);

// Deterministic shuffled 8:1:1 partition.
DatasetSplit split_dataset(const std::vector<Session>& sessions, std::uint64_t seed);

// Cumulative reward R_t for action steps t = 1..T-1, computed with the O(T)
// recursion. Absolute mode discounts by session position (lambda^t'),
// relative mode by distance from t (lambda^(t'-t)).
std::vector<double> compute_cumulative_rewards(const Session& session, const RewardConfig& cfg);

// A length-T session yields exactly T-1 samples; total cost is linear in the
// summed session lengths.
std::vector<PromptSample> generate_prompts(const std::vector<Session>& sessions,
                                           const RewardConfig& cfg);

// Per-step mean of the training cumulative rewards. Lookups for steps absent
// from training fall back to the nearest populated smaller step (or the
// smallest populated step when none is smaller).
class StepRewardTable {
public:
    static StepRewardTable from_samples(const std::vector<PromptSample>& samples);
    static StepRewardTable from_means(std::map<int, double> means);

    double lookup(int step) const;
    const std::map<int, double>& means() const { return means_; }

private:
    std::map<int, double> means_;
};

// ---- synthetic corpus ---------------------------------------------------

// Sessions where the next item is a deterministic function of (current item,
// reward tier, variant); the logging policy picks the high-reward tier with
// probability `high_bias`. High-tier items are behavior `purchase`, low-tier
// items `click`.
struct SynthSpec {
    int vocab = 50;      // >= 4; low tier 1..vocab/2, high tier vocab/2+1..vocab
    int sessions = 1000; // >= 1
    double high_bias = 0.5;
    int fanout = 1;      // successors per (item, tier)
    int min_len = 5;
    int max_len = 12;
    std::uint64_t seed = 1;

    void validate() const;
};

bool synth_is_high(const SynthSpec& spec, int item);
int synth_successor(const SynthSpec& spec, int item, bool high, int variant);
std::vector<Session> synth_corpus(const SynthSpec& spec);

// ---- text artifacts ------------------------------------------------------

// Canonical session file: one record per line,
// session_id<TAB>item,item,...<TAB>behavior,behavior,...
void write_sessions_tsv(const std::vector<Session>& sessions, const std::string& path);
std::vector<Session> read_sessions_tsv(const std::string& path);

// Prompt set: R_t<TAB>context(comma,10)<TAB>step<TAB>action<TAB>r_t
void write_prompts_tsv(const std::vector<PromptSample>& samples, const std::string& path);
std::vector<PromptSample> read_prompts_tsv(const std::string& path);

void write_item_map_tsv(const std::vector<std::string>& item_names, const std::string& path);

void write_step_table_csv(const StepRewardTable& table, const std::string& path);
StepRewardTable read_step_table_csv(const std::string& path);

}  // namespace promptrec
