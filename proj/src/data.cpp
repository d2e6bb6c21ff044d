#include "promptrec/data.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

#include "promptrec/error.hpp"
#include "promptrec/io.hpp"
#include "promptrec/rng.hpp"

namespace promptrec {

const char* behavior_name(Behavior b) {
    return b == Behavior::purchase ? "purchase" : "click";
}

Behavior behavior_from_name(const std::string& name) {
    if (name == "click") return Behavior::click;
    if (name == "purchase") return Behavior::purchase;
    throw ValueError("unknown behavior '" + name + "'");
}

void Session::validate() const {
    if (items.size() != behaviors.size()) {
        throw ValueError("session '" + id + "': items and behaviors differ in length");
    }
    for (int item : items) {
        if (item <= 0) {
            throw ValueError("session '" + id + "': item index " + std::to_string(item) +
                             " is not positive");
        }
    }
}

const char* discount_mode_name(DiscountMode m) {
    return m == DiscountMode::absolute ? "absolute" : "relative";
}

DiscountMode discount_mode_from_name(const std::string& name) {
    if (name == "absolute") return DiscountMode::absolute;
    if (name == "relative") return DiscountMode::relative;
    throw ValueError("unknown discount mode '" + name + "'");
}

void RewardConfig::validate() const {
    if (!(r_purchase >= r_click && r_click >= 0.0)) {
        throw ValueError("reward config requires r_purchase >= r_click >= 0");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ValueError("reward discount lambda must lie in [0, 1], got " +
                         format_g17(lambda));
    }
}

// ---- raw event ingestion ----------------------------------------------

EventLayout EventLayout::challenge15() {
    EventLayout l;
    l.session_col = "session_id";
    l.time_col = "timestamp";
    l.item_col = "item_id";
    l.behavior_col = "behavior";
    l.behavior_tokens = {{"click", Behavior::click}, {"purchase", Behavior::purchase}};
    return l;
}

EventLayout EventLayout::retailrocket() {
    EventLayout l;
    l.session_col = "visitorid";
    l.time_col = "timestamp";
    l.item_col = "itemid";
    l.behavior_col = "event";
    // Views count as clicks, add-to-cart as purchases; other event types
    // (e.g. transaction) are skipped.
    l.behavior_tokens = {{"view", Behavior::click}, {"addtocart", Behavior::purchase}};
    return l;
}

ParsedEvents parse_events_csv(std::istream& in, const EventLayout& layout) {
    std::string header;
    if (!std::getline(in, header)) throw ValueError("event csv: empty input");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    const std::vector<std::string> cols = split(header, ',');
    auto col_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == name) return static_cast<long>(i);
        }
        throw ValueError("event csv: missing column '" + name + "'");
    };
    const long c_session = col_index(layout.session_col);
    const long c_time = col_index(layout.time_col);
    const long c_item = col_index(layout.item_col);
    const long c_behavior = col_index(layout.behavior_col);
    const std::size_t needed = static_cast<std::size_t>(
        std::max({c_session, c_time, c_item, c_behavior})) + 1;

    ParsedEvents out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, ',');
        if (f.size() < needed) {
            ++out.skipped;
            continue;
        }
        const std::string& token = f[static_cast<std::size_t>(c_behavior)];
        auto it = layout.behavior_tokens.find(token);
        if (it == layout.behavior_tokens.end()) {
            ++out.skipped;
            continue;
        }
        EventRecord rec;
        rec.session_id = f[static_cast<std::size_t>(c_session)];
        rec.timestamp = f[static_cast<std::size_t>(c_time)];
        rec.item = f[static_cast<std::size_t>(c_item)];
        rec.behavior = it->second;
        if (rec.session_id.empty() || rec.item.empty()) {
            ++out.skipped;
            continue;
        }
        char* end = nullptr;
        rec.time_value = std::strtod(rec.timestamp.c_str(), &end);
        rec.time_numeric = end != rec.timestamp.c_str() && *end == '\0';
        out.events.push_back(std::move(rec));
    }
    if (out.events.empty()) throw ValueError("event csv: no usable event rows");
    return out;
}

IngestResult ingest_events(const std::vector<EventRecord>& events, std::size_t skipped) {
    if (events.empty()) throw ValueError("ingest: no events");

    std::map<std::string, std::vector<EventRecord>> grouped;
    for (const EventRecord& e : events) grouped[e.session_id].push_back(e);

    auto time_less = [](const EventRecord& a, const EventRecord& b) {
        if (a.time_numeric && b.time_numeric) return a.time_value < b.time_value;
        return a.timestamp < b.timestamp;
    };

    IngestResult out;
    out.skipped = skipped;
    out.item_names.push_back("");  // index 0 = padding, never assigned
    std::map<std::string, int> item_index;
    for (auto& [sid, recs] : grouped) {
        std::stable_sort(recs.begin(), recs.end(), time_less);
        Session s;
        s.id = sid;
        for (const EventRecord& e : recs) {
            auto [it, inserted] = item_index.try_emplace(e.item,
                                                         static_cast<int>(out.item_names.size()));
            if (inserted) out.item_names.push_back(e.item);
            s.items.push_back(it->second);
            s.behaviors.push_back(e.behavior);
        }
        out.sessions.push_back(std::move(s));
    }
    return out;
}

std::vector<Session> filter_sessions(std::vector<Session> sessions, int min_len, int max_len,
                                     std::optional<int> min_item_count) {
    if (min_len < 1 || max_len < min_len) {
        throw ValueError("filter: invalid length bounds");
    }
    if (min_item_count && *min_item_count > 1) {
        std::map<int, long> counts;
        for (const Session& s : sessions) {
            for (int item : s.items) ++counts[item];
        }
        for (Session& s : sessions) {
            std::vector<int> items;
            std::vector<Behavior> behaviors;
            for (std::size_t i = 0; i < s.items.size(); ++i) {
                if (counts[s.items[i]] >= *min_item_count) {
                    items.push_back(s.items[i]);
                    behaviors.push_back(s.behaviors[i]);
                }
            }
            s.items = std::move(items);
            s.behaviors = std::move(behaviors);
        }
    }
    std::vector<Session> kept;
    for (Session& s : sessions) {
        const std::size_t len = s.length();
        if (len >= static_cast<std::size_t>(min_len) && len <= static_cast<std::size_t>(max_len)) {
            kept.push_back(std::move(s));
        }
    }
    if (kept.empty()) throw ValueError("filter: all sessions removed");
    return kept;
}

std::vector<std::string> compact_items(std::vector<Session>& sessions,
                                       const std::vector<std::string>& item_names) {
    std::set<int> used;
    for (const Session& s : sessions) used.insert(s.items.begin(), s.items.end());

    std::map<int, int> remap;
    std::vector<std::string> names;
    names.push_back("");
    for (int old : used) {
        remap[old] = static_cast<int>(names.size());
        names.push_back(static_cast<std::size_t>(old) < item_names.size() ? item_names[old]
                                                                          : std::to_string(old));
    }
    for (Session& s : sessions) {
        for (int& item : s.items) item = remap[item];
    }
    return names;
}

DatasetSplit split_dataset(const std::vector<Session>& sessions, std::uint64_t seed) {
    const std::size_t n = sessions.size();
    if (n < 10) {
        throw ValueError("split: need at least 10 sessions, got " + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n_val = n / 10;
    const std::size_t n_test = n / 10;
    const std::size_t n_train = n - n_val - n_test;

    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const Session& s = sessions[order[i]];
        if (i < n_train) {
            split.train.push_back(s);
        } else if (i < n_train + n_val) {
            split.validation.push_back(s);
        } else {
            split.test.push_back(s);
        }
    }
    return split;
}

std::vector<double> compute_cumulative_rewards(const Session& session, const RewardConfig& cfg) {
    cfg.validate();
    const std::size_t total = session.length();
    if (total < 2) {
        throw ValueError("session '" + session.id + "': need at least 2 interactions");
    }
    // r[t-1] is the immediate reward of action step t, i.e. the reward of the
    // behavior of the item interacted with at t+1.
    const std::size_t steps = total - 1;
    std::vector<double> reward(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        reward[i] = cfg.reward_for(session.behaviors[i + 1]);
    }

    std::vector<double> out(steps);
    if (cfg.discount_mode == DiscountMode::absolute) {
        // R_1 in one pass, then R_{t+1} = R_t - lambda^t r_t.
        double pw = cfg.lambda;
        double r1 = 0.0;
        for (std::size_t i = 0; i < steps; ++i) {
            r1 += pw * reward[i];
            pw *= cfg.lambda;
        }
        out[0] = r1;
        pw = cfg.lambda;
        for (std::size_t t = 1; t < steps; ++t) {
            out[t] = out[t - 1] - pw * reward[t - 1];
            pw *= cfg.lambda;
        }
    } else {
        // R_t = r_t + lambda * R_{t+1}, walked from the session end.
        out[steps - 1] = reward[steps - 1];
        for (std::size_t t = steps - 1; t-- > 0;) {
            out[t] = reward[t] + cfg.lambda * out[t + 1];
        }
    }
    return out;
}

std::vector<PromptSample> generate_prompts(const std::vector<Session>& sessions,
                                           const RewardConfig& cfg) {
    std::vector<PromptSample> samples;
    for (const Session& s : sessions) {
        const std::vector<double> rewards = compute_cumulative_rewards(s, cfg);
        const std::size_t steps = s.length() - 1;
        for (std::size_t t = 1; t <= steps; ++t) {
            PromptSample ps;
            ps.cumulative_reward = rewards[t - 1];
            ps.context.fill(0);
            const std::size_t take = std::min<std::size_t>(t, kContextLen);
            for (std::size_t i = 0; i < take; ++i) {
                ps.context[kContextLen - take + i] = s.items[t - take + i];
            }
            ps.step = static_cast<int>(t);
            ps.action = s.items[t];
            ps.immediate_reward = cfg.reward_for(s.behaviors[t]);
            samples.push_back(ps);
        }
    }
    return samples;
}

StepRewardTable StepRewardTable::from_samples(const std::vector<PromptSample>& samples) {
    if (samples.empty()) throw ValueError("step reward table: no samples");
    std::map<int, std::vector<double>> buckets;
    for (const PromptSample& s : samples) buckets[s.step].push_back(s.cumulative_reward);

    StepRewardTable table;
    for (auto& [step, values] : buckets) {
        // Sorted before summation so the mean is independent of sample order.
        std::sort(values.begin(), values.end());
        double acc = 0.0;
        for (double v : values) acc += v;
        table.means_[step] = acc / static_cast<double>(values.size());
    }
    return table;
}

StepRewardTable StepRewardTable::from_means(std::map<int, double> means) {
    if (means.empty()) throw ValueError("step reward table: no entries");
    StepRewardTable table;
    table.means_ = std::move(means);
    return table;
}

double StepRewardTable::lookup(int step) const {
    auto it = means_.upper_bound(step);
    if (it == means_.begin()) return it->second;  // below every populated step
    return std::prev(it)->second;
}

// ---- synthetic corpus ---------------------------------------------------

void SynthSpec::validate() const {
    if (vocab < 4) throw ValueError("synth: vocab must be >= 4");
    if (sessions < 1) throw ValueError("synth: sessions must be >= 1");
    if (high_bias < 0.0 || high_bias > 1.0) throw ValueError("synth: bias must lie in [0, 1]");
    if (min_len < kMinSessionLen || max_len < min_len || max_len > kMaxSessionLen) {
        throw ValueError("synth: session length bounds must satisfy 3 <= min <= max <= 50");
    }
    const int low = vocab / 2;
    const int high = vocab - low;
    if (fanout < 1 || fanout > std::min(low, high)) {
        throw ValueError("synth: fanout must lie in [1, tier size]");
    }
}

bool synth_is_high(const SynthSpec& spec, int item) { return item > spec.vocab / 2; }

int synth_successor(const SynthSpec& spec, int item, bool high, int variant) {
    const int half = spec.vocab / 2;
    const int size = high ? spec.vocab - half : half;
    const int base = (item * 7 + 3) % size;
    const int idx = (base + variant) % size;
    return (high ? half : 0) + idx + 1;
}

std::vector<Session> synth_corpus(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<Session> sessions;
    sessions.reserve(static_cast<std::size_t>(spec.sessions));
    for (int i = 0; i < spec.sessions; ++i) {
        const int len = spec.min_len +
                        static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(spec.max_len - spec.min_len + 1)));
        Session s;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "synth-%06d", i);
        s.id = buf;
        int item = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.vocab)));
        s.items.push_back(item);
        s.behaviors.push_back(synth_is_high(spec, item) ? Behavior::purchase : Behavior::click);
        for (int t = 1; t < len; ++t) {
            const bool high = rng.uniform() < spec.high_bias;
            const int variant = static_cast<int>(
                rng.uniform_int(static_cast<std::uint64_t>(spec.fanout)));
            item = synth_successor(spec, item, high, variant);
            s.items.push_back(item);
            s.behaviors.push_back(high ? Behavior::purchase : Behavior::click);
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

// ---- text artifacts ------------------------------------------------------

void write_sessions_tsv(const std::vector<Session>& sessions, const std::string& path) {
    std::ostringstream os;
    for (const Session& s : sessions) {
        s.validate();
        std::vector<std::string> items, behaviors;
        items.reserve(s.items.size());
        behaviors.reserve(s.behaviors.size());
        for (int item : s.items) items.push_back(std::to_string(item));
        for (Behavior b : s.behaviors) behaviors.push_back(behavior_name(b));
        os << s.id << '\t' << join(items, ',') << '\t' << join(behaviors, ',') << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<Session> read_sessions_tsv(const std::string& path) {
    std::vector<Session> sessions;
    for (const std::string& line : read_lines(path)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, '\t');
        if (f.size() != 3) throw ValueError("session file: malformed line '" + line + "'");
        Session s;
        s.id = f[0];
        for (const std::string& tok : split(f[1], ',')) {
            s.items.push_back(static_cast<int>(parse_int(tok, "session item")));
        }
        for (const std::string& tok : split(f[2], ',')) {
            s.behaviors.push_back(behavior_from_name(tok));
        }
        s.validate();
        sessions.push_back(std::move(s));
    }
    if (sessions.empty()) throw ValueError("session file '" + path + "' holds no sessions");
    return sessions;
}

void write_prompts_tsv(const std::vector<PromptSample>& samples, const std::string& path) {
    std::ostringstream os;
    for (const PromptSample& s : samples) {
        std::vector<std::string> ctx;
        ctx.reserve(kContextLen);
        for (int item : s.context) ctx.push_back(std::to_string(item));
        os << format_g17(s.cumulative_reward) << '\t' << join(ctx, ',') << '\t' << s.step << '\t'
           << s.action << '\t' << format_g17(s.immediate_reward) << '\n';
    }
    write_text_file(path, os.str());
}

std::vector<PromptSample> read_prompts_tsv(const std::string& path) {
    std::vector<PromptSample> samples;
    for (const std::string& line : read_lines(path)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split(line, '\t');
        if (f.size() != 5) throw ValueError("prompt file: malformed line '" + line + "'");
        PromptSample s;
        s.cumulative_reward = parse_double(f[0], "prompt reward");
        const std::vector<std::string> ctx = split(f[1], ',');
        if (ctx.size() != kContextLen) {
            throw ValueError("prompt file: context must have " + std::to_string(kContextLen) +
                             " entries");
        }
        for (std::size_t i = 0; i < ctx.size(); ++i) {
            s.context[i] = static_cast<int>(parse_int(ctx[i], "prompt context"));
        }
        s.step = static_cast<int>(parse_int(f[2], "prompt step"));
        s.action = static_cast<int>(parse_int(f[3], "prompt action"));
        s.immediate_reward = parse_double(f[4], "prompt immediate reward");
        if (s.action <= 0) throw ValueError("prompt file: action must be a positive item index");
        samples.push_back(s);
    }
    if (samples.empty()) throw ValueError("prompt file '" + path + "' holds no samples");
    return samples;
}

void write_item_map_tsv(const std::vector<std::string>& item_names, const std::string& path) {
    std::ostringstream os;
    for (std::size_t i = 1; i < item_names.size(); ++i) {
        os << item_names[i] << '\t' << i << '\n';
    }
    write_text_file(path, os.str());
}

void write_step_table_csv(const StepRewardTable& table, const std::string& path) {
    std::ostringstream os;
    os << "step,avg_cumulative_reward\n";
    for (const auto& [step, mean] : table.means()) {
        os << step << ',' << format_g17(mean) << '\n';
    }
    write_text_file(path, os.str());
}

StepRewardTable read_step_table_csv(const std::string& path) {
    std::map<int, double> means;
    const std::vector<std::string> lines = read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split(lines[i], ',');
        if (f.size() != 2) throw ValueError("step table: malformed line '" + lines[i] + "'");
        means[static_cast<int>(parse_int(f[0], "step"))] = parse_double(f[1], "step mean");
    }
    return StepRewardTable::from_means(std::move(means));
}

}  // namespace promptrec
