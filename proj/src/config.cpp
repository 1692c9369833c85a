#include "entroclip/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "entroclip/error.hpp"

namespace entroclip {

std::string to_string(MetricsFormat f) { return f == MetricsFormat::Jsonl ? "jsonl" : "csv"; }

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"task",
       {"preset", "target_seed", "n_contexts", "vocab", "horizon", "targets_per_context",
        "reward", "reward_noise", "name", "targets"}},
      {"strategy",
       {"kind", "eps_std", "upper_slope", "upper_intercept", "lower_slope", "lower_intercept",
        "t_max", "phase_ratio", "phase2_formula", "h_init", "h_min_factor"}},
      {"train",
       {"learning_rate", "epochs", "minibatches", "rounds", "group_size", "seed", "clip_mode",
        "intervention", "others", "band_p_high", "band_p_low", "band_ratio_lo", "band_ratio_hi",
        "advantage_delta", "optimizer", "init", "init_scale"}},
      {"eval", {"every", "k", "n_samples"}},
      {"output", {"dir", "format", "wallclock"}},
  };
  return s;
}

class Reader {
public:
  Reader(std::map<std::string, Section> sections, std::string origin)
      : sections_(std::move(sections)), origin_(std::move(origin)) {}

  Entry* find(const std::string& sec, const std::string& key) {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key, const Entry& e,
                         const std::string& why) const {
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": [" + sec + "] " + key + ": " +
                      why);
  }

  bool has(const std::string& sec, const std::string& key) {
    auto s = sections_.find(sec);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  void get(const std::string& sec, const std::string& key, double& out) {
    if (Entry* e = find(sec, key)) out = to_double(sec, key, *e);
  }

  void get(const std::string& sec, const std::string& key, std::optional<double>& out) {
    if (Entry* e = find(sec, key)) out = to_double(sec, key, *e);
  }

  template <class UInt>
    requires std::is_unsigned_v<UInt>
  void get(const std::string& sec, const std::string& key, UInt& out) {
    if (Entry* e = find(sec, key)) {
      UInt v{};
      const std::string& s = e->value;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        fail(sec, key, *e, "expected a non-negative integer, got '" + s + "'");
      out = v;
    }
  }

  void get(const std::string& sec, const std::string& key, std::string& out) {
    if (Entry* e = find(sec, key)) out = e->value;
  }

  void get(const std::string& sec, const std::string& key, bool& out) {
    if (Entry* e = find(sec, key)) {
      if (e->value == "true") out = true;
      else if (e->value == "false") out = false;
      else fail(sec, key, *e, "expected true or false");
    }
  }

  template <class Enum, class Parser>
  void get_enum(const std::string& sec, const std::string& key, Enum& out, Parser parse) {
    if (Entry* e = find(sec, key)) {
      auto v = parse(e->value);
      if (!v) fail(sec, key, *e, "unrecognized value '" + e->value + "'");
      out = *v;
    }
  }

  void reject_unused() const {
    for (const auto& [sec, entries] : sections_)
      for (const auto& [key, e] : entries)
        if (!e.used) fail(sec, key, e, "key not applicable here");
  }

private:
  double to_double(const std::string& sec, const std::string& key, const Entry& e) const {
    double v = 0.0;
    const std::string& s = e.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      fail(sec, key, e, "expected a number, got '" + s + "'");
    return v;
  }

  std::map<std::string, Section> sections_;
  std::string origin_;
};

std::map<std::string, Section> tokenize(const std::string& text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!schema().count(current)) fail("unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (current.empty()) fail("key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    if (!schema().at(current).count(key)) fail("unknown key '" + key + "' in [" + current + "]");
    if (sections[current].count(key)) fail("duplicate key '" + key + "'");
    sections[current][key] = Entry{trim(line.substr(eq + 1)), line_no, false};
  }
  return sections;
}

std::vector<std::vector<TokenSeq>> parse_targets(const std::string& s) {
  std::vector<std::vector<TokenSeq>> out;
  for (const std::string& ctx : split(s, ';')) {
    std::vector<TokenSeq> alts;
    for (const std::string& alt : split(ctx, '|')) {
      TokenSeq seq;
      std::istringstream is(alt);
      std::string tok;
      while (is >> tok) {
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
          throw InvalidInput("bad token '" + tok + "'");
        seq.push_back(v);
      }
      alts.push_back(std::move(seq));
    }
    out.push_back(std::move(alts));
  }
  return out;
}

std::string render_targets(const std::vector<std::vector<TokenSeq>>& targets) {
  std::string out;
  for (std::size_t c = 0; c < targets.size(); ++c) {
    if (c) out += " ; ";
    for (std::size_t a = 0; a < targets[c].size(); ++a) {
      if (a) out += " | ";
      for (std::size_t i = 0; i < targets[c][a].size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(targets[c][a][i]);
      }
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

TaskSpec read_task(Reader& r) {
  std::string preset = "default";
  r.get("task", "preset", preset);
  std::uint64_t target_seed = 0;
  r.get("task", "target_seed", target_seed);

  TaskSpec task;
  std::size_t per_context = 1;
  if (preset == "custom") {
    task.name = "custom";
  } else {
    try {
      task = make_task_preset(preset, target_seed);
    } catch (const InvalidInput& e) {
      Entry* e2 = r.find("task", "preset");
      if (e2) r.fail("task", "preset", *e2, e.what());
      throw ConfigError(e.what());
    }
    per_context = task.targets.empty() ? 1 : task.targets.front().size();
  }
  const bool reshaped = r.has("task", "n_contexts") || r.has("task", "vocab") ||
                        r.has("task", "horizon") || r.has("task", "targets_per_context");
  r.get("task", "n_contexts", task.n_contexts);
  r.get("task", "vocab", task.vocab);
  r.get("task", "horizon", task.horizon);
  r.get("task", "targets_per_context", per_context);
  r.get_enum("task", "reward", task.reward_mode, parse_reward_mode);
  r.get("task", "reward_noise", task.reward_noise);
  r.get("task", "name", task.name);

  if (Entry* e = r.find("task", "targets")) {
    try {
      task.targets = parse_targets(e->value);
    } catch (const InvalidInput& ex) {
      r.fail("task", "targets", *e, ex.what());
    }
  } else if (preset == "custom") {
    if (task.n_contexts == 0 || task.vocab < 2 || task.horizon == 0)
      throw ConfigError("[task] custom task needs n_contexts, vocab, horizon (and targets)");
    task.targets =
        random_targets(task.n_contexts, task.vocab, task.horizon, per_context, target_seed);
  } else if (reshaped) {
    task.targets =
        random_targets(task.n_contexts, task.vocab, task.horizon, per_context, target_seed);
  }
  try {
    task.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("[task] ") + e.what());
  }
  return task;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  Reader r(tokenize(text, origin), origin);
  ExperimentConfig cfg;
  TrainConfig& t = cfg.train;

  t.task = read_task(r);

  StrategyConfig& s = t.strategy;
  r.get_enum("strategy", "kind", s.kind, parse_strategy);
  r.get("strategy", "eps_std", s.eps_std);
  double us = s.upper_fn.slope(), ui = s.upper_fn.intercept();
  double ls = s.lower_fn.slope(), li = s.lower_fn.intercept();
  r.get("strategy", "upper_slope", us);
  r.get("strategy", "upper_intercept", ui);
  r.get("strategy", "lower_slope", ls);
  r.get("strategy", "lower_intercept", li);
  try {
    s.upper_fn = ThresholdFn::linear(us, ui);
    s.lower_fn = ThresholdFn::linear(ls, li);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("[strategy] ") + e.what());
  }
  r.get("strategy", "phase_ratio", s.phase_ratio);
  r.get_enum("strategy", "phase2_formula", s.phase2, [](const std::string& v) {
    std::optional<Phase2Formula> f;
    if (v == "ramp") f = Phase2Formula::Ramp;
    if (v == "printed") f = Phase2Formula::Printed;
    return f;
  });
  r.get("strategy", "h_init", s.h_init);
  r.get("strategy", "h_min_factor", s.h_min_factor);

  r.get("train", "learning_rate", t.learning_rate);
  r.get("train", "epochs", t.epochs);
  r.get("train", "minibatches", t.minibatches);
  r.get("train", "rounds", t.rounds);
  r.get("train", "group_size", t.group_size);
  r.get("train", "seed", t.seed);
  s.t_max = std::max<std::size_t>(t.rounds, 2);
  r.get("strategy", "t_max", s.t_max);
  r.get_enum("train", "clip_mode", t.clip_mode, parse_clip_mode);
  if (Entry* e = r.find("train", "intervention")) {
    std::vector<RegionLabel> set;
    for (const std::string& name : split(e->value, ',')) {
      auto l = parse_region(name);
      if (!l && !name.empty()) r.fail("train", "intervention", *e, "unknown region '" + name + "'");
      if (l) set.push_back(*l);
    }
    if (set.empty()) r.fail("train", "intervention", *e, "intervention set must not be empty");
    t.intervention = std::move(set);
  }
  r.get_enum("train", "others", t.others, parse_others);
  r.get("train", "band_p_high", t.bands.p_high);
  r.get("train", "band_p_low", t.bands.p_low);
  r.get("train", "band_ratio_lo", t.bands.ratio_lo);
  r.get("train", "band_ratio_hi", t.bands.ratio_hi);
  r.get("train", "advantage_delta", t.advantage_delta);
  r.get_enum("train", "optimizer", t.optimizer, parse_optimizer);
  r.get_enum("train", "init", t.init, parse_init);
  r.get("train", "init_scale", t.init_scale);

  r.get("eval", "every", t.eval.every);
  r.get("eval", "k", t.eval.k);
  r.get("eval", "n_samples", t.eval.n_samples);

  r.get("output", "dir", cfg.out_dir);
  r.get_enum("output", "format", cfg.format, [](const std::string& v) {
    std::optional<MetricsFormat> f;
    if (v == "jsonl") f = MetricsFormat::Jsonl;
    if (v == "csv") f = MetricsFormat::Csv;
    return f;
  });
  r.get("output", "wallclock", t.record_wallclock);

  r.reject_unused();
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string render_config(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.train;
  const StrategyConfig& s = t.strategy;
  std::ostringstream os;
  os << "[task]\n"
     << "preset = custom\n"
     << "name = " << t.task.name << "\n"
     << "n_contexts = " << t.task.n_contexts << "\n"
     << "vocab = " << t.task.vocab << "\n"
     << "horizon = " << t.task.horizon << "\n"
     << "reward = " << to_string(t.task.reward_mode) << "\n"
     << "reward_noise = " << fmt(t.task.reward_noise) << "\n"
     << "targets = " << render_targets(t.task.targets) << "\n\n";
  os << "[strategy]\n"
     << "kind = " << to_string(s.kind) << "\n"
     << "eps_std = " << fmt(s.eps_std) << "\n"
     << "upper_slope = " << fmt(s.upper_fn.slope()) << "\n"
     << "upper_intercept = " << fmt(s.upper_fn.intercept()) << "\n"
     << "lower_slope = " << fmt(s.lower_fn.slope()) << "\n"
     << "lower_intercept = " << fmt(s.lower_fn.intercept()) << "\n"
     << "t_max = " << s.t_max << "\n"
     << "phase_ratio = " << fmt(s.phase_ratio) << "\n"
     << "phase2_formula = " << (s.phase2 == Phase2Formula::Ramp ? "ramp" : "printed") << "\n";
  if (s.h_init) os << "h_init = " << fmt(*s.h_init) << "\n";
  os << "h_min_factor = " << fmt(s.h_min_factor) << "\n\n";
  os << "[train]\n"
     << "learning_rate = " << fmt(t.learning_rate) << "\n"
     << "epochs = " << t.epochs << "\n"
     << "minibatches = " << t.minibatches << "\n"
     << "rounds = " << t.rounds << "\n"
     << "group_size = " << t.group_size << "\n"
     << "seed = " << t.seed << "\n"
     << "clip_mode = " << to_string(t.clip_mode) << "\n";
  if (t.intervention) {
    os << "intervention = ";
    for (std::size_t i = 0; i < t.intervention->size(); ++i)
      os << (i ? "," : "") << to_string((*t.intervention)[i]);
    os << "\n";
  }
  os << "others = " << to_string(t.others) << "\n"
     << "band_p_high = " << fmt(t.bands.p_high) << "\n"
     << "band_p_low = " << fmt(t.bands.p_low) << "\n"
     << "band_ratio_lo = " << fmt(t.bands.ratio_lo) << "\n"
     << "band_ratio_hi = " << fmt(t.bands.ratio_hi) << "\n"
     << "advantage_delta = " << fmt(t.advantage_delta) << "\n"
     << "optimizer = " << to_string(t.optimizer) << "\n"
     << "init = " << to_string(t.init) << "\n"
     << "init_scale = " << fmt(t.init_scale) << "\n\n";
  os << "[eval]\n"
     << "every = " << t.eval.every << "\n"
     << "k = " << t.eval.k << "\n"
     << "n_samples = " << t.eval.n_samples << "\n\n";
  os << "[output]\n"
     << "dir = " << cfg.out_dir << "\n"
     << "format = " << to_string(cfg.format) << "\n"
     << "wallclock = " << (t.record_wallclock ? "true" : "false") << "\n";
  return os.str();
}

} // namespace entroclip
