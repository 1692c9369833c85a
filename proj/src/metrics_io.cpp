#include "entroclip/metrics_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "entroclip/error.hpp"

namespace entroclip {

using nlohmann::ordered_json;

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "step",       "entropy",     "reward_mean", "grad_norm",  "clip_frac",
      "eps_up_mean", "eps_lo_mean", "regions_e1", "regions_e2", "regions_e3",
      "regions_e4", "regions_neutral", "od_state", "pass1",     "passk",
      "elapsed_s"};
  return cols;
}

namespace {

ordered_json nullable(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

} // namespace

std::string row_to_json_line(const MetricsRow& row) {
  ordered_json j;
  j["step"] = row.step;
  j["entropy"] = row.entropy;
  j["reward_mean"] = row.reward_mean;
  j["grad_norm"] = row.grad_norm;
  j["clip_frac"] = row.clip_frac;
  j["eps_up_mean"] = row.eps_up_mean;
  j["eps_lo_mean"] = row.eps_lo_mean;
  ordered_json regions;
  for (RegionLabel l : kAllRegions) regions[std::string(to_string(l))] = row.regions[l];
  j["regions"] = regions;
  j["od_state"] = row.od_state;
  j["pass1"] = nullable(row.pass1);
  j["passk"] = nullable(row.passk);
  j["elapsed_s"] = nullable(row.elapsed_s);
  return j.dump();
}

std::map<std::string, std::string> run_header(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.train;
  return {{"seed", std::to_string(t.seed)},
          {"strategy", to_string(t.strategy.kind)},
          {"task", t.task.name},
          {"rounds", std::to_string(t.rounds)},
          {"clip_mode", to_string(t.clip_mode)}};
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, MetricsFormat format,
                             const std::map<std::string, std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), format_(format) {
  if (!out_) throw RuntimeAbort("cannot open metrics file " + path.string());
  if (format_ == MetricsFormat::Jsonl) {
    ordered_json h;
    for (const auto& [k, v] : header) h[k] = v;
    h["columns"] = metrics_columns();
    out_ << ordered_json{{"header", h}}.dump() << '\n';
  } else {
    for (const auto& [k, v] : header) out_ << "# " << k << '=' << v << '\n';
    const auto& cols = metrics_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
  }
}

void MetricsWriter::write(const MetricsRow& row) {
  if (format_ == MetricsFormat::Jsonl) {
    out_ << row_to_json_line(row) << '\n';
  } else {
    out_ << row.step << ',' << num(row.entropy) << ',' << num(row.reward_mean) << ','
         << num(row.grad_norm) << ',' << num(row.clip_frac) << ',' << num(row.eps_up_mean) << ','
         << num(row.eps_lo_mean);
    for (RegionLabel l : kAllRegions) out_ << ',' << row.regions[l];
    out_ << ',' << row.od_state << ',' << opt_num(row.pass1) << ',' << opt_num(row.passk) << ','
         << opt_num(row.elapsed_s) << '\n';
  }
  out_.flush();
  if (!out_) throw RuntimeAbort("failed writing metrics row");
}

namespace {

std::optional<double> opt_field(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

MetricsRow row_from_json(const ordered_json& j) {
  MetricsRow r;
  r.step = j.at("step").get<std::size_t>();
  r.entropy = j.at("entropy").get<double>();
  r.reward_mean = j.at("reward_mean").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.clip_frac = j.at("clip_frac").get<double>();
  r.eps_up_mean = j.at("eps_up_mean").get<double>();
  r.eps_lo_mean = j.at("eps_lo_mean").get<double>();
  const auto& regions = j.at("regions");
  for (RegionLabel l : kAllRegions)
    r.regions[l] = regions.at(std::string(to_string(l))).get<std::size_t>();
  r.tokens = r.regions.total();
  r.od_state = j.at("od_state").get<int>();
  r.pass1 = opt_field(j, "pass1");
  r.passk = opt_field(j, "passk");
  r.elapsed_s = opt_field(j, "elapsed_s");
  return r;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

MetricsRow row_from_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (cells.size() != metrics_columns().size())
    throw std::invalid_argument("expected " + std::to_string(metrics_columns().size()) +
                                " cells, found " + std::to_string(cells.size()));
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
  };
  MetricsRow r;
  r.step = parse_count(cells[0]);
  r.entropy = parse_double(cells[1]);
  r.reward_mean = parse_double(cells[2]);
  r.grad_norm = parse_double(cells[3]);
  r.clip_frac = parse_double(cells[4]);
  r.eps_up_mean = parse_double(cells[5]);
  r.eps_lo_mean = parse_double(cells[6]);
  for (std::size_t i = 0; i < kAllRegions.size(); ++i)
    r.regions[kAllRegions[i]] = parse_count(cells[7 + i]);
  r.tokens = r.regions.total();
  r.od_state = static_cast<int>(parse_count(cells[12]));
  r.pass1 = opt(cells[13]);
  r.passk = opt(cells[14]);
  r.elapsed_s = opt(cells[15]);
  return r;
}

} // namespace

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricsParseError(0, "cannot read " + path.string());
  MetricsFile file;
  std::string line;
  std::size_t line_no = 0;
  enum class Fmt { Unknown, Jsonl, Csv } fmt = Fmt::Unknown;
  bool csv_columns_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (fmt == Fmt::Unknown) fmt = (line.front() == '{') ? Fmt::Jsonl : Fmt::Csv;
    try {
      if (fmt == Fmt::Jsonl) {
        const ordered_json j = ordered_json::parse(line);
        if (j.contains("header")) {
          for (const auto& [k, v] : j.at("header").items())
            if (v.is_string()) file.header[k] = v.get<std::string>();
          continue;
        }
        file.rows.push_back(row_from_json(j));
      } else {
        if (line.front() == '#') {
          const auto eq = line.find('=');
          if (eq != std::string::npos)
            file.header[line.substr(2, eq - 2)] = line.substr(eq + 1);
          continue;
        }
        if (!csv_columns_seen) {
          csv_columns_seen = true;
          continue;
        }
        file.rows.push_back(row_from_csv(line));
      }
    } catch (const std::exception& e) {
      throw MetricsParseError(line_no, std::string("malformed metrics row: ") + e.what());
    }
  }
  return file;
}

RunSummary summarize(std::span<const MetricsRow> rows) {
  RunSummary s;
  s.rows = rows.size();
  if (rows.empty()) return s;
  s.entropy_min = s.entropy_max = rows.front().entropy;
  double clip = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MetricsRow& r = rows[i];
    s.entropy_min = std::min(s.entropy_min, r.entropy);
    if (r.entropy > s.entropy_max) {
      s.entropy_max = r.entropy;
      s.entropy_argmax = i;
    }
    clip += r.clip_frac;
    if (i > 0 && r.od_state != rows[i - 1].od_state) ++s.od_switches;
    if (r.pass1) s.pass1_final = r.pass1;
    if (r.passk) s.passk_final = r.passk;
  }
  s.entropy_final = rows.back().entropy;
  s.reward_final = rows.back().reward_mean;
  s.clip_frac_mean = clip / static_cast<double>(rows.size());
  return s;
}

void write_plot_columns(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << "# step entropy reward_mean grad_norm clip_frac eps_up_mean eps_lo_mean od_state\n";
  for (const MetricsRow& r : rows)
    out << r.step << ' ' << num(r.entropy) << ' ' << num(r.reward_mean) << ' '
        << num(r.grad_norm) << ' ' << num(r.clip_frac) << ' ' << num(r.eps_up_mean) << ' '
        << num(r.eps_lo_mean) << ' ' << r.od_state << '\n';
}

} // namespace entroclip
