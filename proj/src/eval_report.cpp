#include "curate/eval_report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "curate/csv.hpp"
#include "curate/errors.hpp"

namespace curate::eval {
namespace {

double parse_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DataError(what + ": not a number '" + std::string(s) + "'");
  return v;
}

constexpr std::array<std::string_view, kSkillCount> kNames{
    "Sentiment Analysis",      "Fairness & Truthfulness", "Reading Comprehension",
    "World Knowledge",         "Commonsense Reasoning",   "Norwegian Language",
    "Summarization",           "Translation",             "Variation & Readability",
};
constexpr std::array<std::string_view, kSkillCount> kAbbreviations{
    "SA", "FT", "RC", "WK", "CR", "NL", "S", "T", "VR",
};

std::size_t index_of(Skill s) { return static_cast<std::size_t>(s); }

std::vector<std::string> models_in_order(std::span<const ScoreRecord> records) {
  std::vector<std::string> models;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.model).second) models.push_back(r.model);
  return models;
}

}  // namespace

Transform Transform::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  std::string a;
  std::string b;
  std::string extra;
  in >> kind >> a >> b;
  if (kind.empty() || a.empty() || b.empty() || (in >> extra))
    throw UsageError("transform must be 'linear <scale> <offset>' or 'minmax <lo> <hi>', got '" +
                     std::string(text) + "'");
  Transform t;
  if (kind == "linear") t.kind = Kind::linear;
  else if (kind == "minmax") t.kind = Kind::minmax;
  else throw UsageError("unknown transform '" + kind + "'");
  try {
    t.a = parse_number(a, "transform");
    t.b = parse_number(b, "transform");
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (t.kind == Kind::minmax && !(t.b > t.a)) throw UsageError("minmax transform needs lo < hi");
  return t;
}

double Transform::apply(double value) const {
  if (kind == Kind::linear) return a * value + b;
  return 100.0 * (value - a) / (b - a);
}

MetricTable MetricTable::from_config(const Config& config) {
  MetricTable table;
  for (const auto& section : config.sections()) {
    if (section.rfind("metric.", 0) != 0) continue;
    const std::string name = section.substr(7);
    MetricSpec spec;
    for (const auto& [key, value] : config.entries(section)) {
      if (key == "scale") {
        if (value == "unit_interval") spec.scale = Scale::unit_interval;
        else if (value == "percent") spec.scale = Scale::percent;
        else if (value == "unbounded") spec.scale = Scale::unbounded;
        else throw UsageError("metric " + name + ": unknown scale '" + value + "'");
      } else if (key == "orientation") {
        if (value == "higher_better") spec.orientation = Orientation::higher_better;
        else if (value == "lower_better") spec.orientation = Orientation::lower_better;
        else throw UsageError("metric " + name + ": unknown orientation '" + value + "'");
      } else if (key == "transform") {
        spec.transform = Transform::parse(value);
      } else {
        throw UsageError("metric " + name + ": unknown key '" + key + "'");
      }
    }
    table.set(name, spec);
  }
  return table;
}

const MetricSpec& MetricTable::at(const std::string& metric) const {
  auto it = specs_.find(metric);
  if (it == specs_.end()) throw DataError("undeclared metric '" + metric + "'");
  return it->second;
}

std::vector<ScoreRecord> read_scores(std::istream& in, const MetricTable& metrics) {
  const CsvTable table = read_csv(in);
  const std::size_t c_model = table.column("model");
  const std::size_t c_task = table.column("task");
  const std::size_t c_prompt = table.column("prompt_id");
  const std::size_t c_shot = table.column("k_shot");
  const std::size_t c_metric = table.column("metric");
  const std::size_t c_value = table.column("value");

  std::vector<ScoreRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.row_lines[i];
    ScoreRecord r;
    r.model = row[c_model];
    r.task = row[c_task];
    r.prompt_id = row[c_prompt];
    r.metric = row[c_metric];
    if (r.model.empty() || r.task.empty()) throw ParseError("empty model or task", line);
    double shot = 0.0;
    double value = 0.0;
    try {
      shot = parse_number(row[c_shot], "k_shot");
      value = parse_number(row[c_value], "value");
    } catch (const DataError& e) {
      throw ParseError(e.what(), line);
    }
    r.k_shot = static_cast<int>(shot);
    if (static_cast<double>(r.k_shot) != shot ||
        std::find(kShots.begin(), kShots.end(), r.k_shot) == kShots.end())
      throw ParseError("k_shot must be one of 0, 1, 4, 16", line);
    if (!std::isfinite(value)) throw ParseError("value must be finite", line);
    r.value = value;
    if (!metrics.contains(r.metric)) throw ParseError("undeclared metric '" + r.metric + "'", line);
    const MetricSpec& spec = metrics.at(r.metric);
    r.scale = spec.scale;
    r.orientation = spec.orientation;
    records.push_back(std::move(r));
  }
  return records;
}

double normalize(const ScoreRecord& record, const std::optional<Transform>& transform) {
  double v = record.value;
  switch (record.scale) {
    case Scale::unit_interval: v *= 100.0; break;
    case Scale::percent: break;
    case Scale::unbounded:
      if (!transform)
        throw DataError("metric '" + record.metric + "' is unbounded and has no transform");
      v = transform->apply(v);
      break;
  }
  if (record.orientation == Orientation::lower_better) v = 100.0 - v;
  return std::clamp(v, 0.0, 100.0);
}

double normalize(const ScoreRecord& record, const MetricTable& metrics) {
  const auto* spec = metrics.contains(record.metric) ? &metrics.at(record.metric) : nullptr;
  return normalize(record, spec ? spec->transform : std::nullopt);
}

std::string_view skill_name(Skill s) { return kNames[index_of(s)]; }
std::string_view skill_abbreviation(Skill s) { return kAbbreviations[index_of(s)]; }

std::optional<Skill> parse_skill(std::string_view text) {
  for (Skill s : kSkills)
    if (text == skill_name(s) || text == skill_abbreviation(s)) return s;
  return std::nullopt;
}

SkillMap SkillMap::from_config(const Config& config) {
  SkillMap map;
  for (const auto& [task, value] : config.entries("skills")) {
    auto skill = parse_skill(value);
    if (!skill) throw UsageError("task " + task + ": unknown skill '" + value + "'");
    map.assign(task, *skill);
  }
  for (const auto& [task, metric] : config.entries("primary")) map.set_primary(task, metric);
  return map;
}

void SkillMap::assign(const std::string& task, Skill skill) {
  auto [it, inserted] = tasks_.emplace(task, skill);
  if (!inserted && it->second != skill)
    throw UsageError("task " + task + " is mapped to two skills");
}

void SkillMap::set_primary(const std::string& task, std::string metric) {
  primary_[task] = std::move(metric);
}

Skill SkillMap::skill_of(const std::string& task) const {
  auto it = tasks_.find(task);
  if (it == tasks_.end()) throw DataError("task '" + task + "' has no skill");
  return it->second;
}

const std::string* SkillMap::primary_metric(const std::string& task) const {
  auto it = primary_.find(task);
  return it == primary_.end() ? nullptr : &it->second;
}

void SkillMap::check(std::span<const ScoreRecord> records) const {
  std::set<std::string> missing;
  for (const auto& r : records)
    if (!contains(r.task)) missing.insert(r.task);
  if (missing.empty()) return;
  std::string list;
  for (const auto& t : missing) list += (list.empty() ? "" : ", ") + t;
  throw DataError("unmapped tasks: " + list);
}

double best_score(std::span<const ScoreRecord> records, const MetricTable& metrics,
                  const std::string* primary_metric) {
  std::optional<double> best;
  for (const auto& r : records) {
    if (primary_metric && r.metric != *primary_metric) continue;
    const double v = normalize(r, metrics);
    if (!best || v > *best) best = v;
  }
  if (!best) throw DataError("missing task");
  return *best;
}

namespace {

// task -> best score for one model, tasks in sorted order.
std::map<std::string, double> best_by_task(const std::string& model,
                                           std::span<const ScoreRecord> records,
                                           const SkillMap& skills, const MetricTable& metrics) {
  std::map<std::string, std::vector<ScoreRecord>> by_task;
  for (const auto& r : records)
    if (r.model == model) by_task[r.task].push_back(r);
  std::map<std::string, double> best;
  for (const auto& [task, recs] : by_task) {
    try {
      best[task] = best_score(recs, metrics, skills.primary_metric(task));
    } catch (const DataError&) {
      throw DataError("missing task " + task + " for model " + model);
    }
  }
  return best;
}

}  // namespace

ModelReport skill_scores(const std::string& model, std::span<const ScoreRecord> records,
                         const SkillMap& skills, const MetricTable& metrics) {
  skills.check(records);
  const auto best = best_by_task(model, records, skills, metrics);
  if (best.empty()) throw DataError("no scores for model " + model);
  ModelReport report;
  report.model = model;
  std::array<double, kSkillCount> sums{};
  for (const auto& [task, score] : best) {
    const std::size_t s = index_of(skills.skill_of(task));
    sums[s] += score;
    ++report.task_counts[s];
  }
  std::string empty;
  for (Skill s : kSkills) {
    const std::size_t i = index_of(s);
    if (report.task_counts[i] == 0) {
      empty += (empty.empty() ? "" : ", ") + std::string(skill_name(s));
      continue;
    }
    report.skills[i] = sums[i] / static_cast<double>(report.task_counts[i]);
  }
  if (!empty.empty()) throw DataError("model " + model + " has no tasks for: " + empty);
  for (double v : report.skills) report.total += v;
  return report;
}

std::vector<ModelReport> skill_scores_all(std::span<const ScoreRecord> records,
                                          const SkillMap& skills, const MetricTable& metrics) {
  std::vector<ModelReport> reports;
  for (const auto& m : models_in_order(records))
    reports.push_back(skill_scores(m, records, skills, metrics));
  return reports;
}

std::vector<GainReport> gains(std::span<const ModelReport> reports, const std::string& baseline) {
  const auto base = std::find_if(reports.begin(), reports.end(),
                                 [&](const ModelReport& r) { return r.model == baseline; });
  if (base == reports.end()) throw DataError("baseline model '" + baseline + "' not found");
  auto gain = [](double value, double ref) -> std::optional<double> {
    if (ref == 0.0) return std::nullopt;
    return (value / ref - 1.0) * 100.0;
  };
  std::vector<GainReport> out;
  for (const auto& r : reports) {
    GainReport g;
    g.model = r.model;
    g.overall = gain(r.total, base->total);
    for (std::size_t i = 0; i < kSkillCount; ++i) g.skills[i] = gain(r.skills[i], base->skills[i]);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<int> competition_ranks(std::span<const double> values, bool higher_is_better) {
  std::vector<int> ranks(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values.size(); ++j)
      if (higher_is_better ? values[j] > values[i] : values[j] < values[i]) ++ranks[i];
  return ranks;
}

std::vector<RankReport> rank_models(std::span<const ScoreRecord> records, const SkillMap& skills,
                                    const MetricTable& metrics) {
  skills.check(records);
  const auto models = models_in_order(records);
  if (models.size() < 2) throw DataError("ranking needs at least two models");

  std::set<std::string> tasks;
  for (const auto& r : records) tasks.insert(r.task);
  std::vector<std::map<std::string, double>> best;
  for (const auto& m : models) best.push_back(best_by_task(m, records, skills, metrics));

  std::string missing;
  for (std::size_t m = 0; m < models.size(); ++m)
    for (const auto& t : tasks)
      if (!best[m].count(t)) missing += (missing.empty() ? "" : ", ") + ("(" + models[m] + ", " + t + ")");
  if (!missing.empty()) throw DataError("unequal task coverage, missing: " + missing);

  std::vector<std::array<double, kSkillCount>> rank_sums(models.size());
  std::array<std::size_t, kSkillCount> task_counts{};
  for (const auto& t : tasks) {
    std::vector<double> scores;
    for (const auto& b : best) scores.push_back(b.at(t));
    const auto ranks = competition_ranks(scores, true);
    const std::size_t s = index_of(skills.skill_of(t));
    ++task_counts[s];
    for (std::size_t m = 0; m < models.size(); ++m) rank_sums[m][s] += ranks[m];
  }

  std::vector<RankReport> out(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) out[m].model = models[m];
  for (std::size_t s = 0; s < kSkillCount; ++s) {
    if (task_counts[s] == 0) continue;
    std::vector<double> means;
    for (std::size_t m = 0; m < models.size(); ++m)
      means.push_back(rank_sums[m][s] / static_cast<double>(task_counts[s]));
    const auto ranks = competition_ranks(means, false);
    for (std::size_t m = 0; m < models.size(); ++m) out[m].ranks[s] = ranks[m];
  }
  return out;
}

std::string format_fixed2(double value) {
  if (value == 0.0) value = 0.0;  // no "-0.00"
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, 2);
  std::string s(buf, end);
  if (s == "-0.00") s = "0.00";
  return s;
}

namespace {

std::string format_gain(const std::optional<double>& g) {
  return g ? format_fixed2(*g) : std::string("undefined");
}

}  // namespace

void write_reports_csv(std::ostream& out, std::span<const ModelReport> reports) {
  out << "model";
  for (Skill s : kSkills) out << ',' << csv_field(skill_name(s));
  out << ",Score\n";
  for (const auto& r : reports) {
    out << csv_field(r.model);
    for (double v : r.skills) out << ',' << format_fixed2(v);
    out << ',' << format_fixed2(r.total) << '\n';
  }
}

void write_gains_csv(std::ostream& out, std::span<const GainReport> gains) {
  out << "model,overall";
  for (Skill s : kSkills) out << ',' << csv_field(skill_name(s));
  out << '\n';
  for (const auto& g : gains) {
    out << csv_field(g.model) << ',' << format_gain(g.overall);
    for (const auto& v : g.skills) out << ',' << format_gain(v);
    out << '\n';
  }
}

void write_ranks_csv(std::ostream& out, std::span<const RankReport> ranks) {
  out << "model";
  for (Skill s : kSkills) out << ',' << csv_field(skill_name(s));
  out << '\n';
  for (const auto& r : ranks) {
    out << csv_field(r.model);
    for (int v : r.ranks) out << ',' << v;
    out << '\n';
  }
}

namespace {

void write_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(widths[c] - row[c].size(), ' ');
      if (c == 0) line += row[c] + pad;
      else line += "  " + pad + row[c];
    }
    out << line << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

}  // namespace

void write_reports_table(std::ostream& out, std::span<const ModelReport> reports) {
  std::vector<std::string> header{"Model"};
  for (Skill s : kSkills) header.emplace_back(skill_abbreviation(s));
  header.emplace_back("Score");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    std::vector<std::string> row{r.model};
    for (double v : r.skills) row.push_back(format_fixed2(v));
    row.push_back(format_fixed2(r.total));
    rows.push_back(std::move(row));
  }
  write_table(out, header, rows);
}

void write_gains_table(std::ostream& out, std::span<const GainReport> gains) {
  std::vector<std::string> header{"Model", "Overall"};
  for (Skill s : kSkills) header.emplace_back(skill_abbreviation(s));
  std::vector<std::vector<std::string>> rows;
  for (const auto& g : gains) {
    std::vector<std::string> row{g.model, format_gain(g.overall)};
    for (const auto& v : g.skills) row.push_back(format_gain(v));
    rows.push_back(std::move(row));
  }
  write_table(out, header, rows);
}

}  // namespace curate::eval
