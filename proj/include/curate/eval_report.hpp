#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curate/config.hpp"

namespace curate::eval {

enum class Orientation { higher_better, lower_better };
enum class Scale { unit_interval, percent, unbounded };

// Maps an unbounded metric onto [0, 100] before orientation is applied.
struct Transform {
  enum class Kind { linear, minmax } kind = Kind::linear;
  double a = 1.0;  // linear: scale, minmax: lo
  double b = 0.0;  // linear: offset, minmax: hi

  // "linear <scale> <offset>" or "minmax <lo> <hi>"
  static Transform parse(std::string_view text);
  double apply(double value) const;
};

struct MetricSpec {
  Scale scale = Scale::percent;
  Orientation orientation = Orientation::higher_better;
  std::optional<Transform> transform;
};

// One [metric.NAME] section per metric: scale, orientation, optional transform.
class MetricTable {
 public:
  static MetricTable from_config(const Config& config);

  void set(std::string name, MetricSpec spec) { specs_[std::move(name)] = std::move(spec); }
  // Throws DataError naming an undeclared metric.
  const MetricSpec& at(const std::string& metric) const;
  bool contains(const std::string& metric) const { return specs_.count(metric) != 0; }

 private:
  std::map<std::string, MetricSpec> specs_;
};

inline constexpr std::array<int, 4> kShots{0, 1, 4, 16};

struct ScoreRecord {
  std::string model;
  std::string task;
  std::string prompt_id;
  int k_shot = 0;
  std::string metric;
  double value = 0.0;
  Orientation orientation = Orientation::higher_better;
  Scale scale = Scale::percent;
};

// Header: model,task,prompt_id,k_shot,metric,value. Orientation and scale come
// from the metric table.
std::vector<ScoreRecord> read_scores(std::istream& in, const MetricTable& metrics);

// Higher-is-better value in [0, 100]. `transform` is required for unbounded
// metrics.
double normalize(const ScoreRecord& record, const std::optional<Transform>& transform = {});
double normalize(const ScoreRecord& record, const MetricTable& metrics);

enum class Skill {
  sentiment_analysis,
  fairness_truthfulness,
  reading_comprehension,
  world_knowledge,
  commonsense_reasoning,
  norwegian_language,
  summarization,
  translation,
  variation_readability,
};

inline constexpr std::size_t kSkillCount = 9;
inline constexpr std::array<Skill, kSkillCount> kSkills{
    Skill::sentiment_analysis,    Skill::fairness_truthfulness, Skill::reading_comprehension,
    Skill::world_knowledge,       Skill::commonsense_reasoning, Skill::norwegian_language,
    Skill::summarization,         Skill::translation,           Skill::variation_readability,
};

std::string_view skill_name(Skill s);
std::string_view skill_abbreviation(Skill s);
// Accepts the full name or the abbreviation.
std::optional<Skill> parse_skill(std::string_view text);

// task -> skill, plus an optional primary metric per task.
class SkillMap {
 public:
  // [skills] task = Skill name; [primary] task = metric.
  static SkillMap from_config(const Config& config);

  void assign(const std::string& task, Skill skill);
  void set_primary(const std::string& task, std::string metric);

  // Throws DataError for an unmapped task.
  Skill skill_of(const std::string& task) const;
  bool contains(const std::string& task) const { return tasks_.count(task) != 0; }
  const std::string* primary_metric(const std::string& task) const;
  // Checks every record's task is mapped.
  void check(std::span<const ScoreRecord> records) const;

 private:
  std::map<std::string, Skill> tasks_;
  std::map<std::string, std::string> primary_;
};

// Best normalized value over all shots, prompts and (primary) metrics of one
// model/task pair. Throws DataError("missing task") when nothing qualifies.
double best_score(std::span<const ScoreRecord> records, const MetricTable& metrics,
                  const std::string* primary_metric = nullptr);

struct ModelReport {
  std::string model;
  std::array<double, kSkillCount> skills{};
  double total = 0.0;
  std::array<std::size_t, kSkillCount> task_counts{};
};

// Skill score = mean best score over the skill's tasks; total = sum of skills.
ModelReport skill_scores(const std::string& model, std::span<const ScoreRecord> records,
                         const SkillMap& skills, const MetricTable& metrics);

// Reports for every model, in order of first appearance.
std::vector<ModelReport> skill_scores_all(std::span<const ScoreRecord> records,
                                          const SkillMap& skills, const MetricTable& metrics);

struct GainReport {
  std::string model;
  std::optional<double> overall;  // percent
  std::array<std::optional<double>, kSkillCount> skills{};
};

// (x_model / x_baseline - 1) * 100; undefined where the baseline value is 0.
std::vector<GainReport> gains(std::span<const ModelReport> reports, const std::string& baseline);

struct RankReport {
  std::string model;
  std::array<int, kSkillCount> ranks{};  // 0 for a skill with no tasks
};

// Competition ranks (1 = best, ties share the better rank): per task by best
// score, then per skill by the mean task rank. Requires >= 2 models that
// cover the same tasks.
std::vector<RankReport> rank_models(std::span<const ScoreRecord> records, const SkillMap& skills,
                                    const MetricTable& metrics);

// Competition ranking of values; `higher_is_better` picks the direction.
std::vector<int> competition_ranks(std::span<const double> values, bool higher_is_better);

// Fixed skill column order, two decimals.
void write_reports_csv(std::ostream& out, std::span<const ModelReport> reports);
void write_gains_csv(std::ostream& out, std::span<const GainReport> gains);
void write_ranks_csv(std::ostream& out, std::span<const RankReport> ranks);
void write_reports_table(std::ostream& out, std::span<const ModelReport> reports);
void write_gains_table(std::ostream& out, std::span<const GainReport> gains);

std::string format_fixed2(double value);

}  // namespace curate::eval
