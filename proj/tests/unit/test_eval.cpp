#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "curate/config.hpp"
#include "curate/errors.hpp"
#include "curate/eval_report.hpp"
#include "doctest.h"

using namespace curate;
using namespace curate::eval;

namespace {

ScoreRecord rec(std::string model, std::string task, double value, int shot = 0,
                std::string prompt = "p0", std::string metric = "acc") {
  ScoreRecord r;
  r.model = std::move(model);
  r.task = std::move(task);
  r.value = value;
  r.k_shot = shot;
  r.prompt_id = std::move(prompt);
  r.metric = std::move(metric);
  return r;
}

MetricTable percent_table() {
  MetricTable t;
  t.set("acc", MetricSpec{});
  return t;
}

struct ScoreFixture {
  std::vector<ScoreRecord> records;
  SkillMap skills;
  MetricTable metrics;
};

ScoreFixture load_score_fixture() {
  const std::string dir = CURATE_FIXTURE_DIR;
  ScoreFixture t;
  const auto cfg = Config::load(dir + "/skills.ini");
  t.metrics = MetricTable::from_config(cfg);
  t.skills = SkillMap::from_config(cfg);
  std::ifstream in(dir + "/skill_scores.csv");
  t.records = read_scores(in, t.metrics);
  return t;
}

}  // namespace

TEST_CASE("normalization rules") {
  auto r = rec("m", "t", 0.87);
  r.scale = Scale::unit_interval;
  CHECK(normalize(r) == doctest::Approx(87.0));
  auto e = rec("m", "t", 10);
  e.orientation = Orientation::lower_better;
  CHECK(normalize(e) == doctest::Approx(90.0));
  auto u = rec("m", "t", 35);
  u.scale = Scale::unbounded;
  CHECK_THROWS_AS(normalize(u), DataError);
  CHECK(normalize(u, Transform::parse("minmax 0 70")) == doctest::Approx(50.0));
  CHECK(normalize(u, Transform::parse("linear 2 10")) == doctest::Approx(80.0));
  u.value = 1000;
  CHECK(normalize(u, Transform::parse("linear 1 0")) == 100.0);
  CHECK_THROWS(Transform::parse("cubic 1"));
}

TEST_CASE("best score is the maximum over shots and prompts") {
  const auto m = percent_table();
  const std::vector<ScoreRecord> two{rec("m", "t", 62.0, 0), rec("m", "t", 71.5, 4)};
  CHECK(best_score(two, m) == 71.5);
  const std::vector<ScoreRecord> one{rec("m", "t", 50.0)};
  CHECK(best_score(one, m) == 50.0);
  CHECK_THROWS_WITH_AS(best_score({}, m), doctest::Contains("missing task"), DataError);

  std::vector<ScoreRecord> grid;
  std::uint32_t x = 12345;
  for (int shot : kShots)
    for (int p = 0; p < 5; ++p) {
      x = x * 1103515245u + 12345u;
      grid.push_back(rec("m", "t", 40.0 + double(x % 4000) / 100.0, shot, "p" + std::to_string(p)));
    }
  grid[13].value = 88.4;
  CHECK(best_score(grid, m) == 88.4);
}

TEST_CASE("primary metric restricts the maximum") {
  MetricTable m = percent_table();
  m.set("f1", MetricSpec{});
  const std::vector<ScoreRecord> r{rec("m", "t", 60, 0, "p0", "acc"), rec("m", "t", 80, 0, "p0", "f1")};
  const std::string acc = "acc";
  CHECK(best_score(r, m) == 80);
  CHECK(best_score(r, m, &acc) == 60);
}

TEST_CASE("skill totals reproduce the evaluation table") {
  const auto t = load_score_fixture();
  const auto reports = skill_scores_all(t.records, t.skills, t.metrics);
  REQUIRE(reports.size() == 18);
  CHECK(reports[0].model == "base");
  CHECK(std::abs(reports[0].total - 413.98) <= 0.01);
  CHECK(reports[1].model == "extended");
  CHECK(std::abs(reports[1].total - 441.83) <= 0.01);
  CHECK(reports[0].skills[0] == doctest::Approx(69.54));
}

TEST_CASE("zero scores total zero") {
  SkillMap s;
  std::vector<ScoreRecord> r;
  for (std::size_t i = 0; i < kSkillCount; ++i) {
    const auto task = "task" + std::to_string(i);
    s.assign(task, kSkills[i]);
    r.push_back(rec("m", task, 0.0));
  }
  CHECK(skill_scores("m", r, s, percent_table()).total == 0.0);
}

TEST_CASE("unmapped tasks and missing skills") {
  SkillMap s;
  s.assign("a", Skill::translation);
  const std::vector<ScoreRecord> r{rec("m", "a", 50), rec("m", "b", 40)};
  CHECK_THROWS_WITH_AS(s.check(r), doctest::Contains("unmapped"), DataError);
  const std::vector<ScoreRecord> only{rec("m", "a", 50)};
  CHECK_THROWS_WITH_AS(skill_scores("m", only, s, percent_table()), doctest::Contains("has no tasks for"),
                       DataError);
}

TEST_CASE("gains against a baseline") {
  const auto t = load_score_fixture();
  const auto reports = skill_scores_all(t.records, t.skills, t.metrics);
  const auto g = gains(reports, "base");
  CHECK(*g[0].overall == 0.0);
  for (const auto& s : g[0].skills) CHECK(*s == 0.0);
  CHECK(std::abs(*g[1].overall - 6.73) <= 0.02);
  for (const auto& x : g)
    if (x.model == "base + newspapers") CHECK(std::abs(*x.skills[7] - 27.20) <= 0.02);

  ModelReport zero{"zero", {}, 0.0, {}};
  ModelReport other{"other", {}, 10.0, {}};
  other.skills[0] = 10.0;
  const std::vector<ModelReport> z{zero, other};
  const auto u = gains(z, "zero");
  CHECK_FALSE(u[1].overall.has_value());
  CHECK_FALSE(u[1].skills[0].has_value());
  CHECK_THROWS_AS(gains(z, "nobody"), DataError);
}

TEST_CASE("competition ranks") {
  const std::vector<double> mean{1.0, 2.5, 2.5};
  CHECK(competition_ranks(mean, false) == std::vector<int>{1, 2, 2});
  const std::vector<double> scores{70, 90, 90, 10};
  CHECK(competition_ranks(scores, true) == std::vector<int>{3, 1, 1, 4});
}

TEST_CASE("model ranking per skill") {
  SkillMap s;
  s.assign("t1", Skill::sentiment_analysis);
  s.assign("t2", Skill::sentiment_analysis);
  const auto m = percent_table();
  // per task ranks: A 1,1  B 2,3  C 3,2 -> means 1, 2.5, 2.5
  const std::vector<ScoreRecord> r{rec("A", "t1", 90), rec("A", "t2", 90), rec("B", "t1", 80),
                                   rec("B", "t2", 60), rec("C", "t1", 70), rec("C", "t2", 70)};
  const auto ranks = rank_models(r, s, m);
  REQUIRE(ranks.size() == 3);
  CHECK(ranks[0].ranks[0] == 1);
  CHECK(ranks[1].ranks[0] == 2);
  CHECK(ranks[2].ranks[0] == 2);
  CHECK(ranks[0].ranks[1] == 0);

  const std::vector<ScoreRecord> tie{rec("A", "t1", 50), rec("B", "t1", 50)};
  const auto t = rank_models(tie, s, m);
  CHECK(t[0].ranks[0] == 1);
  CHECK(t[1].ranks[0] == 1);

  const std::vector<ScoreRecord> uneven{rec("A", "t1", 50), rec("A", "t2", 50), rec("B", "t1", 50)};
  CHECK_THROWS_WITH_AS(rank_models(uneven, s, m), doctest::Contains("unequal task coverage"), DataError);
}

TEST_CASE("rendering is deterministic") {
  const auto t = load_score_fixture();
  const auto reports = skill_scores_all(t.records, t.skills, t.metrics);
  std::ostringstream a, b, text;
  write_reports_csv(a, reports);
  write_reports_csv(b, reports);
  CHECK(a.str() == b.str());
  write_reports_table(text, reports);
  std::istringstream lines(text.str());
  std::string line;
  bool found = false;
  while (std::getline(lines, line))
    if (line.rfind("base ", 0) == 0 && line.find("69.54") != std::string::npos &&
        line.find("413.98") != std::string::npos)
      found = true;
  CHECK(found);

  std::ostringstream empty;
  write_reports_csv(empty, {});
  const std::string header_only = empty.str();
  CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 1);
  CHECK(format_fixed2(3.14159) == "3.14");
}
