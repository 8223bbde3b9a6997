#include "curate/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>

#include "curate/errors.hpp"

namespace curate {
namespace {

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return parse(in, path.string());
}

Config Config::parse(std::istream& in, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Config cfg;
  cfg.origin_ = origin;
  for (const auto& [name, child] : tree) {
    if (child.empty() && !child.data().empty()) {
      throw UsageError(origin + ": key '" + name + "' must live inside a [section]");
    }
    Entries entries;
    for (const auto& [key, value] : child) entries.emplace_back(key, unquote(value.data()));
    cfg.sections_.emplace_back(name, std::move(entries));
  }
  return cfg;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> names;
  for (const auto& s : sections_) names.push_back(s.first);
  return names;
}

bool Config::has_section(const std::string& section) const {
  for (const auto& s : sections_)
    if (s.first == section) return true;
  return false;
}

const Config::Entries& Config::entries(const std::string& section) const {
  static const Entries empty;
  for (const auto& s : sections_)
    if (s.first == section) return s.second;
  return empty;
}

std::optional<std::string> Config::get(const std::string& section,
                                       const std::string& key) const {
  for (const auto& [k, v] : entries(section))
    if (k == key) return v;
  return std::nullopt;
}

}  // namespace curate
