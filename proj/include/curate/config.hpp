#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace curate {

// Sectioned key = value file:
//
//   # comment
//   [budget]
//   sv = 0.154
//   [subset.books_newspapers]
//   predicate = "doc_type==book || doc_type==newspaper"
//
// Surrounding double quotes on values are removed. Section and key order is
// preserved.
class Config {
 public:
  using Entries = std::vector<std::pair<std::string, std::string>>;

  static Config load(const std::filesystem::path& path);
  static Config parse(std::istream& in, const std::string& origin = "<config>");

  const std::string& origin() const { return origin_; }
  std::vector<std::string> sections() const;
  bool has_section(const std::string& section) const;
  // Empty when the section is absent.
  const Entries& entries(const std::string& section) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

 private:
  std::string origin_;
  std::vector<std::pair<std::string, Entries>> sections_;
};

}  // namespace curate
