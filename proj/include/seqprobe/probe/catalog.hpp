#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqprobe::probe {

inline constexpr const char* kUnknownValue = "unknown";

struct Item {
  std::string id;
  std::string title;
  std::vector<std::string> title_tokens;
  std::map<std::string, std::string> attributes;
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Items plus the attribute schema inferred from them. Every item carries
/// every schema attribute; missing ones are filled with "unknown".
class Catalog {
 public:
  Catalog() = default;
  /// Rejects an empty list and duplicate ids.
  explicit Catalog(std::vector<Item> items);

  const std::vector<Item>& items() const noexcept { return items_; }
  const Item& item(std::size_t i) const { return items_.at(i); }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  /// attribute -> sorted observed values, always including "unknown".
  const std::map<std::string, std::vector<std::string>>& schema() const noexcept { return schema_; }
  std::vector<std::string> attribute_names() const;
  bool has_attribute(const std::string& name) const { return schema_.count(name) != 0; }
  /// Throws std::invalid_argument for an attribute outside the schema.
  const std::vector<std::string>& values_of(const std::string& attribute) const;
  const std::string& value(std::size_t item, const std::string& attribute) const;
  std::size_t index_of(const std::string& id) const;

 private:
  std::vector<Item> items_;
  std::map<std::string, std::vector<std::string>> schema_;
  std::map<std::string, std::size_t> index_;
};

/// JSON Lines: {"id": ..., "title": ..., "attributes": {...}} per line.
Catalog read_catalog_jsonl(std::istream& in, const std::string& source = "catalog");
Catalog load_catalog(const std::filesystem::path& path);

}  // namespace seqprobe::probe
