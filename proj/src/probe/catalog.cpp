#include "seqprobe/probe/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "seqprobe/training/corpus.hpp"

namespace seqprobe::probe {

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  if (items_.empty()) throw CatalogError("catalog has no items");
  std::map<std::string, std::set<std::string>> observed;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].id, i).second) throw CatalogError("duplicate item id '" + items_[i].id + "'");
    if (items_[i].title_tokens.empty()) items_[i].title_tokens = training::tokenize(items_[i].title);
    for (const auto& [k, v] : items_[i].attributes) observed[k].insert(v);
  }
  for (auto& [name, values] : observed) {
    values.insert(kUnknownValue);
    schema_[name].assign(values.begin(), values.end());
    for (auto& item : items_) item.attributes.try_emplace(name, kUnknownValue);
  }
}

std::vector<std::string> Catalog::attribute_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : schema_) out.push_back(k);
  return out;
}

const std::vector<std::string>& Catalog::values_of(const std::string& attribute) const {
  auto it = schema_.find(attribute);
  if (it == schema_.end()) throw std::invalid_argument("unknown attribute '" + attribute + "'");
  return it->second;
}

const std::string& Catalog::value(std::size_t item, const std::string& attribute) const {
  values_of(attribute);
  return items_.at(item).attributes.at(attribute);
}

std::size_t Catalog::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("no item with id '" + id + "'");
  return it->second;
}

Catalog read_catalog_jsonl(std::istream& in, const std::string& source) {
  std::vector<Item> items;
  std::string line;
  std::size_t line_no = 0;
  auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      Item item;
      item.id = scalar(j.at("id"));
      item.title = j.value("title", std::string());
      if (j.contains("attributes")) {
        if (!j["attributes"].is_object()) throw CatalogError(where + ": attributes must be an object");
        for (const auto& [k, v] : j["attributes"].items())
          if (!v.is_null()) item.attributes[k] = scalar(v);
      }
      items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw CatalogError(where + ": " + e.what());
    }
  }
  return Catalog(std::move(items));
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog " + path.string());
  return read_catalog_jsonl(in, path.string());
}

}  // namespace seqprobe::probe
