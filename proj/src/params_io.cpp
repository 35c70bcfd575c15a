#include "mchain/params_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mchain {

using json = nlohmann::ordered_json;

std::string params_to_json(const Params& params) {
  json doc = json::object();
  for (const auto& p : params) {
    json entry;
    entry["shape"] = p.value.shape();
    entry["data"] = std::vector<double>(p.value.data().begin(), p.value.data().end());
    doc[p.name] = std::move(entry);
  }
  return doc.dump(2);
}

Params params_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("params: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("params: top level must be an object");
  std::vector<NamedTensor> entries;
  for (const auto& [name, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("shape") || !entry.contains("data")) {
      throw std::invalid_argument("params: entry '" + name + "' needs 'shape' and 'data'");
    }
    try {
      entries.push_back({name, Tensor(entry.at("shape").get<Shape>(), entry.at("data").get<std::vector<double>>())});
    } catch (const json::exception& e) {
      throw std::invalid_argument("params: entry '" + name + "': " + e.what());
    }
  }
  return Params(std::move(entries));
}

void save_params(const Params& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << params_to_json(params) << '\n';
}

Params load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

}  // namespace mchain
