#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "perplex/error.hpp"
#include "perplex/numfmt.hpp"
#include "perplex/seqmodel.hpp"

namespace perplex {

std::string to_json(const MarkovModel& model) {
  const std::size_t k = model.alphabet().size();
  std::string out = "{\n";
  out += "  \"alphabet_size\": " + std::to_string(k) + ",\n";
  out += "  \"order\": " + std::to_string(model.order()) + ",\n";
  out += "  \"epsilon\": " + (model.epsilon() ? format_exact(*model.epsilon()) : "null") + ",\n";
  out += "  \"rows\": [\n";
  for (std::size_t r = 0; r < model.row_count(); ++r) {
    out += "    [";
    const auto row = model.row(r);
    for (std::size_t i = 0; i < k; ++i) {
      if (i) out += ", ";
      out += format_exact(row[i]);
    }
    out += r + 1 < model.row_count() ? "],\n" : "]\n";
  }
  out += "  ]\n}\n";
  return out;
}

MarkovModel markov_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(0, "", std::string("malformed model JSON: ") + e.what());
  }
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!doc.is_object() || !doc.contains(field)) throw FormatError(0, field, "missing");
    return doc.at(field);
  };

  const auto& k_field = require("alphabet_size");
  const auto& order_field = require("order");
  const auto& eps_field = require("epsilon");
  const auto& rows_field = require("rows");
  if (!k_field.is_number_unsigned()) throw FormatError(0, "alphabet_size", "expected a count");
  if (!order_field.is_number_unsigned()) throw FormatError(0, "order", "expected a count");
  if (!eps_field.is_null() && !eps_field.is_number()) {
    throw FormatError(0, "epsilon", "expected a number or null");
  }
  if (!rows_field.is_array()) throw FormatError(0, "rows", "expected an array of rows");

  try {
    const Alphabet alphabet(k_field.get<std::size_t>());
    std::vector<Distribution> rows;
    rows.reserve(rows_field.size());
    for (const auto& row : rows_field) {
      if (!row.is_array()) throw FormatError(0, "rows", "each row must be an array");
      std::vector<double> probs;
      probs.reserve(row.size());
      for (const auto& p : row) {
        if (!p.is_number()) throw FormatError(0, "rows", "non-numeric probability");
        probs.push_back(p.get<double>());
      }
      rows.emplace_back(std::move(probs));
    }
    std::optional<double> eps;
    if (eps_field.is_number()) eps = eps_field.get<double>();
    return MarkovModel(alphabet, order_field.get<std::size_t>(), std::move(rows), eps);
  } catch (const DomainError& e) {
    throw FormatError(0, "rows", e.what());
  }
}

void save_model(const MarkovModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << to_json(model);
  if (!out) throw Error("failed writing " + path);
}

MarkovModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return markov_from_json(buffer.str());
}

}  // namespace perplex
