#include "token_file.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "perplex/error.hpp"
#include "perplex/numfmt.hpp"

namespace perplex::cli {

namespace {

using json = nlohmann::json;

TokenRecord record_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError(0, "", "expected a JSON object");
  TokenRecord record;
  if (!doc.contains("id") || !doc.at("id").is_string()) {
    throw FormatError(0, "id", "missing or not a string");
  }
  record.id = doc.at("id").get<std::string>();
  if (doc.contains("generator") && !doc.at("generator").is_null()) {
    if (!doc.at("generator").is_string()) throw FormatError(0, "generator", "expected a string");
    record.generator = doc.at("generator").get<std::string>();
  }
  if (doc.contains("prompt_len")) {
    if (!doc.at("prompt_len").is_number_unsigned()) {
      throw FormatError(0, "prompt_len", "expected a non-negative integer");
    }
    record.text.prompt_len = doc.at("prompt_len").get<std::size_t>();
  }
  if (!doc.contains("tokens") || !doc.at("tokens").is_array()) {
    throw FormatError(0, "tokens", "missing or not an array");
  }
  for (const json& t : doc.at("tokens")) {
    if (!t.is_number_unsigned() || t.get<std::uint64_t>() > UINT32_MAX) {
      throw FormatError(0, "tokens", "tokens must be non-negative 32-bit integers");
    }
    record.text.tokens.push_back(t.get<Token>());
  }
  if (record.text.prompt_len >= record.text.tokens.size()) {
    throw FormatError(0, "prompt_len", "no tokens after the prompt");
  }
  return record;
}

}  // namespace

std::string to_jsonl(const TokenRecord& record) {
  std::string out = "{\"id\":" + json_quote(record.id);
  if (record.generator) out += ",\"generator\":" + json_quote(*record.generator);
  out += ",\"prompt_len\":" + std::to_string(record.text.prompt_len) + ",\"tokens\":[";
  for (std::size_t i = 0; i < record.text.tokens.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(record.text.tokens[i]);
  }
  return out + "]}";
}

std::vector<TokenRecord> load_token_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open token file " + file.string());
  std::vector<TokenRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::parse_error& e) {
        throw FormatError(0, "", std::string("malformed JSON: ") + e.what());
      }
      records.push_back(record_from_json(doc));
    } catch (const FormatError& e) {
      throw FormatError(line_no, e.field(), file.string() + ": " + e.detail());
    }
  }
  if (records.empty()) throw Error("token file " + file.string() + " holds no texts");
  return records;
}

}  // namespace perplex::cli
