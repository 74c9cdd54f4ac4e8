#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perplex/seqmodel.hpp"

namespace perplex::cli {

// One sampled text per JSONL line:
//   {"id":"g-0","generator":"g","prompt_len":0,"tokens":[3,1,0]}
// "generator" is optional; when present it labels the text for error rates.
struct TokenRecord {
  std::string id;
  std::optional<std::string> generator;
  TokenSequence text;
};

std::string to_jsonl(const TokenRecord& record);
std::vector<TokenRecord> load_token_file(const std::filesystem::path& file);

}  // namespace perplex::cli
