#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "perplex/seqmodel.hpp"

namespace fixture {

inline perplex::MarkovModel order0(std::vector<double> row) {
  const perplex::Alphabet alphabet(row.size());
  return perplex::MarkovModel(alphabet, 0, {perplex::Distribution(std::move(row))}, std::nullopt);
}

inline perplex::MarkovModel markov(std::size_t k, std::size_t order,
                                   const std::vector<std::vector<double>>& rows) {
  std::vector<perplex::Distribution> table;
  for (const auto& r : rows) table.emplace_back(r);
  return perplex::MarkovModel(perplex::Alphabet(k), order, std::move(table), std::nullopt);
}

// Copies a model's rows out as plain data for the reference computations.
inline oracle::Table table_of(const perplex::MarkovModel& model) {
  oracle::Table t;
  t.k = model.alphabet().size();
  t.order = model.order();
  for (std::size_t r = 0; r < model.row_count(); ++r) {
    const auto row = model.row(r);
    t.rows.emplace_back(row.begin(), row.end());
  }
  return t;
}

inline perplex::TokenSequence text(std::vector<perplex::Token> tokens, std::size_t prompt_len = 0) {
  return perplex::TokenSequence{std::move(tokens), prompt_len};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("perplex-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static std::atomic<int>& counter() {
    static std::atomic<int> n{0};
    return n;
  }
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  out << content;
}

}  // namespace fixture
