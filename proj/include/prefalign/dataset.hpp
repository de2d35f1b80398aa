#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "prefalign/record.hpp"

namespace prefalign {

/// One line of a record file that the schema does not know about is kept in
/// `extra` keyed by record index, so round-trips preserve foreign fields.
struct ExtraFields {
  std::unordered_map<std::size_t, nlohmann::json> prompts, candidates, pairwise, pointwise, pairs;
  bool empty() const;
};

struct Dataset {
  std::vector<Prompt> prompts;
  std::vector<Candidate> candidates;
  std::vector<PairwiseRecord> pairwise;
  std::vector<PointwiseRecord> pointwise;
  std::vector<PreferencePair> pairs;
  ExtraFields extra;

  const Prompt* find_prompt(const std::string& id) const;
  const Candidate* find_candidate(const std::string& id) const;
  std::vector<const Candidate*> candidates_of(const std::string& prompt_id) const;

  /// Cross-record invariants: unique non-empty ids, consistent feature
  /// dimension, payload kind matching the prompt task, resolvable references.
  void validate() const;
};

bool operator==(const Dataset& a, const Dataset& b);

/// Reads a line-delimited record file. Malformed lines raise SchemaError with
/// the 1-based line number and the offending field. An empty file yields an
/// empty dataset.
Dataset read_records(const std::filesystem::path& path);
Dataset parse_records(std::istream& in);

/// Writes the canonical form: one JSON object per line, keys sorted, records
/// grouped as prompts, candidates, pairwise, pointwise, pairs.
void write_records(const Dataset& dataset, const std::filesystem::path& path);
std::string format_records(const Dataset& dataset);

}  // namespace prefalign
