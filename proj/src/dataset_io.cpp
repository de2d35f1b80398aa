#include "prefalign/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace prefalign {

using nlohmann::json;

bool ExtraFields::empty() const {
  return prompts.empty() && candidates.empty() && pairwise.empty() && pointwise.empty() &&
         pairs.empty();
}

const Prompt* Dataset::find_prompt(const std::string& id) const {
  for (const auto& p : prompts)
    if (p.id == id) return &p;
  return nullptr;
}

const Candidate* Dataset::find_candidate(const std::string& id) const {
  for (const auto& c : candidates)
    if (c.id == id) return &c;
  return nullptr;
}

std::vector<const Candidate*> Dataset::candidates_of(const std::string& prompt_id) const {
  std::vector<const Candidate*> out;
  for (const auto& c : candidates)
    if (c.prompt_id == prompt_id) out.push_back(&c);
  return out;
}

void Dataset::validate() const {
  std::set<std::string> prompt_ids;
  std::size_t feature_dim = 0;
  for (const auto& p : prompts) {
    if (p.id.empty()) throw Error(ErrorCode::InvalidConfig, "prompt with empty id");
    if (!prompt_ids.insert(p.id).second)
      throw Error(ErrorCode::DuplicateId, "duplicate prompt id '" + p.id + "'");
    if (p.seed_features.empty())
      throw Error(ErrorCode::ShapeMismatch, "prompt '" + p.id + "' has no seed features");
    if (feature_dim == 0) feature_dim = p.seed_features.size();
    if (p.seed_features.size() != feature_dim)
      throw Error(ErrorCode::ShapeMismatch, "prompt '" + p.id + "' feature dimension differs");
  }
  std::set<std::string> candidate_ids;
  for (const auto& c : candidates) {
    if (!candidate_ids.insert(c.id).second)
      throw Error(ErrorCode::DuplicateId, "duplicate candidate id '" + c.id + "'");
    const Prompt* p = find_prompt(c.prompt_id);
    if (!p) throw Error(ErrorCode::UnresolvedId, "candidate '" + c.id + "' references unknown prompt");
    const bool vector_payload = std::holds_alternative<Vec>(c.payload);
    if (vector_payload != task_is_generation(p->task))
      throw Error(ErrorCode::ShapeMismatch,
                  "candidate '" + c.id + "' payload kind does not match task " + task_name(p->task));
    if (c.latent_quality < 0.0 || c.latent_quality > 1.0)
      throw Error(ErrorCode::OutOfRange, "candidate '" + c.id + "' latent quality outside [0,1]");
  }
  auto need_candidate = [&](const std::string& id, const std::string& prompt_id) {
    const Candidate* c = find_candidate(id);
    if (!c) throw Error(ErrorCode::UnresolvedId, "unknown candidate id '" + id + "'");
    if (c->prompt_id != prompt_id)
      throw Error(ErrorCode::PromptMismatch, "candidate '" + id + "' belongs to another prompt");
  };
  for (const auto& r : pairwise) {
    need_candidate(r.first_id, r.prompt_id);
    need_candidate(r.second_id, r.prompt_id);
  }
  for (const auto& r : pointwise) need_candidate(r.candidate_id, r.prompt_id);
  for (const auto& r : pairs) {
    need_candidate(r.chosen_id, r.prompt_id);
    need_candidate(r.rejected_id, r.prompt_id);
  }
}

namespace {

bool known_equal(const Dataset& a, const Dataset& b);

json extra_or_empty(const std::unordered_map<std::size_t, json>& m, std::size_t i) {
  auto it = m.find(i);
  return it == m.end() ? json::object() : it->second;
}

class LineReader {
 public:
  LineReader(const json& j, std::size_t line_no) : j_(j), line_(line_no) {}

  std::string str(const char* field) const {
    const json* v = get(field);
    if (!v || !v->is_string()) throw SchemaError(line_, field, "missing or not a string");
    return v->get<std::string>();
  }

  std::optional<std::string> opt_str(const char* field) const {
    const json* v = get(field);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw SchemaError(line_, field, "not a string");
    return v->get<std::string>();
  }

  double number(const char* field) const {
    const json* v = get(field);
    if (!v || !v->is_number()) throw SchemaError(line_, field, "missing or not a number");
    return v->get<double>();
  }

  std::optional<double> opt_number(const char* field) const {
    const json* v = get(field);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw SchemaError(line_, field, "not a number");
    return v->get<double>();
  }

  const json* get(const char* field) const {
    auto it = j_.find(field);
    return it == j_.end() ? nullptr : &*it;
  }

  std::size_t line() const { return line_; }

 private:
  const json& j_;
  std::size_t line_;
};

json collect_extra(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (const char* k : known)
      if (it.key() == k) { is_known = true; break; }
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

Vec read_double_array(const LineReader& r, const char* field) {
  const json* v = r.get(field);
  if (!v || !v->is_array()) throw SchemaError(r.line(), field, "missing or not an array");
  Vec out;
  out.reserve(v->size());
  for (const auto& e : *v) {
    if (!e.is_number()) throw SchemaError(r.line(), field, "non-numeric entry");
    out.push_back(e.get<double>());
  }
  return out;
}

void parse_prompt(const json& j, std::size_t line, Dataset& ds) {
  LineReader r(j, line);
  Prompt p;
  p.id = r.str("prompt_id");
  if (p.id.empty()) throw SchemaError(line, "prompt_id", "empty");
  try {
    p.task = task_from_name(r.str("task"));
  } catch (const Error&) {
    throw SchemaError(line, "task", "unknown task tag");
  }
  p.seed_features = read_double_array(r, "seed_features");
  if (p.seed_features.empty()) throw SchemaError(line, "seed_features", "empty");
  json extra = collect_extra(j, {"kind", "prompt_id", "task", "seed_features"});
  if (!extra.empty()) ds.extra.prompts[ds.prompts.size()] = std::move(extra);
  ds.prompts.push_back(std::move(p));
}

void parse_candidate(const json& j, std::size_t line, Dataset& ds) {
  LineReader r(j, line);
  Candidate c;
  c.prompt_id = r.str("prompt_id");
  c.id = r.str("candidate_id");
  const json* tokens = r.get("payload_tokens");
  const json* vec = r.get("payload_vector");
  if ((tokens == nullptr) == (vec == nullptr))
    throw SchemaError(line, "payload", "exactly one of payload_tokens/payload_vector required");
  if (tokens) {
    if (!tokens->is_array()) throw SchemaError(line, "payload_tokens", "not an array");
    TokenSeq seq;
    seq.reserve(tokens->size());
    for (const auto& e : *tokens) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw SchemaError(line, "payload_tokens", "tokens must be non-negative integers");
      seq.push_back(e.get<int>());
    }
    c.payload = std::move(seq);
  } else {
    c.payload = read_double_array(r, "payload_vector");
  }
  c.latent_quality = r.number("latent_quality");
  if (c.latent_quality < 0.0 || c.latent_quality > 1.0)
    throw SchemaError(line, "latent_quality", "outside [0,1]");
  json extra = collect_extra(
      j, {"kind", "prompt_id", "candidate_id", "payload_tokens", "payload_vector", "latent_quality"});
  if (!extra.empty()) ds.extra.candidates[ds.candidates.size()] = std::move(extra);
  ds.candidates.push_back(std::move(c));
}

void parse_pairwise(const json& j, std::size_t line, Dataset& ds) {
  LineReader r(j, line);
  PairwiseRecord rec;
  rec.prompt_id = r.str("prompt_id");
  rec.first_id = r.str("first_id");
  rec.second_id = r.str("second_id");
  if (rec.first_id == rec.second_id) throw SchemaError(line, "second_id", "equals first_id");
  ParsedAnswer parsed;
  try {
    parsed = parse_pairwise_answer(r.str("answer"));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(line, "answer", e.what());
  }
  const bool first_wins = parsed.winner_index == 1 && parsed.loser_index == 2;
  const bool second_wins = parsed.winner_index == 2 && parsed.loser_index == 1;
  if (!first_wins && !second_wins)
    throw SchemaError(line, "answer", "record answers must use indices 1 and 2");
  rec.verdict = first_wins ? Verdict::First : Verdict::Second;
  rec.subject = parsed.subject;
  rec.justification = r.opt_str("justification");
  json extra =
      collect_extra(j, {"kind", "prompt_id", "first_id", "second_id", "answer", "justification"});
  if (!extra.empty()) ds.extra.pairwise[ds.pairwise.size()] = std::move(extra);
  ds.pairwise.push_back(std::move(rec));
}

void parse_pointwise(const json& j, std::size_t line, Dataset& ds) {
  LineReader r(j, line);
  PointwiseRecord rec;
  rec.prompt_id = r.str("prompt_id");
  rec.candidate_id = r.str("candidate_id");
  rec.raw_score = r.number("raw_score");
  rec.scale.min = r.number("scale_min");
  rec.scale.max = r.number("scale_max");
  rec.scale.label = r.str("scale_label");
  if (!(rec.scale.min < rec.scale.max)) throw SchemaError(line, "scale_max", "requires min < max");
  if (rec.raw_score < rec.scale.min || rec.raw_score > rec.scale.max)
    throw SchemaError(line, "raw_score", "outside the declared scale");
  if (const json* elements = r.get("elements")) {
    if (!elements->is_object()) throw SchemaError(line, "elements", "not an object");
    std::map<std::string, bool> labels;
    for (auto it = elements->begin(); it != elements->end(); ++it) {
      if (!it.value().is_boolean()) throw SchemaError(line, "elements", "values must be booleans");
      labels[it.key()] = it.value().get<bool>();
    }
    rec.element_labels = std::move(labels);
  }
  json extra = collect_extra(j, {"kind", "prompt_id", "candidate_id", "raw_score", "scale_min",
                                 "scale_max", "scale_label", "elements"});
  if (!extra.empty()) ds.extra.pointwise[ds.pointwise.size()] = std::move(extra);
  ds.pointwise.push_back(std::move(rec));
}

void parse_pair(const json& j, std::size_t line, Dataset& ds) {
  LineReader r(j, line);
  PreferencePair rec;
  rec.prompt_id = r.str("prompt_id");
  rec.chosen_id = r.str("chosen_id");
  rec.rejected_id = r.str("rejected_id");
  if (rec.chosen_id == rec.rejected_id) throw SchemaError(line, "rejected_id", "equals chosen_id");
  try {
    rec.strategy = strategy_from_name(r.str("strategy"));
  } catch (const Error&) {
    throw SchemaError(line, "strategy", "unknown strategy");
  }
  rec.chosen_score = r.opt_number("chosen_score");
  rec.rejected_score = r.opt_number("rejected_score");
  if (const json* seed = r.get("rng_seed")) {
    if (!seed->is_number_unsigned()) throw SchemaError(line, "rng_seed", "not an unsigned integer");
    rec.rng_seed = seed->get<std::uint64_t>();
  }
  if (rec.strategy == Strategy::TwoStage && (!rec.chosen_score || !rec.rejected_score))
    throw SchemaError(line, "chosen_score", "two_stage pairs carry both stage scores");
  json extra = collect_extra(j, {"kind", "prompt_id", "chosen_id", "rejected_id", "strategy",
                                 "chosen_score", "rejected_score", "rng_seed"});
  if (!extra.empty()) ds.extra.pairs[ds.pairs.size()] = std::move(extra);
  ds.pairs.push_back(std::move(rec));
}

}  // namespace

Dataset parse_records(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError(line_no, "json", "line is not a JSON object");
    }
    if (!j.is_object()) throw SchemaError(line_no, "json", "line is not a JSON object");
    const auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) throw SchemaError(line_no, "kind", "missing");
    const std::string kind = kind_it->get<std::string>();
    if (kind == "prompt") parse_prompt(j, line_no, ds);
    else if (kind == "candidate") parse_candidate(j, line_no, ds);
    else if (kind == "pairwise") parse_pairwise(j, line_no, ds);
    else if (kind == "pointwise") parse_pointwise(j, line_no, ds);
    else if (kind == "pair") parse_pair(j, line_no, ds);
    else throw SchemaError(line_no, "kind", "unknown kind '" + kind + "'");
  }
  return ds;
}

Dataset read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return parse_records(in);
}

namespace {

void emit(std::ostream& os, json j) { os << j.dump() << '\n'; }

json base_from_extra(const std::unordered_map<std::size_t, json>& extras, std::size_t i) {
  return extra_or_empty(extras, i);
}

}  // namespace

std::string format_records(const Dataset& ds) {
  std::ostringstream os;
  for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
    const auto& p = ds.prompts[i];
    json j = base_from_extra(ds.extra.prompts, i);
    j["kind"] = "prompt";
    j["prompt_id"] = p.id;
    j["task"] = task_name(p.task);
    j["seed_features"] = p.seed_features;
    emit(os, std::move(j));
  }
  for (std::size_t i = 0; i < ds.candidates.size(); ++i) {
    const auto& c = ds.candidates[i];
    json j = base_from_extra(ds.extra.candidates, i);
    j["kind"] = "candidate";
    j["prompt_id"] = c.prompt_id;
    j["candidate_id"] = c.id;
    if (const auto* seq = std::get_if<TokenSeq>(&c.payload)) j["payload_tokens"] = *seq;
    else j["payload_vector"] = std::get<Vec>(c.payload);
    j["latent_quality"] = c.latent_quality;
    emit(os, std::move(j));
  }
  for (std::size_t i = 0; i < ds.pairwise.size(); ++i) {
    const auto& r = ds.pairwise[i];
    json j = base_from_extra(ds.extra.pairwise, i);
    j["kind"] = "pairwise";
    j["prompt_id"] = r.prompt_id;
    j["first_id"] = r.first_id;
    j["second_id"] = r.second_id;
    j["answer"] = r.verdict == Verdict::First ? format_pairwise_answer(r.subject, 1, 2)
                                              : format_pairwise_answer(r.subject, 2, 1);
    if (r.justification) j["justification"] = *r.justification;
    emit(os, std::move(j));
  }
  for (std::size_t i = 0; i < ds.pointwise.size(); ++i) {
    const auto& r = ds.pointwise[i];
    json j = base_from_extra(ds.extra.pointwise, i);
    j["kind"] = "pointwise";
    j["prompt_id"] = r.prompt_id;
    j["candidate_id"] = r.candidate_id;
    j["raw_score"] = r.raw_score;
    j["scale_min"] = r.scale.min;
    j["scale_max"] = r.scale.max;
    j["scale_label"] = r.scale.label;
    if (r.element_labels) j["elements"] = *r.element_labels;
    emit(os, std::move(j));
  }
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& r = ds.pairs[i];
    json j = base_from_extra(ds.extra.pairs, i);
    j["kind"] = "pair";
    j["prompt_id"] = r.prompt_id;
    j["chosen_id"] = r.chosen_id;
    j["rejected_id"] = r.rejected_id;
    j["strategy"] = strategy_name(r.strategy);
    if (r.chosen_score) j["chosen_score"] = *r.chosen_score;
    if (r.rejected_score) j["rejected_score"] = *r.rejected_score;
    if (r.rng_seed) j["rng_seed"] = *r.rng_seed;
    emit(os, std::move(j));
  }
  return os.str();
}

void write_records(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << format_records(dataset);
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

namespace {

bool known_equal(const Dataset& a, const Dataset& b) {
  auto pay_eq = [](const Payload& x, const Payload& y) { return x == y; };
  if (a.prompts.size() != b.prompts.size() || a.candidates.size() != b.candidates.size() ||
      a.pairwise.size() != b.pairwise.size() || a.pointwise.size() != b.pointwise.size() ||
      a.pairs.size() != b.pairs.size())
    return false;
  for (std::size_t i = 0; i < a.prompts.size(); ++i) {
    const auto &x = a.prompts[i], &y = b.prompts[i];
    if (x.id != y.id || x.task != y.task || x.seed_features != y.seed_features) return false;
  }
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    const auto &x = a.candidates[i], &y = b.candidates[i];
    if (x.id != y.id || x.prompt_id != y.prompt_id || !pay_eq(x.payload, y.payload) ||
        x.latent_quality != y.latent_quality)
      return false;
  }
  for (std::size_t i = 0; i < a.pairwise.size(); ++i) {
    const auto &x = a.pairwise[i], &y = b.pairwise[i];
    if (x.prompt_id != y.prompt_id || x.first_id != y.first_id || x.second_id != y.second_id ||
        x.verdict != y.verdict || x.subject != y.subject || x.justification != y.justification)
      return false;
  }
  for (std::size_t i = 0; i < a.pointwise.size(); ++i) {
    const auto &x = a.pointwise[i], &y = b.pointwise[i];
    if (x.prompt_id != y.prompt_id || x.candidate_id != y.candidate_id ||
        x.raw_score != y.raw_score || x.scale.min != y.scale.min || x.scale.max != y.scale.max ||
        x.scale.label != y.scale.label || x.element_labels != y.element_labels)
      return false;
  }
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const auto &x = a.pairs[i], &y = b.pairs[i];
    if (x.prompt_id != y.prompt_id || x.chosen_id != y.chosen_id ||
        x.rejected_id != y.rejected_id || x.strategy != y.strategy ||
        x.chosen_score != y.chosen_score || x.rejected_score != y.rejected_score ||
        x.rng_seed != y.rng_seed)
      return false;
  }
  return true;
}

bool extras_equal(const std::unordered_map<std::size_t, nlohmann::json>& a,
                  const std::unordered_map<std::size_t, nlohmann::json>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) return false;
  }
  return true;
}

}  // namespace

bool operator==(const Dataset& a, const Dataset& b) {
  return known_equal(a, b) && extras_equal(a.extra.prompts, b.extra.prompts) &&
         extras_equal(a.extra.candidates, b.extra.candidates) &&
         extras_equal(a.extra.pairwise, b.extra.pairwise) &&
         extras_equal(a.extra.pointwise, b.extra.pointwise) &&
         extras_equal(a.extra.pairs, b.extra.pairs);
}

}  // namespace prefalign
