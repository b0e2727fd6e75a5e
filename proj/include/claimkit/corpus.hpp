#pragma once

// Dataset ingestion, multilingual expansion, folds and chronological splits.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "claimkit/csv.hpp"
#include "claimkit/error.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

// Entailment verdict of a text with respect to a claim. Codes follow the
// prompt protocol: 0 supports, 1 refutes, 2 not enough info.
enum class EntailLabel : int { Supported = 0, Refuted = 1, NotEnoughInfo = 2 };

// Statement-document similarity label.
enum class SimLabel : int { OffTopic = 0, Mention = 1 };

using PairLabel = std::variant<EntailLabel, SimLabel>;

inline int label_code(const PairLabel& l) {
  return std::visit([](auto v) { return static_cast<int>(v); }, l);
}

inline const char* to_string(EntailLabel l) {
  switch (l) {
    case EntailLabel::Supported: return "SUPPORTS";
    case EntailLabel::Refuted: return "REFUTES";
    case EntailLabel::NotEnoughInfo: return "NOT ENOUGH INFO";
  }
  return "?";
}

inline const char* to_string(SimLabel l) { return l == SimLabel::Mention ? "Mention" : "Off-topic"; }

inline std::string to_string(const PairLabel& l) {
  return std::visit([](auto v) { return std::string(to_string(v)); }, l);
}

inline std::optional<EntailLabel> parse_entail_label(std::string_view token) {
  const std::string t = ascii_lower(trim(token));
  if (t == "0" || t == "supports" || t == "supported" || t == "supporta") return EntailLabel::Supported;
  if (t == "1" || t == "refutes" || t == "refuted" || t == "confuta") return EntailLabel::Refuted;
  if (t == "2" || t == "not enough info" || t == "notenoughinfo" || t == "nei") return EntailLabel::NotEnoughInfo;
  return std::nullopt;
}

inline std::optional<SimLabel> parse_sim_label(std::string_view token) {
  const std::string t = ascii_lower(trim(token));
  if (t == "mention" || t == "m") return SimLabel::Mention;
  if (t == "off-topic" || t == "offtopic" || t == "o") return SimLabel::OffTopic;
  return std::nullopt;
}

// Word labels are unambiguous; the digits 0/1 are read as entailment codes.
inline std::optional<PairLabel> parse_pair_label(std::string_view token) {
  if (auto s = parse_sim_label(token)) return PairLabel{*s};
  if (auto e = parse_entail_label(token)) return PairLabel{*e};
  return std::nullopt;
}

// A claim paired with a text. For entailment the claim is the hypothesis and
// the text the premise.
struct LabeledPair {
  std::string id;
  std::string claim;
  std::string text;
  PairLabel label = EntailLabel::NotEnoughInfo;
  std::string claim_lang;
  std::string text_lang;
  std::string source;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

// ---------------------------------------------------------------------------
// Verdict categories of the fact-checking dataset (15 labels).

inline constexpr std::array<std::string_view, 15> kVerdictCategories = {
    "VERO",
    "FALSO",
    "RAGIONE A METÀ",
    "IMPRECISIONE",
    "ESAGERAZIONE",
    "CONFUSIONE",
    "PLAUSIBILE",
    "SOSTANZIALMENTE RAGIONE",
    "INFONDATEZZA",
    "MESSAGGIO FUORVIANTE",
    "OMISSIONE",
    "APPROSSIMAZIONE",
    "LETTURA FUORVIANTE",
    "PRESUPPOSTO SBAGLIATO",
    "TRAVISAMENTO",
};

// Canonical spelling of a category, matched case-insensitively (accented
// letters included).
inline std::optional<std::string> canonical_verdict_category(std::string_view raw) {
  const std::string needle = to_lower_utf8(trim(raw));
  for (auto c : kVerdictCategories)
    if (to_lower_utf8(c) == needle) return std::string(c);
  return std::nullopt;
}

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 date or date-time: YYYY-MM-DD, optionally followed by
// Thh:mm[:ss] and a trailing 'Z'.
inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
  s = trim(s);
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    if (pos + len > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    auto h = num(pos + 1, 2);
    if (!h || pos + 3 >= s.size() || s[pos + 3] != ':') return std::nullopt;
    auto mi = num(pos + 4, 2);
    if (!mi) return std::nullopt;
    hh = *h;
    mm = *mi;
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      auto sec = num(pos + 1, 2);
      if (!sec) return std::nullopt;
      ss = *sec;
      pos += 3;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss};
}

// A fact-checker's verdict on a politician's statement.
struct Verdict {
  std::string id;
  std::string date;  // as given; `timestamp` is its parsed form
  Timestamp timestamp{};
  std::string verdict_text;
  std::string category;  // canonical spelling from kVerdictCategories
  std::string party;
  std::string source;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct DatasetSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> test;
  int fold_index = 1;  // 1-based
};

enum class DatasetFormat { FeverJsonl, PairsCsv, VerdictsCsv };

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "fever-jsonl") return DatasetFormat::FeverJsonl;
  if (s == "pairs-csv") return DatasetFormat::PairsCsv;
  if (s == "verdicts-csv") return DatasetFormat::VerdictsCsv;
  throw ValidationError("unknown dataset format '" + std::string(s) + "'");
}

template <typename Record>
struct LoadResult {
  std::vector<Record> records;
  std::vector<RecordError> errors;

  bool ok() const { return errors.empty(); }
};

namespace detail {

// Shared invariant checks for a freshly parsed pair. Returns an error message
// or empty.
inline std::string check_pair(const LabeledPair& p) {
  if (trim(p.id).empty()) return "empty id";
  if (trim(p.claim).empty()) return "blank claim";
  if (trim(p.text).empty()) return "blank text";
  return {};
}

// All pairs of one dataset share a label taxonomy; the first valid record
// fixes it.
inline std::string check_taxonomy(const LabeledPair& p, std::optional<std::size_t>& taxonomy) {
  if (!taxonomy) {
    taxonomy = p.label.index();
    return {};
  }
  if (*taxonomy != p.label.index()) return "label '" + to_string(p.label) + "' mixes label taxonomies";
  return {};
}

inline std::optional<PairLabel> label_from_json(const nlohmann::json& v) {
  if (v.is_number_integer()) {
    const auto code = v.get<long long>();
    if (code >= 0 && code <= 2) return PairLabel{static_cast<EntailLabel>(code)};
    return std::nullopt;
  }
  if (v.is_string()) return parse_pair_label(v.get<std::string>());
  return std::nullopt;
}

inline std::string json_string_field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ValidationError(std::string("field '") + key + "' must be a string");
}

}  // namespace detail

// Parses pair records from JSON-lines text. Field "text" may be given as
// "evidence" for raw FEVER exports.
inline LoadResult<LabeledPair> parse_pairs_jsonl(std::string_view content) {
  LoadResult<LabeledPair> out;
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> taxonomy;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw ValidationError("record is not a JSON object");
      LabeledPair p;
      p.id = detail::json_string_field(obj, "id");
      p.claim = detail::json_string_field(obj, "claim");
      p.text = obj.contains("text") ? detail::json_string_field(obj, "text")
                                    : detail::json_string_field(obj, "evidence");
      auto lab = obj.find("label");
      if (lab == obj.end()) throw ValidationError("missing label");
      auto parsed = detail::label_from_json(*lab);
      if (!parsed) throw ValidationError("unknown label " + lab->dump());
      p.label = *parsed;
      p.claim_lang = detail::json_string_field(obj, "claim_lang");
      p.text_lang = detail::json_string_field(obj, "text_lang");
      p.source = detail::json_string_field(obj, "source");
      if (auto msg = detail::check_pair(p); !msg.empty()) throw ValidationError(msg);
      if (auto msg = detail::check_taxonomy(p, taxonomy); !msg.empty()) throw ValidationError(msg);
      if (!seen.insert(p.id).second) throw ValidationError("duplicate id '" + p.id + "'");
      out.records.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back({line_no, std::string("malformed JSON: ") + e.what()});
    } catch (const ValidationError& e) {
      out.errors.push_back({line_no, e.what()});
    }
  }
  return out;
}

inline LoadResult<LabeledPair> parse_pairs_csv(std::string_view content) {
  LoadResult<LabeledPair> out;
  std::vector<csv::Row> rows;
  try {
    rows = csv::parse(content);
  } catch (const ValidationError& e) {
    out.errors.push_back({0, e.what()});
    return out;
  }
  if (rows.empty()) return out;
  const csv::Header header(rows.front());
  for (const char* col : {"id", "claim", "text", "label"}) {
    if (!header.has(col)) {
      out.errors.push_back({rows.front().line, std::string("missing column '") + col + "'"});
      return out;
    }
  }
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> taxonomy;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    LabeledPair p;
    p.id = header.get(row, "id");
    p.claim = header.get(row, "claim");
    p.text = header.get(row, "text");
    p.claim_lang = header.get(row, "claim_lang");
    p.text_lang = header.get(row, "text_lang");
    p.source = header.get(row, "source");
    const auto label_token = header.get(row, "label");
    auto parsed = parse_pair_label(label_token);
    std::string msg;
    if (!parsed)
      msg = "unknown label '" + label_token + "'";
    else
      p.label = *parsed;
    if (msg.empty()) msg = detail::check_pair(p);
    if (msg.empty()) msg = detail::check_taxonomy(p, taxonomy);
    if (msg.empty() && !seen.insert(p.id).second) msg = "duplicate id '" + p.id + "'";
    if (!msg.empty()) {
      out.errors.push_back({row.line, msg});
      continue;
    }
    out.records.push_back(std::move(p));
  }
  return out;
}

inline LoadResult<Verdict> parse_verdicts_csv(std::string_view content) {
  LoadResult<Verdict> out;
  std::vector<csv::Row> rows;
  try {
    rows = csv::parse(content);
  } catch (const ValidationError& e) {
    out.errors.push_back({0, e.what()});
    return out;
  }
  if (rows.empty()) return out;
  const csv::Header header(rows.front());
  for (const char* col : {"id", "date", "verdict_text", "category"}) {
    if (!header.has(col)) {
      out.errors.push_back({rows.front().line, std::string("missing column '") + col + "'"});
      return out;
    }
  }
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    Verdict v;
    v.id = header.get(row, "id");
    v.date = header.get(row, "date");
    v.verdict_text = header.get(row, "verdict_text");
    v.party = header.get(row, "party");
    v.source = header.get(row, "source");
    std::string msg;
    auto ts = parse_iso8601(v.date);
    auto cat = canonical_verdict_category(header.get(row, "category"));
    if (trim(v.id).empty())
      msg = "empty id";
    else if (!ts)
      msg = "unparseable date '" + v.date + "'";
    else if (trim(v.verdict_text).empty())
      msg = "blank verdict_text";
    else if (!cat)
      msg = "unknown category '" + header.get(row, "category") + "'";
    else if (!seen.insert(v.id).second)
      msg = "duplicate id '" + v.id + "'";
    if (!msg.empty()) {
      out.errors.push_back({row.line, msg});
      continue;
    }
    v.timestamp = *ts;
    v.category = *cat;
    out.records.push_back(std::move(v));
  }
  return out;
}

inline std::string read_utf8_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ValidationError("cannot read file: " + path.string());
  std::string content = read_file(path);
  if (!valid_utf8(content)) throw ValidationError("file is not valid UTF-8: " + path.string());
  return content;
}

inline LoadResult<LabeledPair> load_pairs(const std::filesystem::path& path, DatasetFormat format) {
  const std::string content = read_utf8_file(path);
  switch (format) {
    case DatasetFormat::FeverJsonl: return parse_pairs_jsonl(content);
    case DatasetFormat::PairsCsv: return parse_pairs_csv(content);
    case DatasetFormat::VerdictsCsv: break;
  }
  throw ValidationError("format verdicts-csv does not hold pairs; use load_verdicts");
}

inline LoadResult<Verdict> load_verdicts(const std::filesystem::path& path) {
  return parse_verdicts_csv(read_utf8_file(path));
}

// Canonical JSON-lines serialization; load_pairs reads it back unchanged.
inline nlohmann::json to_json(const LabeledPair& p) {
  nlohmann::json j;
  j["id"] = p.id;
  j["claim"] = p.claim;
  j["text"] = p.text;
  j["label"] = to_string(p.label);
  j["claim_lang"] = p.claim_lang;
  j["text_lang"] = p.text_lang;
  j["source"] = p.source;
  return j;
}

inline std::string serialize_pairs_jsonl(const std::vector<LabeledPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_verdicts_csv(const std::vector<Verdict>& verdicts) {
  std::string out;
  csv::append_row(out, {"id", "date", "verdict_text", "category", "party", "source"});
  for (const auto& v : verdicts) csv::append_row(out, {v.id, v.date, v.verdict_text, v.category, v.party, v.source});
  return out;
}

// ---------------------------------------------------------------------------
// Multilingual expansion

// Combination tags in output order: (claim language, text language).
inline constexpr std::array<std::string_view, 4> kCombinationTags = {"aa", "ab", "ba", "bb"};
inline constexpr char kCombinationSeparator = '#';

// Every claim/text language combination of two aligned datasets. Output ids
// are "<id>#<tag>"; the four variants of a source pair are contiguous.
inline std::vector<LabeledPair> expand_multilingual(const std::vector<LabeledPair>& pairs_a,
                                                    const std::vector<LabeledPair>& pairs_b) {
  if (pairs_a.size() != pairs_b.size())
    throw ValidationError("id mismatch: inputs hold " + std::to_string(pairs_a.size()) + " and " +
                          std::to_string(pairs_b.size()) + " pairs");
  std::unordered_map<std::string_view, const LabeledPair*> by_id;
  by_id.reserve(pairs_b.size());
  for (const auto& b : pairs_b) by_id.emplace(b.id, &b);

  std::vector<LabeledPair> out;
  out.reserve(pairs_a.size() * 4);
  for (const auto& a : pairs_a) {
    auto it = by_id.find(a.id);
    if (it == by_id.end()) throw ValidationError("id mismatch: '" + a.id + "' missing from second input");
    const LabeledPair& b = *it->second;
    if (!(a.label == b.label)) throw ValidationError("label disagreement for id '" + a.id + "'");
    const std::array<std::pair<const LabeledPair*, const LabeledPair*>, 4> combos = {
        std::pair{&a, &a}, std::pair{&a, &b}, std::pair{&b, &a}, std::pair{&b, &b}};
    for (std::size_t c = 0; c < combos.size(); ++c) {
      const auto [claim_src, text_src] = combos[c];
      LabeledPair p;
      p.id = a.id + kCombinationSeparator + std::string(kCombinationTags[c]);
      p.claim = claim_src->claim;
      p.claim_lang = claim_src->claim_lang;
      p.text = text_src->text;
      p.text_lang = text_src->text_lang;
      p.label = a.label;
      p.source = a.source;
      out.push_back(std::move(p));
    }
  }
  return out;
}

// Id of the source pair an expanded pair came from; other ids pass through.
inline std::string_view source_group_id(std::string_view id) {
  if (id.size() >= 3 && id[id.size() - 3] == kCombinationSeparator) {
    const auto tag = id.substr(id.size() - 2);
    for (auto t : kCombinationTags)
      if (tag == t) return id.substr(0, id.size() - 3);
  }
  return id;
}

// ---------------------------------------------------------------------------
// Folds

// k-fold splits over a seeded permutation. Pairs that came from the same
// multilingual source pair share a fold; fold sizes (in groups) differ by at
// most one.
inline std::vector<DatasetSplit> make_folds(const std::vector<LabeledPair>& pairs, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k must be at least 2");
  std::vector<std::string_view> group_order;
  std::unordered_map<std::string_view, std::size_t> group_index;
  std::vector<std::size_t> group_of(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto g = source_group_id(pairs[i].id);
    auto [it, inserted] = group_index.emplace(g, group_order.size());
    if (inserted) group_order.push_back(g);
    group_of[i] = it->second;
  }
  const std::size_t n_groups = group_order.size();
  if (n_groups < static_cast<std::size_t>(k))
    throw ValidationError("too few pairs for " + std::to_string(k) + " folds");

  std::vector<std::size_t> perm(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);

  // First (n mod k) folds take one extra group.
  std::vector<int> fold_of_group(n_groups);
  const std::size_t base = n_groups / k, extra = n_groups % k;
  std::size_t cursor = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fold_of_group[perm[cursor++]] = f;
  }

  std::vector<DatasetSplit> splits(k);
  for (int f = 0; f < k; ++f) splits[f].fold_index = f + 1;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int f = fold_of_group[group_of[i]];
    for (int s = 0; s < k; ++s) (s == f ? splits[s].test : splits[s].train).push_back(pairs[i]);
  }
  return splits;
}

// ---------------------------------------------------------------------------
// Chronological splits

struct ChronologicalSplits {
  std::vector<std::vector<Verdict>> train_sets;  // one per requested size
  std::vector<Verdict> test;
};

// Orders verdicts by timestamp (stable on ties); the test set is the
// `test_size` most recent, each train set the `sizes[i]` earliest.
inline ChronologicalSplits chronological_prefix_splits(const std::vector<Verdict>& verdicts,
                                                       const std::vector<std::size_t>& sizes,
                                                       std::size_t test_size) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ValidationError("train sizes must be positive");
    if (i && sizes[i] <= sizes[i - 1]) throw ValidationError("train sizes must be strictly ascending");
  }
  const std::size_t largest = sizes.empty() ? 0 : sizes.back();
  if (largest + test_size > verdicts.size())
    throw ValidationError("insufficient data: need " + std::to_string(largest + test_size) + " verdicts, have " +
                          std::to_string(verdicts.size()));

  std::vector<const Verdict*> order;
  order.reserve(verdicts.size());
  for (const auto& v : verdicts) order.push_back(&v);
  std::stable_sort(order.begin(), order.end(),
                   [](const Verdict* a, const Verdict* b) { return a->timestamp < b->timestamp; });

  ChronologicalSplits out;
  for (std::size_t size : sizes) {
    std::vector<Verdict> train;
    train.reserve(size);
    for (std::size_t i = 0; i < size; ++i) train.push_back(*order[i]);
    out.train_sets.push_back(std::move(train));
  }
  for (std::size_t i = order.size() - test_size; i < order.size(); ++i) out.test.push_back(*order[i]);
  return out;
}

}  // namespace claimkit
