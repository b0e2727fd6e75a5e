#pragma once

// Prompting external language models: prompt templates, a caching provider
// client, and parsers for entailment, verdict-category and content-treatment
// answers.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimkit/corpus.hpp"
#include "claimkit/csv.hpp"
#include "claimkit/error.hpp"
#include "claimkit/http.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

// ---------------------------------------------------------------------------
// Prompt templates. Placeholders are written <name>.

enum class TemplateId { EntailV1, EntailV2, VerdictCat, TreatmentV1 };

struct PromptTemplate {
  TemplateId id;
  std::string_view name;
  std::string_view language;
  std::string_view body;
};

inline constexpr std::string_view kEntailInstruction =
    "Data la seguente coppia FRASE e TESTO, dimmi se il TESTO supporta la FRASE, la confuta o non c'è abbastanza "
    "informazione per dirlo rispondendo con 0 (supporta), 1 (confuta), 2 (not enough info).";

inline constexpr std::array<PromptTemplate, 4> kPromptTemplates = {{
    {TemplateId::EntailV1, "entail_v1", "it",
     "FRASE: <frase>\n"
     "TESTO: <testo>\n"
     "Data la seguente coppia FRASE e TESTO, dimmi se il TESTO supporta la FRASE, la confuta o non c'è abbastanza "
     "informazione per dirlo rispondendo con 0 (supporta), 1 (confuta), 2 (not enough info). "
     "Esempio di output: 0 (supporta) il testo supporta la frase perché... "
     "Esempio di output: 1 (confuta) il testo confuta la frase perché... "
     "Esempio di output: 2 (not enough info) il testo..."},
    {TemplateId::EntailV2, "entail_v2", "it",
     "FRASE: <frase>\n"
     "TESTO: <testo>\n"
     "Data la seguente coppia FRASE e TESTO, dimmi se il TESTO supporta la FRASE, la confuta o non c'è abbastanza "
     "informazione per dirlo rispondendo con 0 (supporta), 1 (confuta), 2 (not enough info)."},
    {TemplateId::VerdictCat, "verdict_cat", "en",
     "This is a verdict regarding the debunking of a politician's claim: <verdict>. Based on the text of the "
     "verdict, categorize it by returning one of the following labels: true, false, partially true, inaccurate, "
     "exaggeration"},
    // Our own wording, versioned so later revisions stay comparable.
    {TemplateId::TreatmentV1, "treatment_v1", "en",
     "STATEMENT: <frase>\n"
     "CONTENT: <testo>\n"
     "Classify how the CONTENT handles the STATEMENT on three independent axes.\n"
     "orientation: Reinforcing (the content backs the statement), Confuting (the content contradicts it) or "
     "Neutral (it takes no side).\n"
     "subject: Direct (the publisher asserts it), Indirect (a third party is quoted asserting it) or Fiction (it "
     "comes from a fictional work such as a novel).\n"
     "argumentation: Explained (reasons for the position are given) or Shallow (no reasons are given).\n"
     "Answer with exactly three lines and nothing else:\n"
     "orientation: <Reinforcing|Confuting|Neutral>\n"
     "subject: <Direct|Indirect|Fiction>\n"
     "argumentation: <Explained|Shallow>"},
}};

inline const PromptTemplate& prompt_template(TemplateId id) {
  for (const auto& t : kPromptTemplates)
    if (t.id == id) return t;
  throw ValidationError("unknown template");
}

inline TemplateId parse_template_id(std::string_view name) {
  for (const auto& t : kPromptTemplates)
    if (t.name == name) return t.id;
  throw ValidationError("unknown template '" + std::string(name) + "'");
}

namespace detail {

// A placeholder is '<' + [a-z_]+ + '>'. Anything else is literal text (the
// treatment template's "<Reinforcing|...>" answer shapes included).
inline std::optional<std::size_t> placeholder_end(std::string_view body, std::size_t pos) {
  if (body[pos] != '<') return std::nullopt;
  std::size_t i = pos + 1;
  while (i < body.size() && ((body[i] >= 'a' && body[i] <= 'z') || body[i] == '_')) ++i;
  if (i == pos + 1 || i >= body.size() || body[i] != '>') return std::nullopt;
  return i + 1;
}

}  // namespace detail

// Placeholder names in order of appearance (with repeats).
inline std::vector<std::string> template_placeholders(std::string_view body) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i)
    if (auto end = detail::placeholder_end(body, i)) {
      out.emplace_back(body.substr(i + 1, *end - i - 2));
      i = *end - 1;
    }
  return out;
}

// Single pass over the template: bound text is inserted verbatim and never
// rescanned, so user text containing "<testo>" stays as is.
inline std::string render_template(std::string_view body, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(body.size() + 256);
  for (std::size_t i = 0; i < body.size();) {
    if (auto end = detail::placeholder_end(body, i)) {
      const std::string name(body.substr(i + 1, *end - i - 2));
      auto it = bindings.find(name);
      if (it == bindings.end()) throw ValidationError("missing binding for placeholder <" + name + ">");
      out += it->second;
      i = *end;
    } else {
      out.push_back(body[i++]);
    }
  }
  return out;
}

inline std::string build_prompt(TemplateId id, const std::map<std::string, std::string>& bindings) {
  return render_template(prompt_template(id).body, bindings);
}

inline std::string build_entailment_prompt(TemplateId id, std::string_view claim, std::string_view text) {
  return build_prompt(id, {{"frase", std::string(claim)}, {"testo", std::string(text)}});
}

inline std::string build_treatment_prompt(std::string_view statement, std::string_view content) {
  return build_prompt(TemplateId::TreatmentV1, {{"frase", std::string(statement)}, {"testo", std::string(content)}});
}

// ---------------------------------------------------------------------------
// Provider client

struct ProviderConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string model;
  std::string auth_env;  // name of the environment variable holding the bearer token
  double temperature = 0.0;
  int max_retries = 2;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  int max_concurrent = 4;

  void validate() const {
    if (endpoint.empty()) throw ValidationError("provider endpoint is empty");
    http::split_url(endpoint);
    if (model.empty()) throw ValidationError("provider model is empty");
    if (max_retries < 0) throw ValidationError("max_retries must be non-negative");
    if (max_concurrent < 1) throw ValidationError("max_concurrent must be at least 1");
  }
};

inline ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  c.endpoint = j.at("endpoint").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.auth_env = j.value("auth_env", std::string{});
  c.temperature = j.value("temperature", 0.0);
  c.max_retries = j.value("max_retries", 2);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
  c.backoff = std::chrono::milliseconds(j.value("backoff_ms", 500));
  c.max_concurrent = j.value("max_concurrent", 4);
  c.validate();
  return c;
}

// One file per key: <dir>/<hex> holds the verbatim response body and
// <dir>/<hex>.json the metadata sidecar.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string key(std::string_view model, std::string_view prompt) {
    std::string material(model);
    material.push_back('\0');
    material.append(prompt);
    return sha256_hex(material);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<std::string> get(const std::string& key) const {
    const auto path = dir_ / key;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    return read_file(path);
  }

  void put(const std::string& key, std::string_view body, std::string_view model, std::string_view prompt) {
    std::lock_guard lock(stripes_[std::hash<std::string>{}(key) % stripes_.size()]);
    std::filesystem::create_directories(dir_);
    const nlohmann::json meta{{"model", model}, {"timestamp", utc_now()}, {"prompt_sha256", sha256_hex(prompt)}};
    // Write-then-rename so concurrent readers never see a partial file.
    const auto tmp = dir_ / (key + ".tmp");
    write_file(tmp, body);
    std::filesystem::rename(tmp, dir_ / key);
    write_file(dir_ / (key + ".json"), meta.dump(2) + "\n");
  }

  static std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

 private:
  std::filesystem::path dir_;
  std::array<std::mutex, 16> stripes_;
};

// Text of the first choice of a chat-completion payload.
inline std::string extract_completion_text(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& choice = j.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("malformed provider payload");
  }
}

struct QueryResult {
  std::string text;  // model answer
  bool from_cache = false;
};

// Chat-completion client with a verbatim response cache. `network_calls()`
// counts HTTP attempts, retries included.
class ProviderClient {
 public:
  ProviderClient(ProviderConfig config, ResponseCache* cache) : config_(std::move(config)), cache_(cache) {
    config_.validate();
  }

  const ProviderConfig& config() const { return config_; }
  std::size_t network_calls() const { return network_calls_.load(); }

  QueryResult query(const std::string& prompt) {
    const std::string key = ResponseCache::key(config_.model, prompt);
    if (cache_)
      if (auto hit = cache_->get(key)) return {extract_completion_text(*hit), true};

    const std::string body = fetch(prompt);
    std::string text = extract_completion_text(body);  // malformed payloads are never cached
    if (cache_) cache_->put(key, body, config_.model, prompt);
    return {std::move(text), false};
  }

  // Answers in input order, at most min(jobs, max_concurrent) requests in
  // flight.
  std::vector<QueryResult> query_batch(const std::vector<std::string>& prompts, unsigned jobs = 1) {
    std::vector<QueryResult> out(prompts.size());
    const unsigned width = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(config_.max_concurrent)));
    parallel_for(prompts.size(), width, [&](std::size_t i) { out[i] = query(prompts[i]); });
    return out;
  }

 private:
  std::string fetch(const std::string& prompt) {
    const nlohmann::json request{{"model", config_.model},
                                 {"messages", {{{"role", "user"}, {"content", prompt}}}},
                                 {"temperature", config_.temperature}};
    const std::string payload = request.dump();
    std::vector<std::pair<std::string, std::string>> headers;
    if (!config_.auth_env.empty())
      if (const char* token = std::getenv(config_.auth_env.c_str()))
        headers.emplace_back("Authorization", std::string("Bearer ") + token);

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      ++network_calls_;
      http::Response res;
      try {
        res = http::post_json(config_.endpoint, payload, config_.timeout, headers);
      } catch (const TransportError& e) {
        last_error = e.what();
        continue;
      }
      if (res.status >= 200 && res.status < 300) return res.body;
      last_error = "provider answered HTTP " + std::to_string(res.status);
      if (res.status != 429 && res.status < 500) break;
    }
    throw TransportError(last_error + " (" + config_.endpoint + ")");
  }

  ProviderConfig config_;
  ResponseCache* cache_;
  std::atomic<std::size_t> network_calls_{0};
};

inline std::string query_provider(const ProviderConfig& provider, const std::string& prompt, ResponseCache* cache) {
  ProviderClient client(provider, cache);
  return client.query(prompt).text;
}

// ---------------------------------------------------------------------------
// Entailment answers

struct EntailmentAnswer {
  EntailLabel label = EntailLabel::NotEnoughInfo;
  std::string rationale;  // text after the label digit, trimmed
};

// First digit 0, 1 or 2 that has no digit neighbour, scanning left to right.
inline EntailmentAnswer parse_entailment_response(std::string_view raw) {
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!is_digit(raw[i])) continue;
    std::size_t j = i;
    while (j < raw.size() && is_digit(raw[j])) ++j;
    if (j - i == 1 && raw[i] <= '2') return {static_cast<EntailLabel>(raw[i] - '0'), std::string(trim(raw.substr(i + 1)))};
    i = j - 1;
  }
  throw UnparseableResponseError("no standalone 0/1/2 label in response", std::string(raw));
}

// ---------------------------------------------------------------------------
// Verdict categories

enum class VerdictCategory { True, False, PartiallyTrue, Inaccurate, Exaggeration };

inline constexpr std::array<std::pair<VerdictCategory, std::string_view>, 5> kVerdictCategoryNames = {{
    {VerdictCategory::True, "true"},
    {VerdictCategory::False, "false"},
    {VerdictCategory::PartiallyTrue, "partially true"},
    {VerdictCategory::Inaccurate, "inaccurate"},
    {VerdictCategory::Exaggeration, "exaggeration"},
}};

inline std::string_view to_string(VerdictCategory c) {
  for (const auto& [cat, name] : kVerdictCategoryNames)
    if (cat == c) return name;
  return "?";
}

// Five-way category of a fact-checking label, when it has one.
inline std::optional<VerdictCategory> prompt_category_of(std::string_view dataset_category) {
  const auto canon = canonical_verdict_category(dataset_category);
  if (!canon) return std::nullopt;
  if (*canon == "VERO") return VerdictCategory::True;
  if (*canon == "FALSO") return VerdictCategory::False;
  if (*canon == "RAGIONE A METÀ") return VerdictCategory::PartiallyTrue;
  if (*canon == "IMPRECISIONE") return VerdictCategory::Inaccurate;
  if (*canon == "ESAGERAZIONE") return VerdictCategory::Exaggeration;
  return std::nullopt;
}

// Earliest category mention, case-insensitive and on word boundaries; at a
// given position the longest name wins.
inline VerdictCategory parse_verdict_category(std::string_view raw) {
  const std::string text = ascii_lower(raw);
  auto is_letter = [](char c) { return (c >= 'a' && c <= 'z') || static_cast<unsigned char>(c) >= 0x80; };
  std::array<std::pair<VerdictCategory, std::string_view>, 5> by_length = kVerdictCategoryNames;
  std::stable_sort(by_length.begin(), by_length.end(),
                   [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    if (pos > 0 && is_letter(text[pos - 1])) continue;
    for (const auto& [cat, name] : by_length) {
      if (text.compare(pos, name.size(), name) != 0) continue;
      const std::size_t end = pos + name.size();
      if (end < text.size() && is_letter(text[end])) continue;
      return cat;
    }
  }
  throw UnparseableResponseError("no verdict category in response", std::string(raw));
}

inline std::string build_verdict_prompt(std::string_view verdict_text) {
  return build_prompt(TemplateId::VerdictCat, {{"verdict", std::string(verdict_text)}});
}

// ---------------------------------------------------------------------------
// Content treatment

enum class Orientation { Reinforcing, Confuting, Neutral };
enum class Subject { Direct, Indirect, Fiction };
enum class Argumentation { Explained, Shallow };

struct TreatmentLabel {
  Orientation orientation = Orientation::Neutral;
  Subject subject = Subject::Direct;
  Argumentation argumentation = Argumentation::Shallow;

  friend bool operator==(const TreatmentLabel&, const TreatmentLabel&) = default;
};

inline constexpr std::array<std::string_view, 3> kOrientationNames = {"Reinforcing", "Confuting", "Neutral"};
inline constexpr std::array<std::string_view, 3> kSubjectNames = {"Direct", "Indirect", "Fiction"};
inline constexpr std::array<std::string_view, 2> kArgumentationNames = {"Explained", "Shallow"};

inline std::string_view to_string(Orientation v) { return kOrientationNames[static_cast<int>(v)]; }
inline std::string_view to_string(Subject v) { return kSubjectNames[static_cast<int>(v)]; }
inline std::string_view to_string(Argumentation v) { return kArgumentationNames[static_cast<int>(v)]; }

namespace detail {

template <std::size_t N>
std::optional<int> closed_set_index(const std::array<std::string_view, N>& names, std::string_view value) {
  const std::string v = ascii_lower(value);
  for (std::size_t i = 0; i < N; ++i)
    if (ascii_lower(names[i]) == v) return static_cast<int>(i);
  return std::nullopt;
}

inline std::string_view strip_decoration(std::string_view s) {
  s = trim(s);
  auto strip = [](char c) {
    return is_space(c) || c == '*' || c == '_' || c == '"' || c == '\'' || c == '`' || c == '-' || c == '.';
  };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && strip(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::optional<Orientation> parse_orientation(std::string_view s) {
  if (auto i = detail::closed_set_index(kOrientationNames, detail::strip_decoration(s))) return static_cast<Orientation>(*i);
  return std::nullopt;
}
inline std::optional<Subject> parse_subject(std::string_view s) {
  if (auto i = detail::closed_set_index(kSubjectNames, detail::strip_decoration(s))) return static_cast<Subject>(*i);
  return std::nullopt;
}
inline std::optional<Argumentation> parse_argumentation(std::string_view s) {
  if (auto i = detail::closed_set_index(kArgumentationNames, detail::strip_decoration(s)))
    return static_cast<Argumentation>(*i);
  return std::nullopt;
}

// Reads "orientation: X", "subject: Y", "argumentation: Z" lines (any case,
// any order); the first line for each stratum counts.
inline TreatmentLabel parse_treatment_response(std::string_view raw) {
  std::optional<Orientation> o;
  std::optional<Subject> s;
  std::optional<Argumentation> a;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    const std::string_view line = raw.substr(pos, end - pos);
    pos = end + 1;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = ascii_lower(detail::strip_decoration(line.substr(0, colon)));
    const std::string_view value = line.substr(colon + 1);
    auto unknown = [&](const char* stratum) {
      return UnparseableResponseError(std::string("unknown ") + stratum + " value '" +
                                          std::string(detail::strip_decoration(value)) + "'",
                                      std::string(raw));
    };
    if (key == "orientation" && !o) {
      if (!(o = parse_orientation(value))) throw unknown("orientation");
    } else if (key == "subject" && !s) {
      if (!(s = parse_subject(value))) throw unknown("subject");
    } else if (key == "argumentation" && !a) {
      if (!(a = parse_argumentation(value))) throw unknown("argumentation");
    }
  }
  if (!o) throw UnparseableResponseError("missing stratum 'orientation'", std::string(raw));
  if (!s) throw UnparseableResponseError("missing stratum 'subject'", std::string(raw));
  if (!a) throw UnparseableResponseError("missing stratum 'argumentation'", std::string(raw));
  return {*o, *s, *a};
}

// ---------------------------------------------------------------------------
// Clarity check

struct ClarityResult {
  EntailLabel label = EntailLabel::NotEnoughInfo;
  std::string rationale;
  bool insufficient_explanation = false;
};

// Asks whether `explanation` entails `statement`. A verdict that asserts
// support or refutation but whose explanation comes back NotEnoughInfo is
// flagged.
inline ClarityResult clarity_check(std::string_view statement, std::string_view explanation, ProviderClient& client,
                                   EntailLabel asserted = EntailLabel::Supported) {
  const auto prompt = build_entailment_prompt(TemplateId::EntailV1, statement, explanation);
  const auto answer = parse_entailment_response(client.query(prompt).text);
  ClarityResult out;
  out.label = answer.label;
  out.rationale = answer.rationale;
  out.insufficient_explanation =
      asserted != EntailLabel::NotEnoughInfo && answer.label == EntailLabel::NotEnoughInfo;
  return out;
}

// ---------------------------------------------------------------------------
// Prediction files of externally trained models: CSV {id,label}.

enum class LabelTaxonomy { Entailment, Similarity };

struct Prediction {
  std::string id;
  int label = 0;
};

inline int parse_prediction_label(std::string_view token, LabelTaxonomy taxonomy) {
  if (taxonomy == LabelTaxonomy::Entailment) {
    if (auto l = parse_entail_label(token)) return static_cast<int>(*l);
  } else {
    const auto t = trim(token);
    if (t == "0") return 0;
    if (t == "1") return 1;
    if (auto l = parse_sim_label(token)) return static_cast<int>(*l);
  }
  throw ValidationError("unknown label '" + std::string(token) + "'");
}

// Rows must align with `expected_ids` (the split the predictions are for):
// same count, and when ids are given, the same ids in the same order.
inline std::vector<Prediction> parse_predictions(std::string_view content, LabelTaxonomy taxonomy,
                                                 const std::vector<std::string>& expected_ids) {
  const auto rows = csv::parse(content);
  std::vector<Prediction> out;
  if (!rows.empty()) {
    const csv::Header header(rows.front());
    const std::size_t id_col = header.at("id"), label_col = header.at("label");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& f = rows[r].fields;
      if (f.size() <= std::max(id_col, label_col))
        throw ValidationError("line " + std::to_string(rows[r].line) + ": missing fields");
      try {
        out.push_back({f[id_col], parse_prediction_label(f[label_col], taxonomy)});
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(rows[r].line) + ": " + e.what());
      }
    }
  }
  if (out.size() != expected_ids.size())
    throw ValidationError("count mismatch: " + std::to_string(out.size()) + " predictions for a split of " +
                          std::to_string(expected_ids.size()));
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!expected_ids[i].empty() && out[i].id != expected_ids[i])
      throw ValidationError("prediction row " + std::to_string(i + 1) + " has id '" + out[i].id + "', split has '" +
                            expected_ids[i] + "'");
  return out;
}

inline std::vector<Prediction> ingest_predictions(const std::filesystem::path& path, LabelTaxonomy taxonomy,
                                                  const std::vector<std::string>& expected_ids) {
  return parse_predictions(read_utf8_file(path), taxonomy, expected_ids);
}

inline std::string predictions_to_csv(const std::vector<Prediction>& preds) {
  std::string out;
  csv::append_row(out, {"id", "label"});
  for (const auto& p : preds) csv::append_row(out, {p.id, std::to_string(p.label)});
  return out;
}

}  // namespace claimkit
