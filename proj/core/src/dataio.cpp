#include "casner/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "casner/errors.hpp"
#include "casner/hash.hpp"
#include "casner/metrics.hpp"
#include "casner/utf8.hpp"

namespace casner {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSONL corpus
// ---------------------------------------------------------------------------

std::string corpus_record_json(const AnnotatedSentence& rec) {
  json j;
  j["id"] = rec.sentence.id;
  j["language"] = rec.sentence.language;
  j["text"] = rec.sentence.text;
  json ents = json::array();
  auto sorted = rec.entities;
  std::sort(sorted.begin(), sorted.end(), [](const Entity& a, const Entity& b) {
    return a.span < b.span;
  });
  for (const auto& e : sorted) {
    json ej;
    ej["start"] = e.span.start;
    ej["end"] = e.span.end;
    if (e.label.is_unknown()) {
      ej["label"] = "unknown";
      ej["level"] = "unknown";
    } else {
      ej["label"] = e.label.name();
      ej["level"] = level_name(e.label.level());
    }
    ents.push_back(std::move(ej));
  }
  j["entities"] = std::move(ents);
  j["type_list"] = rec.type_list.names;
  j["allow_unknown"] = rec.type_list.allow_unknown;
  return j.dump();
}

AnnotatedSentence corpus_record_from_json(const std::string& line,
                                          std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ParseError("record is not a JSON object", lineno);
  AnnotatedSentence rec;
  try {
    rec.sentence.id = j.at("id").get<std::string>();
    rec.sentence.text = j.at("text").get<std::string>();
    rec.sentence.language = j.value("language", std::string("other"));
    rec.type_list.names =
        j.value("type_list", std::vector<std::string>{});
    rec.type_list.allow_unknown = j.value("allow_unknown", false);
    for (const auto& ej : j.value("entities", json::array())) {
      Entity e;
      e.span.start = ej.at("start").get<std::size_t>();
      e.span.end = ej.at("end").get<std::size_t>();
      const std::string level = ej.value("level", std::string("flat"));
      if (level == "unknown") {
        e.label = Label::unknown();
      } else {
        e.label = Label(ej.at("label").get<std::string>(),
                        level_from_name(level));
      }
      if (e.span.start >= e.span.end)
        throw ValidationError("entity range [" + std::to_string(e.span.start) +
                              ", " + std::to_string(e.span.end) +
                              ") is empty or inverted" +
                              (lineno ? " at line " + std::to_string(lineno)
                                      : ""));
      if (e.span.end > utf8::length(rec.sentence.text))
        throw ValidationError(
            "entity range ends past the sentence text" +
            (lineno ? " at line " + std::to_string(lineno) : ""));
      e.span.surface = utf8::slice(rec.sentence.text, e.span.start, e.span.end);
      rec.entities.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("malformed record: ") + ex.what(), lineno);
  }
  return rec;
}

std::vector<AnnotatedSentence> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file " + path.string());
  std::vector<AnnotatedSentence> ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ds.push_back(corpus_record_from_json(line, lineno));
  }
  return ds;
}

void write_corpus(std::span<const AnnotatedSentence> ds,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write corpus file " + path.string());
  for (const auto& rec : ds) out << corpus_record_json(rec) << '\n';
}

// ---------------------------------------------------------------------------
// CoNLL BIO
// ---------------------------------------------------------------------------

namespace {

struct ConllToken {
  std::string token;
  std::string tag;
};

AnnotatedSentence sentence_from_tokens(const std::vector<ConllToken>& tokens,
                                       std::size_t index, bool lenient,
                                       const std::string& language,
                                       std::size_t lineno) {
  AnnotatedSentence rec;
  rec.sentence.id = "conll-" + std::to_string(index);
  rec.sentence.language = language;

  std::vector<std::size_t> starts;  // scalar offset of each token
  std::string text;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) {
      text += ' ';
      ++offset;
    }
    starts.push_back(offset);
    text += tokens[i].token;
    offset += utf8::length(tokens[i].token);
  }
  rec.sentence.text = text;

  std::string open_type;
  std::size_t open_start = 0, open_end = 0;
  auto close = [&]() {
    if (open_type.empty()) return;
    rec.entities.push_back(
        {EntitySpan{open_start, open_end,
                    utf8::slice(text, open_start, open_end)},
         Label(open_type, LabelLevel::Flat)});
    open_type.clear();
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tag = tokens[i].tag;
    const std::size_t tok_end = starts[i] + utf8::length(tokens[i].token);
    if (tag == "O") {
      close();
    } else if (tag.rfind("B-", 0) == 0) {
      close();
      open_type = tag.substr(2);
      open_start = starts[i];
      open_end = tok_end;
    } else if (tag.rfind("I-", 0) == 0) {
      const std::string type = tag.substr(2);
      if (open_type == type) {
        open_end = tok_end;
      } else if (lenient) {  // stray I- promoted to B-
        close();
        open_type = type;
        open_start = starts[i];
        open_end = tok_end;
      } else {
        throw TagSequenceError("I-" + type + " without a matching B- tag (line " +
                               std::to_string(lineno - tokens.size() + i) + ")");
      }
    } else {
      throw TagSequenceError("unrecognized tag '" + tag + "'");
    }
  }
  close();

  std::set<std::string> names;
  for (const auto& e : rec.entities) names.insert(e.label.name());
  rec.type_list.names.assign(names.begin(), names.end());
  return rec;
}

}  // namespace

std::vector<AnnotatedSentence> read_conll(const std::filesystem::path& path,
                                          bool lenient,
                                          const std::string& language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open CoNLL file " + path.string());
  std::vector<AnnotatedSentence> ds;
  std::vector<ConllToken> tokens;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&]() {
    if (tokens.empty()) return;
    ds.push_back(sentence_from_tokens(tokens, ds.size() + 1, lenient, language,
                                      lineno));
    tokens.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) tab = line.find(' ');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError("expected 'token<TAB>tag'", lineno);
    tokens.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  flush();
  return ds;
}

void write_conll(std::span<const AnnotatedSentence> ds,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write CoNLL file " + path.string());
  for (const auto& rec : ds) {
    const std::u32string text = utf8::decode(rec.sentence.text);
    // Tokens are the maximal space-free runs; each carries its scalar offset.
    std::vector<std::pair<std::size_t, std::u32string>> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
      if (text[i] == U' ') {
        ++i;
        continue;
      }
      std::size_t start = i;
      std::u32string tok;
      while (i < text.size() && text[i] != U' ') tok.push_back(text[i++]);
      tokens.emplace_back(start, std::move(tok));
    }
    auto entities = rec.entities;
    std::sort(entities.begin(), entities.end(),
              [](const Entity& a, const Entity& b) { return a.span < b.span; });
    std::size_t next_entity = 0;
    const Entity* open = nullptr;
    for (const auto& [start, tok] : tokens) {
      const std::size_t end = start + tok.size();
      while (next_entity < entities.size() &&
             entities[next_entity].span.end <= start)
        ++next_entity;
      const Entity* cur = nullptr;
      if (next_entity < entities.size()) {
        const Entity& e = entities[next_entity];
        if (e.span.start < end && start < e.span.end) cur = &e;
      }
      std::string tag = "O";
      if (cur) {
        const std::string name =
            cur->label.is_unknown() ? "unknown" : cur->label.name();
        tag = (open == cur ? "I-" : "B-") + name;
      }
      open = cur;
      out << utf8::encode(tok) << '\t' << tag << '\n';
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stratified sampling
// ---------------------------------------------------------------------------

SampleResult stratified_sample(std::span<const AnnotatedSentence> ds,
                               std::uint64_t size, std::uint64_t seed) {
  // Label instances per category, each as (record index, entity index).
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> strata;
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t e = 0; e < ds[r].entities.size(); ++e)
      if (!ds[r].entities[e].label.is_unknown())
        strata[ds[r].entities[e].label.name()].push_back({r, e});

  SampleResult result;
  result.manifest.requested = size;
  result.manifest.categories = strata.size();
  result.manifest.seed = seed;
  if (strata.empty()) return result;

  const std::uint64_t per_stratum = size / strata.size();  // floor(S/m)
  std::vector<bool> selected(ds.size(), false);
  for (auto& [name, instances] : strata) {
    CategorySample cs;
    cs.available = instances.size();
    cs.quota = std::min<std::uint64_t>(per_stratum, instances.size());
    std::mt19937_64 rng(record_stream_seed(seed, name, 1));
    std::shuffle(instances.begin(), instances.end(), rng);
    for (std::uint64_t k = 0; k < cs.quota; ++k)
      selected[instances[static_cast<std::size_t>(k)].first] = true;
    cs.drawn = cs.quota;
    result.manifest.per_category[name] = cs;
  }
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (!selected[r]) continue;
    result.sample.push_back(ds[r]);
    for (const auto& e : ds[r].entities)
      if (!e.label.is_unknown())
        ++result.manifest.per_category[e.label.name()].effective;
  }
  result.manifest.sentence_count = result.sample.size();
  return result;
}

std::string sample_manifest_json(const SampleManifest& manifest) {
  json j;
  j["requested"] = manifest.requested;
  j["categories"] = manifest.categories;
  j["seed"] = manifest.seed;
  j["sentence_count"] = manifest.sentence_count;
  json per = json::object();
  for (const auto& [name, cs] : manifest.per_category)
    per[name] = {{"available", cs.available},
                 {"quota", cs.quota},
                 {"drawn", cs.drawn},
                 {"effective", cs.effective}};
  j["per_category"] = std::move(per);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

std::array<std::size_t, 3> apportion_sizes(std::size_t total,
                                           std::array<double, 3> ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (sum <= 0.0) throw ValidationError("split ratios must sum to a positive value");
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(total) * ratios[i] / sum;
    sizes[i] = static_cast<std::size_t>(quota);
    remainder[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  // Distribute leftovers by largest remainder; ties go to the earlier part.
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned)
    ++sizes[order[k % 3]];
  return sizes;
}

SplitResult split_dataset(std::span<const AnnotatedSentence> ds,
                          std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (r < 0.0) throw ValidationError("split ratios must be non-negative");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(splitmix64(seed ^ 0x5b1d5c0ffee0ull));
  std::shuffle(order.begin(), order.end(), rng);

  const auto sizes = apportion_sizes(ds.size(), ratios);
  SplitResult result;
  std::size_t cursor = 0;
  auto take = [&](std::size_t count) {
    std::vector<AnnotatedSentence> part;
    part.reserve(count);
    for (std::size_t k = 0; k < count; ++k) part.push_back(ds[order[cursor++]]);
    return part;
  };
  result.train = take(sizes[0]);
  result.dev = take(sizes[1]);
  result.test = take(sizes[2]);
  return result;
}

// ---------------------------------------------------------------------------
// Decontamination
// ---------------------------------------------------------------------------

DecontaminationResult decontaminate(std::span<const AnnotatedSentence> ds,
                                    std::span<const Sentence> reference,
                                    EmbeddingBackend& embeddings,
                                    double threshold) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw ValidationError("decontamination threshold must be in (0, 1]");
  DecontaminationResult result;
  if (ds.empty()) return result;
  if (reference.empty()) {
    result.kept.assign(ds.begin(), ds.end());
    return result;
  }
  std::vector<std::string> candidate_texts, reference_texts;
  for (const auto& rec : ds) candidate_texts.push_back(rec.sentence.text);
  for (const auto& s : reference) reference_texts.push_back(s.text);
  const auto candidate_vecs = embeddings.embed_texts(candidate_texts);
  const auto reference_vecs = embeddings.embed_texts(reference_texts);

  for (std::size_t i = 0; i < ds.size(); ++i) {
    double max_sim = -1.0;
    for (const auto& rv : reference_vecs)
      max_sim = std::max(max_sim, cosine_similarity(candidate_vecs[i], rv));
    if (max_sim > threshold) {
      result.excluded.push_back(ds[i]);
      result.excluded_scores.push_back(max_sim);
    } else {
      result.kept.push_back(ds[i]);
    }
  }
  return result;
}

}  // namespace casner
