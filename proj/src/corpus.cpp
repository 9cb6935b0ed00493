#include "cosd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace cosd {
namespace {

namespace fs = std::filesystem;

// NLTK English list plus the retweet marker.
constexpr std::string_view kStopwords[] = {
    "i",          "me",       "my",      "myself",  "we",       "our",     "ours",
    "ourselves",  "you",      "your",    "yours",   "yourself", "yourselves", "he",
    "him",        "his",      "himself", "she",     "her",      "hers",    "herself",
    "it",         "its",      "itself",  "they",    "them",     "their",   "theirs",
    "themselves", "what",     "which",   "who",     "whom",     "this",    "that",
    "these",      "those",    "am",      "is",      "are",      "was",     "were",
    "be",         "been",     "being",   "have",    "has",      "had",     "having",
    "do",         "does",     "did",     "doing",   "a",        "an",      "the",
    "and",        "but",      "if",      "or",      "because",  "as",      "until",
    "while",      "of",       "at",      "by",      "for",      "with",    "about",
    "against",    "between",  "into",    "through", "during",   "before",  "after",
    "above",      "below",    "to",      "from",    "up",       "down",    "in",
    "out",        "on",       "off",     "over",    "under",    "again",   "further",
    "then",       "once",     "here",    "there",   "when",     "where",   "why",
    "how",        "all",      "any",     "both",    "each",     "few",     "more",
    "most",       "other",    "some",    "such",    "no",       "nor",     "not",
    "only",       "own",      "same",    "so",      "than",     "too",     "very",
    "s",          "t",        "can",     "will",    "just",     "don",     "should",
    "now",        "d",        "ll",      "m",       "o",        "re",      "ve",
    "y",          "ain",      "aren",    "couldn",  "didn",     "doesn",   "hadn",
    "hasn",       "haven",    "isn",     "ma",      "mightn",   "mustn",   "needn",
    "shan",       "shouldn",  "wasn",    "weren",   "won",      "wouldn",  "rt",
};

const std::unordered_set<std::string_view>& stopword_set() {
  static const std::unordered_set<std::string_view> set(std::begin(kStopwords),
                                                        std::end(kStopwords));
  return set;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != prefix[i]) return false;
  }
  return true;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Blanks out URLs and @-mentions up to the next whitespace.
std::string strip_urls_mentions(std::string_view text) {
  std::string out(text);
  std::size_t i = 0;
  while (i < out.size()) {
    const bool token_start = i == 0 || is_space(out[i - 1]);
    const bool url = starts_with_ci(out, i, "http://") || starts_with_ci(out, i, "https://") ||
                     starts_with_ci(out, i, "www.");
    const bool mention = out[i] == '@';
    if ((url && token_start) || mention) {
      while (i < out.size() && !is_space(out[i])) out[i++] = ' ';
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

TsvTable read_tsv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  TsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (table.header.empty()) {
      table.header = std::move(cols);
      continue;
    }
    if (cols.size() != table.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " columns, got " +
                       std::to_string(cols.size()));
    }
    table.rows.push_back(std::move(cols));
    table.line_numbers.push_back(line_no);
  }
  if (table.rows.empty()) throw ParseError("no rows in " + path.string());
  return table;
}

std::optional<std::size_t> column(const TsvTable& t, std::string_view name) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (lower(t.header[i]) == lower(name)) return i;
  }
  return std::nullopt;
}

std::size_t require_column(const TsvTable& t, std::string_view name, const fs::path& path) {
  if (auto c = column(t, name)) return *c;
  throw ParseError(path.string() + ": missing column '" + std::string(name) + "'");
}

Stance require_stance(std::string_view raw, const fs::path& path, std::size_t line) {
  if (auto s = parse_stance(raw)) return *s;
  throw ParseError(path.string() + ":" + std::to_string(line) + ": unknown stance '" +
                   std::string(raw) + "'");
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<fs::path> find_named(const fs::path& dir, std::string_view needle) {
  for (const auto& f : sorted_files(dir)) {
    const std::string name = lower(f.filename().string());
    const std::string ext = lower(f.extension().string());
    if (name.find(needle) != std::string::npos && (ext == ".tsv" || ext == ".txt")) return f;
  }
  return std::nullopt;
}

bool less_ci(const std::string& a, const std::string& b) {
  const std::string la = lower(a), lb = lower(b);
  return la != lb ? la < lb : a < b;
}

}  // namespace

bool is_stopword(std::string_view token) { return stopword_set().count(token) > 0; }

std::vector<std::string> tokenize(std::string_view text) {
  const std::string cleaned = strip_urls_mentions(text);
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() > 1 && !is_stopword(cur) &&
        !std::all_of(cur.begin(), cur.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; })) {
      out.push_back(cur);
    }
    cur.clear();
  };
  for (unsigned char c : cleaned) {
    if (c < 0x80 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

Vocabulary Vocabulary::build(const std::vector<const std::vector<std::string>*>& docs) {
  Vocabulary v;
  for (const auto* doc : docs) {
    std::set<std::size_t> seen;
    for (const auto& tok : *doc) {
      auto [it, inserted] = v.index_.emplace(tok, v.tokens_.size());
      if (inserted) {
        v.tokens_.push_back(tok);
        v.doc_freq_.push_back(0);
      }
      seen.insert(it->second);
    }
    for (std::size_t idx : seen) ++v.doc_freq_[idx];
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   std::vector<std::size_t> doc_freq) {
  if (doc_freq.size() != tokens.size()) throw Error("vocabulary size mismatch");
  Vocabulary v;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], i).second) throw ParseError("duplicate vocabulary token");
  }
  v.tokens_ = std::move(tokens);
  v.doc_freq_ = std::move(doc_freq);
  return v;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto i = index_of(t)) ids.push_back(*i);
  }
  return ids;
}

Dataset Dataset::assemble(std::vector<Example> examples) {
  if (examples.empty()) throw ParseError("dataset has no rows");
  Dataset ds;
  std::set<std::string, decltype(&less_ci)> targets(&less_ci);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Example& ex = examples[i];
    if (ex.target.empty()) throw ParseError("example " + ex.id + " has an empty target");
    if (ex.split != Split::Test && ex.stance == Stance::Unknown) {
      throw ParseError("example " + ex.id + " in " + std::string(to_string(ex.split)) +
                       " split has no stance");
    }
    if (!ds.by_id_.emplace(ex.id, i).second) throw ParseError("duplicate example id " + ex.id);
    targets.insert(ex.target);
    ex.tokens = tokenize(ex.text);
  }
  ds.examples_ = std::move(examples);
  ds.targets_.assign(targets.begin(), targets.end());
  std::vector<const std::vector<std::string>*> docs;
  for (const auto& ex : ds.examples_) {
    if (ex.split == Split::Train) docs.push_back(&ex.tokens);
  }
  ds.vocab_ = Vocabulary::build(docs);
  return ds;
}

const Example* Dataset::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &examples_[it->second];
}

std::vector<const Example*> Dataset::split(Split s) const {
  std::vector<const Example*> out;
  for (const auto& ex : examples_) {
    if (ex.split == s) out.push_back(&ex);
  }
  return out;
}

std::vector<const Example*> Dataset::split(Split s, std::string_view target) const {
  std::vector<const Example*> out;
  for (const auto& ex : examples_) {
    if (ex.split == s && ex.target == target) out.push_back(&ex);
  }
  return out;
}

bool Dataset::has_target(std::string_view target) const {
  return std::find(targets_.begin(), targets_.end(), target) != targets_.end();
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view s) {
  const std::string low = lower(s);
  if (low == "semeval") return DatasetKind::SemEval;
  if (low == "ukp") return DatasetKind::Ukp;
  if (low == "synthetic") return DatasetKind::Synthetic;
  return std::nullopt;
}

Dataset load_semeval(const fs::path& path, const LoadOptions& opts) {
  if (!fs::is_directory(path)) throw IoError("missing directory: " + path.string());
  const auto train_file = find_named(path, "train");
  const auto test_file = find_named(path, "test");
  if (!train_file) throw IoError("missing file: no *train* TSV under " + path.string());
  if (!test_file) throw IoError("missing file: no *test* TSV under " + path.string());

  std::vector<Example> examples;
  for (const auto& [file, split] : {std::pair{*train_file, Split::Train},
                                    std::pair{*test_file, Split::Test}}) {
    const TsvTable t = read_tsv(file);
    const std::size_t c_id = require_column(t, "ID", file);
    const std::size_t c_target = require_column(t, "Target", file);
    const std::size_t c_text = require_column(t, "Tweet", file);
    const std::size_t c_stance = require_column(t, "Stance", file);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      Example ex;
      ex.id = row[c_id];
      ex.target = row[c_target];
      ex.text = row[c_text];
      ex.stance = require_stance(row[c_stance], file, t.line_numbers[r]);
      ex.split = split;
      examples.push_back(std::move(ex));
    }
  }

  if (opts.val_ratio > 0) {
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].split == Split::Train) train_idx.push_back(i);
    }
    Rng rng(opts.seed);
    for (std::size_t i = train_idx.size(); i > 1; --i) {
      std::swap(train_idx[i - 1], train_idx[rng.below(i)]);
    }
    const std::size_t n_val = train_idx.size() / opts.val_ratio;
    for (std::size_t i = 0; i < n_val; ++i) examples[train_idx[i]].split = Split::Val;
  }
  return Dataset::assemble(std::move(examples));
}

Dataset load_ukp(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& f : sorted_files(path)) {
      if (lower(f.extension().string()) == ".tsv") files.push_back(f);
    }
    if (files.empty()) throw IoError("missing file: no .tsv under " + path.string());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw IoError("missing file: " + path.string());
  }

  std::vector<Example> examples;
  std::unordered_map<std::string, std::size_t> seen_ids;
  for (const auto& file : files) {
    const TsvTable t = read_tsv(file);
    const std::size_t c_topic = require_column(t, "topic", file);
    const std::size_t c_text = require_column(t, "sentence", file);
    const std::size_t c_label = require_column(t, "annotation", file);
    const std::size_t c_set = require_column(t, "set", file);
    const auto c_id = column(t, "sentenceHash") ? column(t, "sentenceHash") : column(t, "id");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& row = t.rows[r];
      Example ex;
      ex.id = c_id ? row[*c_id]
                   : file.stem().string() + ":" + std::to_string(t.line_numbers[r]);
      // Repeated hashes get a stable #n suffix.
      const std::size_t n = ++seen_ids[ex.id];
      if (n > 1) ex.id += "#" + std::to_string(n);
      ex.target = row[c_topic];
      ex.text = row[c_text];
      ex.stance = require_stance(row[c_label], file, t.line_numbers[r]);
      auto split = parse_split(row[c_set]);
      if (!split) {
        throw ParseError(file.string() + ":" + std::to_string(t.line_numbers[r]) +
                         ": unknown set '" + row[c_set] + "'");
      }
      ex.split = *split;
      examples.push_back(std::move(ex));
    }
  }
  return Dataset::assemble(std::move(examples));
}

std::vector<Example> read_example_tsv(const fs::path& path) {
  const TsvTable t = read_tsv(path);
  const std::size_t c_id = require_column(t, "id", path);
  const std::size_t c_target = require_column(t, "target", path);
  const std::size_t c_text = require_column(t, "text", path);
  const auto c_stance = column(t, "stance");
  const auto c_split = column(t, "split");
  std::vector<Example> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    Example ex;
    ex.id = row[c_id];
    ex.target = row[c_target];
    ex.text = row[c_text];
    ex.stance = c_stance ? require_stance(row[*c_stance], path, t.line_numbers[r])
                         : Stance::Unknown;
    if (c_split) {
      auto split = parse_split(row[*c_split]);
      if (!split) {
        throw ParseError(path.string() + ":" + std::to_string(t.line_numbers[r]) +
                         ": unknown split '" + row[*c_split] + "'");
      }
      ex.split = *split;
    } else {
      ex.split = Split::Test;
    }
    ex.tokens = tokenize(ex.text);
    rows.push_back(std::move(ex));
  }
  return rows;
}

void write_example_tsv(const fs::path& path, const std::vector<Example>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "id\ttarget\ttext\tstance\tsplit\n";
  for (const auto& ex : rows) {
    out << ex.id << '\t' << ex.target << '\t' << ex.text << '\t' << to_string(ex.stance) << '\t'
        << to_string(ex.split) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset load_synthetic(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "data.tsv" : path;
  return Dataset::assemble(read_example_tsv(file));
}

Dataset load_dataset(DatasetKind kind, const fs::path& path, const LoadOptions& opts) {
  switch (kind) {
    case DatasetKind::SemEval:
      return load_semeval(path, opts);
    case DatasetKind::Ukp:
      return load_ukp(path);
    case DatasetKind::Synthetic:
      return load_synthetic(path);
  }
  throw Error("unknown dataset kind");
}

StanceSubsets stance_subsets(const Dataset& ds, std::string_view target) {
  if (!ds.has_target(target)) throw Error("unknown target '" + std::string(target) + "'");
  StanceSubsets subsets;
  for (const Example* ex : ds.split(Split::Train, target)) {
    subsets[index_of(ex->stance)].push_back(ex);
  }
  return subsets;
}

std::string target_abbreviation(std::string_view target) {
  static const std::pair<std::string_view, std::string_view> known[] = {
      {"atheism", "AT"},
      {"climate change is a real concern", "CC"},
      {"feminist movement", "FM"},
      {"hillary clinton", "HC"},
      {"legalization of abortion", "LA"},
      {"abortion", "AB"},
      {"cloning", "CL"},
      {"death penalty", "DP"},
      {"gun control", "GC"},
      {"marijuana legalization", "ML"},
      {"minimum wage", "MW"},
      {"nuclear energy", "NE"},
      {"school uniforms", "SU"},
  };
  const std::string low = lower(target);
  for (const auto& [name, abbr] : known) {
    if (low == name) return std::string(abbr);
  }
  return std::string(target);
}

}  // namespace cosd
