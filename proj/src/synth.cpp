#include "cosd/synth.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace cosd {

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  const double n = norm(v);
  for (double& x : v) x /= n;
  return v;
}

Tensor orthonormal_prototypes(Rng& rng, std::size_t dim) {
  Tensor p(kNumStances, dim);
  for (std::size_t k = 0; k < kNumStances; ++k) {
    auto v = random_unit(rng, dim);
    for (std::size_t j = 0; j < k; ++j) {
      const double proj = dot(v, p.row(j));
      for (std::size_t c = 0; c < dim; ++c) v[c] -= proj * p(j, c);
    }
    const double n = norm(v);
    for (std::size_t c = 0; c < dim; ++c) p(k, c) = v[c] / n;
  }
  return p;
}

EncoderRecord make_record(const std::vector<std::vector<double>>& rows) {
  EncoderRecord rec;
  rec.rows = rows.size();
  for (const auto& r : rows) {
    for (double v : r) rec.data.push_back(static_cast<float>(v));
  }
  return rec;
}

const char kStanceLetter[] = {'f', 'n', 'a'};

}  // namespace

SynthData generate_synthetic(const SynthOptions& opts) {
  if (opts.targets == 0 || opts.topics == 0 || opts.words_per_topic == 0 ||
      opts.doc_length == 0 || opts.dim < kNumStances) {
    throw Error("synthetic options must be positive (dim >= 3)");
  }
  if (opts.train < opts.targets * kNumStances) throw Error("too few training examples per target");

  Rng rng(opts.seed);
  SynthData data;
  data.store = EncoderStore(opts.dim);
  data.prototypes = orthonormal_prototypes(rng, opts.dim);

  std::unordered_map<std::string, std::vector<double>> word_vec;
  auto add_word = [&](const std::string& w, const double* proto) {
    auto v = random_unit(rng, opts.dim);
    for (std::size_t c = 0; c < opts.dim; ++c) {
      v[c] *= opts.word_noise;
      if (proto) v[c] += opts.proto_weight * proto[c];
    }
    word_vec.emplace(w, std::move(v));
  };

  std::vector<std::string> background;
  for (std::size_t j = 0; j < opts.background_words; ++j) {
    background.push_back("bg" + std::to_string(j));
    add_word(background.back(), nullptr);
  }
  for (std::size_t t = 0; t < opts.targets; ++t) {
    data.target_names.push_back("target" + std::string(1, static_cast<char>('a' + t % 26)) +
                                (t >= 26 ? std::to_string(t / 26) : ""));
    std::vector<std::vector<std::string>> topics;
    for (std::size_t s = 0; s < kNumStances; ++s) {
      for (std::size_t h = 0; h < opts.topics; ++h) {
        std::vector<std::string> words;
        for (std::size_t j = 0; j < opts.words_per_topic; ++j) {
          words.push_back("x" + std::to_string(t) + kStanceLetter[s] + std::to_string(h) + "w" +
                          std::to_string(j));
          add_word(words.back(), &data.prototypes(s, 0));
        }
        topics.push_back(std::move(words));
      }
    }
    data.topic_words.push_back(std::move(topics));
  }

  const std::pair<Split, std::size_t> splits[] = {
      {Split::Train, opts.train}, {Split::Val, opts.val}, {Split::Test, opts.test}};
  std::size_t serial = 0;
  for (const auto& [split, total] : splits) {
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t t = i % opts.targets;
      // Cycle stances so every target and split stays balanced.
      const std::size_t s = (i / opts.targets) % kNumStances;
      const std::size_t h = rng.below(opts.topics);
      const auto& topic = data.topic_words[t][s * opts.topics + h];

      Example ex;
      ex.id = "s" + std::to_string(serial++);
      ex.target = data.target_names[t];
      ex.stance = stance_at(s);
      ex.split = split;
      std::vector<std::vector<double>> rows(1, std::vector<double>(opts.dim, 0.0));
      for (std::size_t w = 0; w < opts.doc_length; ++w) {
        const bool off = rng.uniform() < opts.off_topic;
        const std::string& word =
            off ? background[rng.below(background.size())] : topic[rng.below(topic.size())];
        if (!ex.text.empty()) ex.text += ' ';
        ex.text += word;
        auto noise = random_unit(rng, opts.dim);
        std::vector<double> tok = word_vec.at(word);
        for (std::size_t c = 0; c < opts.dim; ++c) tok[c] += opts.token_noise * noise[c];
        for (std::size_t c = 0; c < opts.dim; ++c) rows[0][c] += tok[c] / opts.doc_length;
        rows.push_back(std::move(tok));
      }
      data.store.insert(ex.id, make_record(rows));
      data.examples.push_back(std::move(ex));
    }
  }

  for (const auto& name : data.target_names) {
    data.store.insert(EncoderStore::target_key(name), make_record({random_unit(rng, opts.dim)}));
  }
  for (Stance s : kStances) {
    data.store.insert(EncoderStore::label_key(s), make_record({random_unit(rng, opts.dim)}));
  }
  return data;
}

double nearest_prototype_accuracy(const SynthData& data) {
  if (data.examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data.examples) {
    const auto v = data.store.pooled(ex.id);
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t k = 0; k < kNumStances; ++k) {
      const double sim = cosine(v, data.prototypes.row(k));
      if (sim > best_sim) {
        best_sim = sim;
        best = k;
      }
    }
    if (stance_at(best) == ex.stance) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

void write_synthetic(const SynthData& data, const SynthOptions& opts,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_example_tsv(dir / "data.tsv", data.examples);
  save_embeddings(dir / "emb.bin", data.store);

  nlohmann::json truth;
  truth["seed"] = opts.seed;
  truth["dim"] = opts.dim;
  truth["topics_per_stance"] = opts.topics;
  truth["counts"] = {{"train", opts.train}, {"val", opts.val}, {"test", opts.test}};
  truth["targets"] = data.target_names;
  truth["nearest_prototype_accuracy"] = nearest_prototype_accuracy(data);
  nlohmann::json planted = nlohmann::json::object();
  for (std::size_t t = 0; t < data.target_names.size(); ++t) {
    nlohmann::json per_stance = nlohmann::json::object();
    for (Stance s : kStances) {
      nlohmann::json topics = nlohmann::json::array();
      for (std::size_t h = 0; h < opts.topics; ++h) {
        topics.push_back(data.topic_words[t][index_of(s) * opts.topics + h]);
      }
      per_stance[std::string(to_string(s))] = std::move(topics);
    }
    planted[data.target_names[t]] = std::move(per_stance);
  }
  truth["planted_topics"] = std::move(planted);
  truth["prototypes"] = nlohmann::json::array();
  for (std::size_t k = 0; k < kNumStances; ++k) {
    const auto row = data.prototypes.row(k);
    truth["prototypes"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  std::ofstream out(dir / "truth.json");
  if (!out) throw IoError("cannot write " + (dir / "truth.json").string());
  out << truth.dump(1) << '\n';
}

}  // namespace cosd
