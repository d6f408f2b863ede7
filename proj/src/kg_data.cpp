#include "liftkg/kg_data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "liftkg/rng.hpp"

namespace liftkg {

namespace fs = std::filesystem;

namespace {

uint64_t pair_key(int32_t a, int32_t b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
         static_cast<uint32_t>(b);
}

[[noreturn]] void fail_line(const std::string& file, size_t line, const std::string& what) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

int64_t parse_count_header(const std::string& file, const std::vector<std::string>& lines) {
  if (lines.empty()) fail_line(file, 1, "missing count header");
  try {
    return std::stoll(lines[0]);
  } catch (const std::exception&) {
    fail_line(file, 1, "malformed count header '" + lines[0] + "'");
  }
}

std::vector<std::string> load_vocab(const std::string& path) {
  auto lines = read_lines(path);
  const int64_t count = parse_count_header(path, lines);
  std::vector<std::string> names(static_cast<size_t>(count));
  std::vector<char> seen(static_cast<size_t>(count), 0);
  int64_t filled = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos) fail_line(path, i + 1, "expected 'name<TAB>id'");
    const std::string name = lines[i].substr(0, tab);
    int64_t id = 0;
    try {
      id = std::stoll(lines[i].substr(tab + 1));
    } catch (const std::exception&) {
      fail_line(path, i + 1, "malformed id '" + lines[i].substr(tab + 1) + "'");
    }
    if (id < 0 || id >= count) {
      fail_line(path, i + 1, "id " + std::to_string(id) + " out of bounds for count " +
                                 std::to_string(count));
    }
    if (seen[static_cast<size_t>(id)]) fail_line(path, i + 1, "duplicate id " + std::to_string(id));
    seen[static_cast<size_t>(id)] = 1;
    names[static_cast<size_t>(id)] = name;
    ++filled;
  }
  if (filled != count) {
    throw std::runtime_error(path + ": header says " + std::to_string(count) + " entries, found " +
                             std::to_string(filled));
  }
  return names;
}

std::vector<Triple> load_id_triples(const std::string& path, int64_t entity_count,
                                    int64_t relation_count) {
  auto lines = read_lines(path);
  const int64_t count = parse_count_header(path, lines);
  std::vector<Triple> triples;
  triples.reserve(static_cast<size_t>(count));
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::istringstream is(lines[i]);
    // OpenKE column order: head tail relation.
    int64_t h, t, r;
    if (!(is >> h >> t >> r)) fail_line(path, i + 1, "expected 'head tail relation'");
    std::string extra;
    if (is >> extra) fail_line(path, i + 1, "trailing tokens after triple");
    if (h < 0 || h >= entity_count || t < 0 || t >= entity_count) {
      fail_line(path, i + 1, "entity id out of bounds (|E|=" + std::to_string(entity_count) + ")");
    }
    if (r < 0 || r >= relation_count) {
      fail_line(path, i + 1,
                "relation id out of bounds (|R|=" + std::to_string(relation_count) + ")");
    }
    triples.push_back({static_cast<int32_t>(h), static_cast<int32_t>(r), static_cast<int32_t>(t)});
  }
  if (static_cast<int64_t>(triples.size()) != count) {
    throw std::runtime_error(path + ": header says " + std::to_string(count) +
                             " triples, found " + std::to_string(triples.size()));
  }
  return triples;
}

KnowledgeGraph load_openke(const std::string& dir) {
  KnowledgeGraph kg;
  kg.entity_names = load_vocab((fs::path(dir) / "entity2id.txt").string());
  kg.relation_names = load_vocab((fs::path(dir) / "relation2id.txt").string());
  kg.entity_count = static_cast<int64_t>(kg.entity_names.size());
  kg.relation_count = static_cast<int64_t>(kg.relation_names.size());
  kg.train = load_id_triples((fs::path(dir) / "train2id.txt").string(), kg.entity_count,
                             kg.relation_count);
  kg.valid = load_id_triples((fs::path(dir) / "valid2id.txt").string(), kg.entity_count,
                             kg.relation_count);
  kg.test = load_id_triples((fs::path(dir) / "test2id.txt").string(), kg.entity_count,
                            kg.relation_count);
  return kg;
}

KnowledgeGraph load_tsv(const std::string& dir) {
  KnowledgeGraph kg;
  std::unordered_map<std::string, int32_t> ent_ids, rel_ids;
  auto intern = [](std::unordered_map<std::string, int32_t>& ids,
                   std::vector<std::string>& names, const std::string& s) {
    auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const int32_t id = static_cast<int32_t>(names.size());
    ids.emplace(s, id);
    names.push_back(s);
    return id;
  };
  const std::pair<const char*, std::vector<Triple>*> splits[] = {
      {"train.txt", &kg.train}, {"valid.txt", &kg.valid}, {"test.txt", &kg.test}};
  bool any = false;
  for (const auto& [name, dst] : splits) {
    const std::string path = (fs::path(dir) / name).string();
    if (!fs::exists(path)) continue;
    any = true;
    auto lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto t1 = lines[i].find('\t');
      const auto t2 = t1 == std::string::npos ? std::string::npos : lines[i].find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos) {
        fail_line(path, i + 1, "expected 'head<TAB>relation<TAB>tail'");
      }
      const int32_t h = intern(ent_ids, kg.entity_names, lines[i].substr(0, t1));
      const int32_t r = intern(rel_ids, kg.relation_names, lines[i].substr(t1 + 1, t2 - t1 - 1));
      const int32_t t = intern(ent_ids, kg.entity_names, lines[i].substr(t2 + 1));
      dst->push_back({h, r, t});
    }
  }
  if (!any) throw std::runtime_error(dir + ": no train.txt/valid.txt/test.txt found");
  kg.entity_count = static_cast<int64_t>(kg.entity_names.size());
  kg.relation_count = static_cast<int64_t>(kg.relation_names.size());
  return kg;
}

}  // namespace

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "openke") return DatasetFormat::kOpenKE;
  if (name == "tsv") return DatasetFormat::kTsv;
  throw std::invalid_argument("unknown dataset format '" + name + "' (expected openke or tsv)");
}

const std::vector<Triple>& KnowledgeGraph::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw std::invalid_argument("unknown split '" + name + "' (expected train, valid or test)");
}

void KnowledgeGraph::validate() const {
  for (const auto* split : {&train, &valid, &test}) {
    for (const Triple& t : *split) {
      if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count ||
          t.relation < 0 || t.relation >= relation_count) {
        throw std::runtime_error("triple id out of vocabulary bounds");
      }
    }
  }
}

KnowledgeGraph load_dataset(const std::string& path, DatasetFormat format) {
  if (!fs::exists(path)) throw std::runtime_error("dataset directory not found: " + path);
  KnowledgeGraph kg =
      format == DatasetFormat::kOpenKE ? load_openke(path) : load_tsv(path);
  kg.validate();
  return kg;
}

void save_dataset(const KnowledgeGraph& kg, const std::string& path, DatasetFormat format) {
  fs::create_directories(path);
  if (format == DatasetFormat::kOpenKE) {
    auto write_vocab = [&](const std::string& file, const std::vector<std::string>& names,
                           int64_t count) {
      std::ofstream out(fs::path(path) / file);
      out << count << "\n";
      for (size_t i = 0; i < names.size(); ++i) out << names[i] << "\t" << i << "\n";
    };
    std::vector<std::string> ent = kg.entity_names, rel = kg.relation_names;
    if (ent.empty()) {
      for (int64_t i = 0; i < kg.entity_count; ++i) ent.push_back("e" + std::to_string(i));
    }
    if (rel.empty()) {
      for (int64_t i = 0; i < kg.relation_count; ++i) rel.push_back("r" + std::to_string(i));
    }
    write_vocab("entity2id.txt", ent, kg.entity_count);
    write_vocab("relation2id.txt", rel, kg.relation_count);
    const std::pair<const char*, const std::vector<Triple>*> splits[] = {
        {"train2id.txt", &kg.train}, {"valid2id.txt", &kg.valid}, {"test2id.txt", &kg.test}};
    for (const auto& [file, triples] : splits) {
      std::ofstream out(fs::path(path) / file);
      out << triples->size() << "\n";
      for (const Triple& t : *triples) out << t.head << " " << t.tail << " " << t.relation << "\n";
    }
  } else {
    const std::pair<const char*, const std::vector<Triple>*> splits[] = {
        {"train.txt", &kg.train}, {"valid.txt", &kg.valid}, {"test.txt", &kg.test}};
    for (const auto& [file, triples] : splits) {
      std::ofstream out(fs::path(path) / file);
      for (const Triple& t : *triples) {
        out << kg.entity_names[static_cast<size_t>(t.head)] << "\t"
            << kg.relation_names[static_cast<size_t>(t.relation)] << "\t"
            << kg.entity_names[static_cast<size_t>(t.tail)] << "\n";
      }
    }
  }
}

FilterIndex::FilterIndex(const KnowledgeGraph& kg) {
  for (const auto* split : {&kg.train, &kg.valid, &kg.test}) {
    for (const Triple& t : *split) {
      tails_by_hr_[pair_key(t.head, t.relation)].push_back(t.tail);
      heads_by_rt_[pair_key(t.relation, t.tail)].push_back(t.head);
    }
  }
  for (auto* index : {&tails_by_hr_, &heads_by_rt_}) {
    for (auto& [key, ids] : *index) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
  }
}

const std::vector<int32_t>& FilterIndex::tails(int32_t head, int32_t relation) const {
  auto it = tails_by_hr_.find(pair_key(head, relation));
  return it == tails_by_hr_.end() ? empty_ : it->second;
}

const std::vector<int32_t>& FilterIndex::heads(int32_t relation, int32_t tail) const {
  auto it = heads_by_rt_.find(pair_key(relation, tail));
  return it == heads_by_rt_.end() ? empty_ : it->second;
}

bool FilterIndex::contains(const Triple& t) const {
  const auto& ts = tails(t.head, t.relation);
  return std::binary_search(ts.begin(), ts.end(), t.tail);
}

CorruptedBatch negative_sample(const std::vector<Triple>& batch, int64_t entity_count,
                               const NegSampleConfig& cfg, std::mt19937_64& rng) {
  if (entity_count < 2) {
    throw std::invalid_argument("negative sampling needs at least 2 entities, got " +
                                std::to_string(entity_count));
  }
  if (cfg.negatives_per_positive < 1) {
    throw std::invalid_argument("negatives_per_positive must be >= 1");
  }
  CorruptedBatch out;
  out.positives = batch;
  out.negatives.reserve(batch.size() * static_cast<size_t>(cfg.negatives_per_positive));
  for (const Triple& pos : batch) {
    for (int k = 0; k < cfg.negatives_per_positive; ++k) {
      Triple neg = pos;
      const bool corrupt_head = draw_below(rng, 2) == 0;
      const int32_t original = corrupt_head ? pos.head : pos.tail;
      int32_t candidate = original;
      while (candidate == original) {
        candidate = static_cast<int32_t>(draw_below(rng, static_cast<uint64_t>(entity_count)));
      }
      (corrupt_head ? neg.head : neg.tail) = candidate;
      out.negatives.push_back(neg);
    }
  }
  return out;
}

std::vector<std::vector<Triple>> shuffled_batches(const std::vector<Triple>& split,
                                                  int64_t batch_size, uint64_t seed,
                                                  int64_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<Triple> order = split;
  auto rng = make_rng(seed, 0x5bf1e5ULL ^ mix_seed(static_cast<uint64_t>(epoch)));
  shuffle_vec(order, rng);
  std::vector<std::vector<Triple>> batches;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), i + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<int64_t>(i),
                         order.begin() + static_cast<int64_t>(end));
  }
  return batches;
}

}  // namespace liftkg
