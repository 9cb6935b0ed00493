#include "cosd/encoder.hpp"

#include <algorithm>

#include "cosd/binio.hpp"

namespace cosd {

std::vector<double> EncoderRecord::pooled(std::size_t dim) const {
  return std::vector<double>(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(dim));
}

Tensor EncoderRecord::token_matrix(std::size_t dim) const {
  const std::size_t first = rows > 1 ? 1 : 0;
  const std::size_t n = rows - first;
  std::vector<double> out(data.begin() + static_cast<std::ptrdiff_t>(first * dim),
                          data.begin() + static_cast<std::ptrdiff_t>(rows * dim));
  return Tensor(n, dim, std::move(out));
}

void EncoderStore::insert(std::string id, EncoderRecord record) {
  if (record.rows == 0 || record.data.size() != record.rows * dim_) {
    throw ShapeError("encoder record '" + id + "' has " + std::to_string(record.data.size()) +
                     " values for " + std::to_string(record.rows) + " rows of dim " +
                     std::to_string(dim_));
  }
  auto [it, inserted] = records_.emplace(id, std::move(record));
  if (!inserted) throw ParseError("duplicate encoder record '" + id + "'");
  order_.push_back(std::move(id));
}

const EncoderRecord* EncoderStore::find(std::string_view id) const {
  auto it = records_.find(std::string(id));
  return it == records_.end() ? nullptr : &it->second;
}

const EncoderRecord& EncoderStore::at(std::string_view id) const {
  if (const EncoderRecord* r = find(id)) return *r;
  throw Error("no embedding record for '" + std::string(id) + "'");
}

std::string EncoderStore::target_key(std::string_view target) {
  return "target:" + std::string(target);
}

std::string EncoderStore::label_key(Stance s) {
  switch (s) {
    case Stance::Favor:
      return "label:favor";
    case Stance::None:
      return "label:none";
    case Stance::Against:
      return "label:against";
    case Stance::Unknown:
      break;
  }
  throw Error("no label record for an unknown stance");
}

EncoderStore load_embeddings(const std::filesystem::path& path, std::size_t expected_dim) {
  binio::Reader r(path);
  r.expect_magic("EMB1");
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim != expected_dim) {
    throw ParseError("embedding dimension mismatch in " + path.string() + ": file has " +
                     std::to_string(dim) + ", expected " + std::to_string(expected_dim));
  }
  EncoderStore store(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string id = r.bytes(r.u32());
    EncoderRecord rec;
    rec.rows = r.u32();
    if (rec.rows == 0) throw ParseError("record '" + id + "' has zero rows");
    rec.data.resize(rec.rows * dim);
    for (float& v : rec.data) v = r.f32();
    store.insert(std::move(id), std::move(rec));
  }
  if (!r.at_eof()) throw ParseError("trailing bytes in " + path.string());
  return store;
}

void save_embeddings(const std::filesystem::path& path, const EncoderStore& store) {
  binio::Writer w(path);
  w.magic("EMB1");
  w.u32(static_cast<std::uint32_t>(store.size()));
  w.u32(static_cast<std::uint32_t>(store.dim()));
  for (const auto& id : store.ids()) {
    const EncoderRecord& rec = store.at(id);
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.bytes(id);
    w.u32(static_cast<std::uint32_t>(rec.rows));
    for (float v : rec.data) w.f32(v);
  }
  w.close();
}

std::vector<std::string> missing_ids(const EncoderStore& store, const Dataset& ds) {
  std::vector<std::string> missing;
  for (const auto& ex : ds.examples()) {
    if (!store.find(ex.id)) missing.push_back(ex.id);
  }
  for (const auto& t : ds.targets()) {
    if (!store.find(EncoderStore::target_key(t))) missing.push_back(EncoderStore::target_key(t));
  }
  for (Stance s : kStances) {
    if (!store.find(EncoderStore::label_key(s))) missing.push_back(EncoderStore::label_key(s));
  }
  return missing;
}

}  // namespace cosd
