#include "nbt/wordvec.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "hash.hpp"
#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "wordvec";

double xavier_bound(std::size_t dim) {
  return std::sqrt(6.0 / static_cast<double>(dim + 1));
}

void fill_random(std::span<double> out, std::string_view token, std::uint64_t seed) {
  std::mt19937_64 rng(detail::mix64(detail::fnv1a(token) ^ detail::mix64(seed)));
  const double bound = xavier_bound(out.size());
  for (double& v : out) v = (2.0 * detail::unit_double(rng()) - 1.0) * bound;
}

}  // namespace

WordVectorTable::WordVectorTable(std::size_t dim, std::vector<Entry> entries,
                                 OovPolicy policy)
    : dim_(dim), policy_(policy) {
  if (dim == 0) throw DimensionError(kModule, "vector dimension must be positive");
  tokens_.reserve(entries.size());
  data_.reserve(entries.size() * dim);
  for (auto& [token, values] : entries) {
    if (values.size() != dim) {
      throw DimensionError(kModule, "vector for '" + token + "' has length " +
                                        std::to_string(values.size()) + ", expected " +
                                        std::to_string(dim));
    }
    auto it = index_.find(token);
    if (it != index_.end()) {
      ++duplicates_;
      std::copy(values.begin(), values.end(), data_.begin() + it->second * dim);
      continue;
    }
    index_.emplace(token, tokens_.size());
    tokens_.push_back(std::move(token));
    data_.insert(data_.end(), values.begin(), values.end());
  }
  detail::Fnv1a h;
  h.update(std::to_string(dim_));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    h.update(tokens_[i]);
    h.update("\n");
    for (std::size_t d = 0; d < dim_; ++d) h.update(data_[i * dim_ + d]);
  }
  fingerprint_ = h.hex();
}

WordVectorTable WordVectorTable::load(const std::filesystem::path& path,
                                      std::optional<std::size_t> expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError(kModule, "cannot open vector file " + path.string());
  return parse(in, path.string(), expected_dim);
}

WordVectorTable WordVectorTable::parse(std::istream& in, std::string_view source,
                                       std::optional<std::size_t> expected_dim) {
  std::vector<Entry> entries;
  std::optional<std::size_t> dim = expected_dim;
  std::string line;
  std::size_t lineno = 0;
  const std::string where(source);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    if (sp == 0 || sp == std::string::npos) {
      throw ParseError(kModule, where + ":" + std::to_string(lineno) +
                                    ": expected 'token f1 ... fD'",
                       lineno);
    }
    std::string token = line.substr(0, sp);
    std::vector<double> values;
    std::size_t pos = sp + 1;
    while (pos <= line.size()) {
      std::size_t next = line.find(' ', pos);
      if (next == std::string::npos) next = line.size();
      const char* b = line.data() + pos;
      const char* e = line.data() + next;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e || b == e || !std::isfinite(v)) {
        throw ParseError(kModule, where + ":" + std::to_string(lineno) +
                                      ": unparseable float '" +
                                      std::string(b, e) + "' in column " +
                                      std::to_string(values.size() + 2),
                         lineno, pos + 1);
      }
      values.push_back(v);
      pos = next + 1;
    }
    if (!dim) dim = values.size();
    if (values.size() != *dim) {
      throw ParseError(kModule, where + ":" + std::to_string(lineno) + ": dimension " +
                                    std::to_string(values.size()) + " but expected " +
                                    std::to_string(*dim),
                       lineno);
    }
    entries.emplace_back(std::move(token), std::move(values));
  }
  if (entries.empty()) {
    throw ParseError(kModule, where + ": vector file is empty");
  }
  return WordVectorTable(*dim, std::move(entries));
}

void WordVectorTable::write(std::ostream& out) const {
  char buf[64];
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i];
    for (std::size_t d = 0; d < dim_; ++d) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data_[i * dim_ + d]);
      (void)ec;
      out << ' ';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void WordVectorTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(kModule, "cannot write vector file " + path.string());
  write(out);
  if (!out) throw IoError(kModule, "write failed for " + path.string());
}

std::span<const double> WordVectorTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    const std::string folded = normalize_token(token);
    if (folded == token) return {};
    it = index_.find(folded);
    if (it == index_.end()) return {};
  }
  return {data_.data() + it->second * dim_, dim_};
}

Tensor WordVectorTable::lookup(std::string_view token, LookupStats* stats) const {
  if (stats) ++stats->lookups;
  auto v = find(token);
  if (!v.empty()) return Tensor::vector(std::vector<double>(v.begin(), v.end()));
  if (stats) ++stats->oov;
  Tensor out = Tensor::zeros(dim_);
  if (policy_ == OovPolicy::kHashedRandom) fill_random(out.span(), token, 0);
  return out;
}

Tensor embed_phrase(const WordVectorTable& table, std::span<const std::string> phrase,
                    LookupStats* stats) {
  if (phrase.empty()) throw ConfigError(kModule, "cannot embed an empty phrase");
  Tensor sum = Tensor::zeros(table.dim());
  for (const auto& token : phrase) sum += table.lookup(token, stats);
  return sum;
}

WordVectorTable random_table(std::span<const std::string> vocab, std::size_t dim,
                             std::uint64_t seed) {
  if (dim == 0) throw DimensionError(kModule, "vector dimension must be positive");
  std::vector<WordVectorTable::Entry> entries;
  entries.reserve(vocab.size());
  for (const auto& token : vocab) {
    std::vector<double> v(dim);
    fill_random(v, token, seed);
    entries.emplace_back(token, std::move(v));
  }
  return WordVectorTable(dim, std::move(entries));
}

LookupStats oov_report(const WordVectorTable& table,
                       std::span<const std::vector<std::string>> sentences) {
  LookupStats stats;
  for (const auto& s : sentences) {
    for (const auto& t : s) {
      ++stats.lookups;
      if (!table.contains(t)) ++stats.oov;
    }
  }
  return stats;
}

}  // namespace nbt
