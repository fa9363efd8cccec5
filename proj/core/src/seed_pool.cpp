#include "gbfuzz/seed_pool.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace gbf {

const char* to_string(SeedClass c) {
  switch (c) {
    case SeedClass::FastEdges: return "SC-fast-edges";
    case SeedClass::FastMultipleEdges: return "SC-fast-multiple-edges";
    case SeedClass::All: return "SC-all";
  }
  return "?";
}

const char* to_string(SeedCriterion c) {
  switch (c) {
    case SeedCriterion::Count: return "Count";
    case SeedCriterion::Speed: return "Speed";
    case SeedCriterion::Length: return "Length";
    case SeedCriterion::Crash: return "Crash";
    case SeedCriterion::Cov: return "Cov";
    case SeedCriterion::Random: return "Random";
  }
  return "?";
}

SeedEntry& SeedPool::add(std::vector<uint8_t> bytes, CoverageSet coverage,
                         uint64_t duration, bool crashed, size_t cov_increase) {
  SeedEntry e;
  e.id = next_id_++;
  e.bytes = std::move(bytes);
  e.coverage = std::move(coverage);
  e.duration = std::max<uint64_t>(1, duration);
  e.crashed = crashed;
  e.last_cov_increase = cov_increase;
  entries_.push_back(std::move(e));
  return entries_.back();
}

std::vector<size_t> SeedPool::classify(SeedClass c) const {
  if (entries_.empty()) {
    throw std::invalid_argument("classify: empty seed pool");
  }
  if (c == SeedClass::All) {
    std::vector<size_t> all(entries_.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }

  // Cheapest seed per edge index; ties resolved toward the older seed so the
  // subset is stable under re-classification.
  std::map<uint32_t, size_t> per_edge;
  std::map<std::pair<uint32_t, uint8_t>, size_t> per_pair;
  auto better = [&](size_t cand, size_t incumbent) {
    const auto& a = entries_[cand];
    const auto& b = entries_[incumbent];
    return a.duration < b.duration ||
           (a.duration == b.duration && a.id < b.id);
  };
  for (size_t i = 0; i < entries_.size(); ++i) {
    for (const auto& e : entries_[i].coverage.entries) {
      auto [it, fresh] = per_edge.try_emplace(e.index, i);
      if (!fresh && better(i, it->second)) it->second = i;
      if (c == SeedClass::FastMultipleEdges && e.bucket > 0) {
        auto [pit, pfresh] =
            per_pair.try_emplace(std::make_pair(e.index, e.bucket), i);
        if (!pfresh && better(i, pit->second)) pit->second = i;
      }
    }
  }
  std::vector<size_t> out;
  for (const auto& [edge, idx] : per_edge) out.push_back(idx);
  if (c == SeedClass::FastMultipleEdges) {
    for (const auto& [pair, idx] : per_pair) out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) {
    // Seeds with empty coverage sets: fall back to the whole pool.
    return classify(SeedClass::All);
  }
  return out;
}

size_t SeedPool::sample(std::span<const size_t> candidates, SeedCriterion crit,
                        Rng& rng) {
  if (candidates.empty()) {
    throw std::invalid_argument("sample: empty candidate set");
  }

  auto uniform = [&]() { return candidates[rng.below(candidates.size())]; };
  auto weighted = [&](auto&& weight_of) {
    double total = 0;
    for (size_t i : candidates) total += weight_of(entries_[i]);
    double u = rng.unit() * total;
    size_t chosen = candidates.back();
    for (size_t i : candidates) {
      const double w = weight_of(entries_[i]);
      if (u < w) {
        chosen = i;
        break;
      }
      u -= w;
    }
    return chosen;
  };

  size_t pick = 0;
  switch (crit) {
    case SeedCriterion::Count: {
      uint64_t best = ~uint64_t{0};
      for (size_t i : candidates) {
        best = std::min(best, entries_[i].sample_count);
      }
      std::vector<size_t> ties;
      for (size_t i : candidates) {
        if (entries_[i].sample_count == best) ties.push_back(i);
      }
      pick = ties[rng.below(ties.size())];
      break;
    }
    case SeedCriterion::Speed:
      pick = weighted([](const SeedEntry& e) {
        return 1.0 / static_cast<double>(std::max<uint64_t>(1, e.duration));
      });
      break;
    case SeedCriterion::Length:
      pick = weighted([](const SeedEntry& e) {
        return 1.0 / static_cast<double>(std::max<size_t>(1, e.length()));
      });
      break;
    case SeedCriterion::Crash: {
      std::vector<size_t> crashed;
      for (size_t i : candidates) {
        if (entries_[i].crashed) crashed.push_back(i);
      }
      pick = crashed.empty() ? uniform() : crashed[rng.below(crashed.size())];
      break;
    }
    case SeedCriterion::Cov: {
      std::vector<size_t> gaining;
      for (size_t i : candidates) {
        if (entries_[i].last_cov_increase > 0) gaining.push_back(i);
      }
      pick = gaining.empty() ? uniform() : gaining[rng.below(gaining.size())];
      break;
    }
    case SeedCriterion::Random:
      pick = uniform();
      break;
  }
  entries_[pick].sample_count += 1;
  return pick;
}

void SeedPool::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json index = nlohmann::json::array();
  for (const auto& e : entries_) {
    const std::string fname = "seed_" + std::to_string(e.id) + ".bin";
    std::ofstream f(dir / fname, std::ios::binary);
    f.write(reinterpret_cast<const char*>(e.bytes.data()),
            static_cast<std::streamsize>(e.bytes.size()));
    nlohmann::json meta;
    meta["id"] = e.id;
    meta["file"] = fname;
    meta["duration"] = e.duration;
    meta["sample_count"] = e.sample_count;
    meta["crashed"] = e.crashed;
    meta["last_cov_increase"] = e.last_cov_increase;
    meta["coverage"] = nlohmann::json::parse(coverage_to_json(e.coverage));
    index.push_back(std::move(meta));
  }
  std::ofstream f(dir / "index.json");
  f << index.dump(2) << "\n";
}

SeedPool SeedPool::load(const std::filesystem::path& dir) {
  std::ifstream f(dir / "index.json");
  if (!f) {
    throw std::runtime_error("seed pool index not found in " + dir.string());
  }
  nlohmann::json index;
  f >> index;
  SeedPool pool;
  for (const auto& meta : index) {
    SeedEntry e;
    e.id = meta.at("id").get<uint64_t>();
    e.duration = meta.at("duration").get<uint64_t>();
    e.sample_count = meta.at("sample_count").get<uint64_t>();
    e.crashed = meta.at("crashed").get<bool>();
    e.last_cov_increase = meta.at("last_cov_increase").get<size_t>();
    e.coverage = coverage_from_json(meta.at("coverage").dump());
    std::ifstream sf(dir / meta.at("file").get<std::string>(),
                     std::ios::binary);
    e.bytes.assign(std::istreambuf_iterator<char>(sf),
                   std::istreambuf_iterator<char>());
    pool.next_id_ = std::max(pool.next_id_, e.id + 1);
    pool.entries_.push_back(std::move(e));
  }
  return pool;
}

}  // namespace gbf
