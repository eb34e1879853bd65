#include "sata/sim/terrain.hpp"

#include <algorithm>
#include <cmath>

#include "sata/error.hpp"

namespace sata::sim {

TerrainKind parse_terrain_kind(const std::string& name) {
  if (name == "flat") return TerrainKind::Flat;
  if (name == "rough") return TerrainKind::Rough;
  if (name == "slope") return TerrainKind::Slope;
  if (name == "soft") return TerrainKind::Soft;
  throw ConfigError("unknown terrain kind '" + name + "'");
}

std::string to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::Flat: return "flat";
    case TerrainKind::Rough: return "rough";
    case TerrainKind::Slope: return "slope";
    case TerrainKind::Soft: return "soft";
  }
  return "flat";
}

Terrain Terrain::flat() { return Terrain{}; }

Terrain Terrain::rough(Rng& rng, double max_variation, double length) {
  Terrain t;
  t.kind = TerrainKind::Rough;
  const auto samples = static_cast<std::size_t>(std::ceil(length / t.spacing)) + 1;
  t.heights.resize(samples);
  for (auto& h : t.heights) h = rng.uniform(0.0, max_variation);
  // Keep the spawn area level so resets start on a consistent surface.
  const double spawn = t.heights[static_cast<std::size_t>(-t.origin / t.spacing)];
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = t.origin + t.spacing * static_cast<double>(i);
    if (std::abs(x) <= 0.5) t.heights[i] = spawn;
  }
  return t;
}

Terrain Terrain::inclined(double angle) {
  Terrain t;
  t.kind = TerrainKind::Slope;
  t.slope = angle;
  return t;
}

Terrain Terrain::soft(double factor) {
  Terrain t;
  t.kind = TerrainKind::Soft;
  t.stiffness /= factor;
  t.damping /= factor;
  return t;
}

double Terrain::height(double x) const {
  if (kind == TerrainKind::Slope) return std::tan(slope) * x;
  if (heights.empty()) return 0.0;
  const double s = (x - origin) / spacing;
  if (s <= 0.0) return heights.front();
  const auto last = static_cast<double>(heights.size() - 1);
  if (s >= last) return heights.back();
  const auto i = static_cast<std::size_t>(s);
  const double f = s - static_cast<double>(i);
  return heights[i] * (1.0 - f) + heights[i + 1] * f;
}

double Terrain::gradient(double x) const {
  if (kind == TerrainKind::Slope) return std::tan(slope);
  if (heights.empty()) return 0.0;
  const double s = (x - origin) / spacing;
  const auto last = static_cast<double>(heights.size() - 1);
  if (s <= 0.0 || s >= last) return 0.0;
  const auto i = static_cast<std::size_t>(s);
  return (heights[i + 1] - heights[i]) / spacing;
}

void Terrain::validate() const {
  if (!(friction > 0.0)) throw ConfigError("terrain friction must be positive");
  if (!(stiffness > 0.0 && damping >= 0.0)) throw ConfigError("contact stiffness/damping invalid");
  if (!(spacing > 0.0)) throw ConfigError("heightfield spacing must be positive");
  if (!heights.empty()) {
    const auto [lo, hi] = std::minmax_element(heights.begin(), heights.end());
    if (*hi - *lo > 0.12 + 1e-12) throw ConfigError("rough terrain height variation exceeds 0.12 m");
  }
}

}  // namespace sata::sim
