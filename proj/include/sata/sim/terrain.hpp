#pragma once

#include <string>
#include <vector>

#include "sata/rng.hpp"

namespace sata::sim {

enum class TerrainKind { Flat, Rough, Slope, Soft };

TerrainKind parse_terrain_kind(const std::string& name);
std::string to_string(TerrainKind kind);

/// Ground profile z = height(x) plus contact material. Rough terrain is a
/// piecewise-linear heightfield on a uniform grid.
struct Terrain {
  TerrainKind kind = TerrainKind::Flat;
  double origin = -10.0;   // x of the first heightfield sample, m
  double spacing = 0.25;   // m
  std::vector<double> heights;
  double slope = 0.0;      // rad, Slope kind only
  double friction = 1.0;
  double stiffness = 2.0e4;  // N/m
  double damping = 200.0;    // N s/m

  static Terrain flat();
  /// Samples uniform in [0, max_variation] over [origin, origin + length].
  static Terrain rough(Rng& rng, double max_variation = 0.12, double length = 40.0);
  static Terrain inclined(double angle);
  /// Flat ground with contact stiffness and damping divided by `factor`.
  static Terrain soft(double factor = 20.0);

  double height(double x) const;
  double gradient(double x) const;

  void validate() const;
};

}  // namespace sata::sim
