#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ballmap/mesh.hpp"

namespace ballmap {

// A labeled anatomical landmark anchored to a mesh, either at a vertex or at
// barycentric coordinates inside a tet.
struct FeaturePoint {
  enum class Kind { Surface, Interior };

  std::string label;
  Kind kind = Kind::Surface;
  int vertex = -1;          // vertex anchor when >= 0
  int tet = -1;             // else tet + barycentric anchor
  Eigen::Vector4d bary = Eigen::Vector4d::Zero();

  bool is_vertex_anchor() const { return vertex >= 0; }

  // Anchor position under the mesh's own coordinates.
  Vec3 position(const TetMesh& mesh) const;
  // Anchor position under substitute per-vertex coordinates (e.g. ball image).
  Vec3 position(const TetMesh& mesh, const std::vector<Vec3>& coords) const;
};

using FeatureSet = std::vector<FeaturePoint>;

// Checks anchors against the mesh: index ranges, barycentric validity
// (non-negative, sum within 1e-12 of 1 after load-time renormalization),
// surface features on the boundary, interior features strictly inside.
// Throws ValidationError naming the offending record.
void validate_features(const FeatureSet& features, const TetMesh& mesh);

// Features with the given kind, in input order.
std::vector<const FeaturePoint*> features_of_kind(const FeatureSet& f, FeaturePoint::Kind k);

// Looks up a feature by label; nullptr when absent.
const FeaturePoint* find_feature(const FeatureSet& f, const std::string& label);

} // namespace ballmap
