#pragma once

#include <stdexcept>
#include <string>

namespace gridhss {

// A pivoted factorization met a pivot below the relative singularity
// threshold. The conduction systems handled here are SPD, so this signals an
// assembly bug rather than bad physics.
class SingularMatrix : public std::runtime_error {
 public:
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver exceeded its iteration cap.
class NoConvergence : public std::runtime_error {
 public:
  explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gridhss
