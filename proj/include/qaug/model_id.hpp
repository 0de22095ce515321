#pragma once

#include <compare>
#include <string>

namespace qaug {

/// Identity of a text-generation model within a run's registry.
struct ModelId {
  std::string name;

  friend bool operator==(const ModelId&, const ModelId&) = default;
  friend auto operator<=>(const ModelId&, const ModelId&) = default;
};

}  // namespace qaug
