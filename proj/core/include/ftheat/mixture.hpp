#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ftheat/numerics.hpp"

namespace ftheat {

struct MixtureComponent {
  double weight = 0.0;
  Profile profile;
};

/// Discrete prior over profiles: each player's profile is one draw.
struct Mixture {
  std::vector<MixtureComponent> components;

  std::size_t size() const { return components.size(); }
  /// Index of the highest-weight component (first on ties).
  std::size_t modal_component() const;
  /// Throws DomainError unless weights are non-negative, sum to 1 within
  /// 1e-10, and every profile is valid.
  void validate() const;

  static Mixture single(const Profile& profile);
};

/// Fit bookkeeping stored next to a fitted mixture.
struct FitMetadata {
  std::size_t requested_components = 0;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  int quadrature_order = QuadratureRule::kDefaultOrder;
  double tolerance = 0.0;
  std::size_t players = 0;
  std::size_t trips = 0;
  std::vector<std::string> warnings;
};

/// Mixture document: {"format": "ftheat-mixture", "version": 1,
/// "components": [{"weight", "mu": [2], "sigma": [[2],[2]]}], "fit": {...}}.
void write_mixture(std::ostream& out, const Mixture& mixture,
                   const std::optional<FitMetadata>& fit = std::nullopt);
Mixture read_mixture(std::istream& in);
std::optional<FitMetadata> read_fit_metadata(std::istream& in);

}  // namespace ftheat
