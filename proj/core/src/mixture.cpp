#include "ftheat/mixture.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ftheat/error.hpp"

namespace ftheat {

using nlohmann::json;

std::size_t Mixture::modal_component() const {
  if (components.empty()) throw DomainError("empty mixture");
  std::size_t best = 0;
  for (std::size_t m = 1; m < components.size(); ++m)
    if (components[m].weight > components[best].weight) best = m;
  return best;
}

void Mixture::validate() const {
  if (components.empty()) throw DomainError("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
      throw DomainError("mixture weights must be finite and non-negative");
    total += c.weight;
    c.profile.validate();
  }
  if (std::abs(total - 1.0) > 1e-10) throw DomainError("mixture weights must sum to 1");
}

Mixture Mixture::single(const Profile& profile) { return Mixture{{{1.0, profile}}}; }

namespace {

json profile_json(const Profile& p) {
  return {{"mu", {p.mu(0), p.mu(1)}},
          {"sigma", {{p.sigma(0, 0), p.sigma(0, 1)}, {p.sigma(1, 0), p.sigma(1, 1)}}}};
}

json parse_document(std::istream& in) {
  try {
    json doc = json::parse(in);
    if (!doc.is_object() || doc.value("format", "") != "ftheat-mixture")
      throw DataError("not an ftheat mixture document");
    return doc;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed mixture document: ") + e.what());
  }
}

}  // namespace

void write_mixture(std::ostream& out, const Mixture& mixture,
                   const std::optional<FitMetadata>& fit) {
  json doc;
  doc["format"] = "ftheat-mixture";
  doc["version"] = 1;
  json comps = json::array();
  for (const auto& c : mixture.components) {
    json j = profile_json(c.profile);
    j["weight"] = c.weight;
    comps.push_back(std::move(j));
  }
  doc["components"] = std::move(comps);
  if (fit) {
    doc["fit"] = {{"requested_components", fit->requested_components},
                  {"iterations", fit->iterations},
                  {"log_likelihood", fit->log_likelihood},
                  {"converged", fit->converged},
                  {"seed", fit->seed},
                  {"quadrature_order", fit->quadrature_order},
                  {"tolerance", fit->tolerance},
                  {"players", fit->players},
                  {"trips", fit->trips},
                  {"warnings", fit->warnings}};
  }
  out << doc.dump(2) << '\n';
}

Mixture read_mixture(std::istream& in) {
  const json doc = parse_document(in);
  Mixture m;
  try {
    for (const auto& c : doc.at("components")) {
      MixtureComponent comp;
      comp.weight = c.at("weight").get<double>();
      const auto& mu = c.at("mu");
      const auto& sigma = c.at("sigma");
      comp.profile.mu = Vec2(mu.at(0).get<double>(), mu.at(1).get<double>());
      for (int r = 0; r < 2; ++r)
        for (int k = 0; k < 2; ++k)
          comp.profile.sigma(r, k) = sigma.at(static_cast<std::size_t>(r))
                                         .at(static_cast<std::size_t>(k))
                                         .get<double>();
      m.components.push_back(comp);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed mixture component: ") + e.what());
  }
  m.validate();
  return m;
}

std::optional<FitMetadata> read_fit_metadata(std::istream& in) {
  const json doc = parse_document(in);
  if (!doc.contains("fit")) return std::nullopt;
  const auto& f = doc["fit"];
  FitMetadata meta;
  try {
    meta.requested_components = f.at("requested_components").get<std::size_t>();
    meta.iterations = f.at("iterations").get<int>();
    meta.log_likelihood = f.at("log_likelihood").get<double>();
    meta.converged = f.at("converged").get<bool>();
    meta.seed = f.at("seed").get<std::uint64_t>();
    meta.quadrature_order = f.at("quadrature_order").get<int>();
    meta.tolerance = f.at("tolerance").get<double>();
    meta.players = f.value("players", std::size_t{0});
    meta.trips = f.value("trips", std::size_t{0});
    meta.warnings = f.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit metadata: ") + e.what());
  }
  return meta;
}

}  // namespace ftheat
