#include "tvdist/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace tvdist {

ProductDistribution distribution_from_json(const Json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("expected a JSON array of rationals");
  std::vector<Rational> marginals;
  marginals.reserve(arr.size());
  for (const auto& item : arr) {
    if (item.is_string()) {
      marginals.push_back(parse_rational(item.get<std::string>()));
    } else if (item.is_number_integer()) {
      marginals.push_back(parse_rational(item.dump()));
    } else {
      throw std::invalid_argument("marginals must be rational strings or integers");
    }
  }
  return ProductDistribution(std::move(marginals));
}

Json distribution_to_json(const ProductDistribution& d) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < d.size(); ++i) arr.push_back(to_fraction_string(d[i]));
  return arr;
}

TvInstance instance_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("p") || !doc.contains("q"))
    throw std::invalid_argument("instance document must contain \"p\" and \"q\" arrays");
  return TvInstance(distribution_from_json(doc.at("p")), distribution_from_json(doc.at("q")));
}

Json instance_to_json(const TvInstance& inst) {
  Json doc = Json::object();
  doc["p"] = distribution_to_json(inst.p);
  doc["q"] = distribution_to_json(inst.q);
  return doc;
}

TvInstance read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file: " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("bad JSON in " + path + ": " + e.what());
  }
  return instance_from_json(doc);
}

void write_instance_file(const std::string& path, const TvInstance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

}  // namespace tvdist
