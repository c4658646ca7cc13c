#ifndef TVDIST_JSON_IO_HPP
#define TVDIST_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include "tvdist/instances.hpp"

namespace tvdist {

using Json = nlohmann::ordered_json;

// Instance document: {"p": ["3/4", "0.5", ...], "q": [...]}. Rationals are
// "num/den" strings, integers, or decimals with at most 18 fractional
// digits, parsed exactly.
TvInstance instance_from_json(const Json& doc);
Json instance_to_json(const TvInstance& inst);

TvInstance read_instance_file(const std::string& path);
void write_instance_file(const std::string& path, const TvInstance& inst);

ProductDistribution distribution_from_json(const Json& arr);
Json distribution_to_json(const ProductDistribution& d);

}  // namespace tvdist

#endif
