#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"

#include "eigenspline/solvers.hpp"

namespace eigenspline {

/// FitResult as JSON: method, kernel id, lambda and its source, d, c or b,
/// basis metadata (representer points, Nystrom subset and W^{-1/2}, or the
/// eigenbasis rank plus cache reference), fitted values and a GML summary.
nlohmann::json fit_to_json(const FitResult& fit);

/// Inverse of fit_to_json. A cache-backed EIGEN fit needs `cache`, whose
/// CRC-32 must match the one recorded in the JSON (ArgumentError otherwise).
FitResult fit_from_json(const nlohmann::json& j,
                        std::shared_ptr<const EigenSystemCache> cache = nullptr);

/// Cache reference recorded in a fit JSON, empty if none.
std::string fit_cache_path(const nlohmann::json& j);

nlohmann::json gml_to_json(const GmlTrace& trace);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace eigenspline
