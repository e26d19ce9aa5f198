#pragma once

#include <string>

#include <json.hpp>

#include <jpac/deflation.hpp>
#include <jpac/formulation.hpp>
#include <jpac/netmodel.hpp>
#include <jpac/timescale.hpp>

namespace jpac {

/// Format tag written into every document; readers reject other tags.
inline constexpr const char* kFormatVersion = "jpac/1";

// Matrices are stored row-major as flat arrays next to their shape.
// kappa = +inf is written as the string "inf".

nlohmann::json to_json(const NetworkInstance& inst);
NetworkInstance instance_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const GainSampleSet& samples);
GainSampleSet samples_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const NormalizedProblem& prob);
NormalizedProblem problem_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const AdmissionOutcome& outcome);
nlohmann::json to_json(const TwoTimescaleReport& report, bool with_records = false);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

} // namespace jpac
