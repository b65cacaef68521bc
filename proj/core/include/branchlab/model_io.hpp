#pragma once

#include <cstdint>
#include <string>

#include "branchlab/harness.hpp"
#include "branchlab/limit_sde.hpp"
#include "branchlab/model.hpp"

namespace branchlab {

// Model descriptions are accepted as JSON (canonical) or a TOML subset;
// matrices and vectors are row-major nested arrays. Parse errors carry
// line/field context in the message.
BranchingModel load_model(const std::string& path);  // dispatches on extension
BranchingModel parse_model_json(const std::string& text);
BranchingModel parse_model_toml(const std::string& text);

// Canonical JSON (sorted keys, moments omitted — they are derived).
std::string model_to_json(const BranchingModel& m);

// FNV-1a over the canonical JSON; stable across runs and platforms.
std::uint64_t model_hash(const BranchingModel& m);

std::string structure_to_json(const CyclicStructure& s);
std::string validation_to_json(const ValidationReport& v);
std::string coefficients_to_json(const SdeCoefficients& c);
std::string report_to_json(const ConvergenceReport& r);

// {"structure": ... or null, "validation": ...} for the analyze command.
std::string analysis_to_json(const BranchingModel& m, const ValidationReport& v);

// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

// Standard "# key=value" comment header carried by every emitted file. The
// timestamp line is informational and excluded from determinism comparisons.
struct MetadataHeader {
    std::string command;
    std::uint64_t seed = 0;
    std::uint64_t hash = 0;
};
std::string metadata_header(const MetadataHeader& h);

// Injects the same metadata into a JSON document as a top-level "_meta"
// object (JSON files cannot carry comment headers).
std::string with_meta(const std::string& json_doc, const MetadataHeader& h);

}  // namespace branchlab
