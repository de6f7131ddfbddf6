#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "onn/modelzoo.hpp"

namespace onn {

struct LoadedCheckpoint {
  ModelGraph graph;
  std::uint64_t schema_hash = 0;
};

// Layout documented in docs/FORMATS.md. Round-trips every parameter and BN statistic exactly.
void save_checkpoint(ModelGraph& graph, std::uint64_t schema_hash, std::ostream& out);
void save_checkpoint(ModelGraph& graph, std::uint64_t schema_hash, const std::string& path);

LoadedCheckpoint load_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::string& path);
// Also rejects checkpoints written against a different schema.
ModelGraph load_checkpoint(const std::string& path, const FeatureSchema& schema);

}  // namespace onn
