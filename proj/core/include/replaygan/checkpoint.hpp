#pragma once

#include <string>

#include "replaygan/replay_buffer.hpp"
#include "replaygan/trainer.hpp"

namespace replaygan {

/// Single-file container: "RGCK" magic, a JSON header (schema, variant,
/// config, scaling, array manifest, buffer layout), then raw
/// little-endian doubles. The buffer travels with the model so test-time
/// generation needs no real data.
void save_checkpoint(const std::string& path, const train::ModelBundle& bundle,
                     const replay::FeatureBuffer& buffer);

struct LoadedCheckpoint {
    train::ModelBundle bundle;
    replay::FeatureBuffer buffer{1, 0};
};

/// Refuses files whose stored schema hash does not match the stored
/// schema (corruption) or, when given, the caller's expected hash.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 std::optional<std::uint64_t> expected_schema_hash = std::nullopt);

}  // namespace replaygan
