#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenegen/nn.hpp"
#include "scenegen/scene_io.hpp"
#include "scenegen/trainer.hpp"

namespace scenegen {

inline constexpr int kCheckpointVersion = 1;

Json network_to_json(const nn::Network& net);
nn::Network network_from_json(const Json& j, const std::string& path = "network");

// Complete training state (networks, optimizer moments, latent variables,
// counters, RNG stream, loss history) as a versioned CBOR document. Doubles
// are stored exactly, so a reload resumes bit-identically.
std::vector<std::uint8_t> serialize_state(const TrainState& s);
TrainState deserialize_state(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const TrainState& s);
TrainState load_checkpoint(const std::string& path);

// "ckpt_007.bin" after seven completed outer iterations.
std::string checkpoint_name(int outer_done);

// Writes <dir>/ckpt_XXX.bin and refreshes <dir>/loss_trace.csv.
void write_training_outputs(const std::string& dir, const TrainState& s);

// Path of the checkpoint with the most completed outer iterations in dir,
// or an empty string.
std::string latest_checkpoint(const std::string& dir);

}  // namespace scenegen
