#pragma once

// Binary checkpoint: the model (architecture manifest, weights, PWLU units,
// running statistics, reservoirs, phase flags) plus the trainer state.
// The byte layout is documented in docs/checkpoint_format.md.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "pwlu/nn/model.hpp"
#include "pwlu/nn/trainer.hpp"

namespace pwlu::nn {

inline constexpr char kCheckpointMagic[8] = {'P', 'W', 'L', 'U',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  TrainerState state;
};

void write_checkpoint(std::ostream& out, Model& model,
                      const TrainerState& state);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, Model& model,
                     const TrainerState& state);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pwlu::nn
