#pragma once

// Versioned model checkpoints: a text header carrying the full ModelConfig
// and the parameter shape table, then the raw parameter data as little-endian
// 64-bit floats in declared order.

#include <missformer/model.hpp>

#include <string>

namespace missformer {

void save_checkpoint(const MissFormerModel& model, const std::string& path);
MissFormerModel load_checkpoint(const std::string& path);

}  // namespace missformer
