#pragma once

#include <filesystem>

#include "sortform/nn/model.hpp"

namespace sortform::nn {

// A checkpoint is a directory holding manifest.txt and one SFM1 file per
// tensor. The manifest lists the model shape as `key value` lines followed
// by `tensor <name> <rows> <cols>` lines.
void save_checkpoint(const std::filesystem::path &dir, const ToyDiarizerParams &params);

// Throws ParseError on a malformed manifest and ValidationError when a
// tensor file disagrees with the manifest.
ToyDiarizerParams load_checkpoint(const std::filesystem::path &dir);

}  // namespace sortform::nn
