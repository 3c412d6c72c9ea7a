#pragma once

namespace tanet::model {

// Construction preset shared by every network in the system: Faithful builds
// the full-size stacks, Tiny a structurally identical miniature sized for
// fast tests and desk-scale training.
enum class NetScale { Tiny, Faithful };

} // namespace tanet::model
