#pragma once

namespace sdpg {

/// Keeps large, short-lived batch buffers on the heap instead of mapping and
/// unmapping them on every update (glibc only; a no-op elsewhere). Call once
/// at program start.
void tune_allocator();

}  // namespace sdpg
