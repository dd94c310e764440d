#pragma once

namespace dcmr {

/// Keeps freed activation buffers in the heap instead of returning them to
/// the kernel after every graph. Only has an effect with glibc.
void tune_allocator();

}  // namespace dcmr
