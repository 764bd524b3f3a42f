#pragma once

#include <cstddef>
#include <functional>

namespace nwfr {

// Number of worker threads used by parallel_for. 0 means hardware
// concurrency. Reads NWFR_WORKERS once on first use unless set explicitly.
void set_workers(int n);
int workers();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one
// per worker. Callers must write results into per-index slots only; with
// that discipline results are independent of the worker count. The first
// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nwfr
