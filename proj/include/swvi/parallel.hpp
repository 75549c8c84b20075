#pragma once

#include <functional>

namespace swvi {

// Worker-thread cap: explicit setting wins, then SWVI_THREADS, then all cores.
// 0 means "all cores".
void set_max_threads(int n);
int max_threads();

// Runs body(i) for i in [0, n). Iterations must be independent; any result
// slots they write must be disjoint so the outcome cannot depend on the
// number of workers.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace swvi
