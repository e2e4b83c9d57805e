#include "arraycal/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace arraycal {

namespace {
std::atomic<int> g_threads{1};
}

int parallelism() { return g_threads.load(); }

void set_parallelism(int threads) { g_threads.store(std::max(1, threads)); }

}  // namespace arraycal
