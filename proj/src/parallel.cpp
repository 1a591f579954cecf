#include "fdpomm/parallel.hpp"

#include <atomic>

namespace fdpomm {

namespace {
std::atomic<std::size_t> g_threads{1};
}

std::size_t default_threads() { return g_threads.load(); }

void set_default_threads(std::size_t threads) { g_threads.store(threads == 0 ? 1 : threads); }

}  // namespace fdpomm
