#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace sspde {

// Worker count: explicit setting, else SSPDE_THREADS, else hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs body(i) for i in [0, n). Each index writes only its own output slot, so
// callers reduce afterwards in index order and results do not depend on the
// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f) {
    std::vector<std::optional<T>> slots(n);
    parallel_for(n, [&](std::size_t i) { slots[i].emplace(f(i)); });
    std::vector<T> out;
    out.reserve(n);
    for (auto& v : slots) out.push_back(std::move(*v));
    return out;
}

}  // namespace sspde
