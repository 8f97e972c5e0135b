#pragma once

#include <cstddef>
#include <functional>

namespace dpdopt {

// Calls body(i) for i in [0, count) on up to `jobs` threads (0 means one
// per hardware thread). The lowest-index exception is rethrown after all
// workers stop.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace dpdopt
