#include "pomap/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pomap {

std::size_t worker_count_from_env()
{
   const char* value = std::getenv("POMAP_WORKERS");
   if (!value) return 1;
   try {
      const long parsed = std::stol(value);
      return parsed > 0 ? static_cast<std::size_t>(parsed) : 1;
   } catch (...) {
      return 1;
   }
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body)
{
   if (workers <= 1 || count <= 1) {
      for (std::size_t k = 0; k < count; ++k) body(k);
      return;
   }
   const std::size_t threads = std::min(workers, count);
   std::vector<std::exception_ptr> errors(threads);
   std::vector<std::thread> pool;
   pool.reserve(threads);
   for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
         try {
            for (std::size_t k = w; k < count; k += threads) body(k);
         } catch (...) {
            errors[w] = std::current_exception();
         }
      });
   }
   for (auto& t : pool) t.join();
   for (auto& e : errors)
      if (e) std::rethrow_exception(e);
}

} // namespace pomap
