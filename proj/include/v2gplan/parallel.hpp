/*
 * Copyright (C) 2026 The v2gplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef V2GPLAN__PARALLEL_HPP
#define V2GPLAN__PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace v2gplan {

/// Runs `fn(i)` for every i in [0, n) on up to `jobs` threads. Work items are
/// claimed dynamically, so callers must write results into per-index slots;
/// the first exception thrown by any item is rethrown after all threads join.
template<typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn)
{
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]()
    {
      for (;;)
      {
        const std::size_t i = next.fetch_add(1);
        if (i >= n)
          return;
        try
        {
          fn(i);
        }
        catch (...)
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
            error = std::current_exception();
          next.store(n);
          return;
        }
      }
    };

  const auto n_threads = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t)
    threads.emplace_back(worker);
  for (auto& t : threads)
    t.join();

  if (error)
    std::rethrow_exception(error);
}

} // namespace v2gplan

#endif // V2GPLAN__PARALLEL_HPP
