#pragma once

#include <cstddef>
#include <functional>

namespace sepda {

/// Fan-out helper for embarrassingly parallel index ranges (Monte Carlo
/// paths, finite-difference probes). Tasks must write results only to their
/// own index slot; with that contract the output is identical for any worker
/// count. A worker count of 1 runs inline on the calling thread.
class WorkerPool {
  public:
    explicit WorkerPool(int workers = 1);

    void for_index(std::size_t count, const std::function<void(std::size_t)> &fn) const;

    int size() const { return workers_; }

  private:
    int workers_;
};

} // namespace sepda
