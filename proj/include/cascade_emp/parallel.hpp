#ifndef CASCADE_EMP_PARALLEL_HPP
#define CASCADE_EMP_PARALLEL_HPP

#include <exception>
#include <mutex>

namespace cascade_emp
{

/// Thread count for an OpenMP region: values <= 0 mean the runtime default.
int resolve_threads(int threads);

/// Captures the first exception thrown inside an OpenMP loop body so it can
/// be rethrown after the region ends.
class ExceptionSlot
{
public:
    template <class F>
    void run(F&& body) noexcept
    {
        try {
            body();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_)
                error_ = std::current_exception();
        }
    }

    void rethrow() const
    {
        if (error_)
            std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

} // namespace cascade_emp

#endif
