#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace graphmix {

// Raised whenever an exact enumeration or evaluation would exceed its
// declared budget. Enumerations fail loudly instead of truncating.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Compensated (Kahan) accumulator; summation order is always deterministic.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// falling factorial n * (n-1) * ... * (n-k+1); k = 0 -> 1
inline double falling_factorial(std::int64_t n, int k) {
    double p = 1.0;
    for (int i = 0; i < k; ++i) p *= static_cast<double>(n - i);
    return p;
}

inline double ipow(double x, int e) {
    if (e < 0) return 1.0 / ipow(x, -e);
    double p = 1.0;
    for (int i = 0; i < e; ++i) p *= x;
    return p;
}

inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

inline std::uint64_t factorial_u64(int n) {
    std::uint64_t r = 1;
    for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
    return r;
}

// Deterministic parallel map-reduce over [0, count): work is cut into a
// fixed number of chunks regardless of thread count, each chunk is reduced
// sequentially, and chunk results are combined in index order. The result
// is therefore independent of the worker count.
inline std::vector<double> parallel_chunk_sums(
    std::int64_t count, int threads,
    const std::function<double(std::int64_t)>& term, int chunks = 64) {
    if (count <= 0) return {};
    if (chunks > count) chunks = static_cast<int>(count);
    std::vector<double> out(chunks, 0.0);
    auto run_chunk = [&](int c) {
        const std::int64_t lo = count * c / chunks;
        const std::int64_t hi = count * (c + 1) / chunks;
        KahanSum s;
        for (std::int64_t i = lo; i < hi; ++i) s.add(term(i));
        out[static_cast<std::size_t>(c)] = s.value();
    };
    if (threads <= 1) {
        for (int c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        const int per = (chunks + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * per;
            const int hi = std::min(chunks, lo + per);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (int c = lo; c < hi; ++c) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

inline double parallel_sum(std::int64_t count, int threads,
                           const std::function<double(std::int64_t)>& term) {
    KahanSum s;
    for (double v : parallel_chunk_sums(count, threads, term)) s.add(v);
    return s.value();
}

// mean and standard error of a sequence generated by term(i)
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t n = 0;
};

inline MeanSe parallel_mean_se(std::int64_t count, int threads,
                               const std::function<double(std::int64_t)>& term) {
    // one pass: accumulate sum and sum of squares per chunk
    const int chunks = static_cast<int>(
        std::min<std::int64_t>(64, std::max<std::int64_t>(1, count)));
    std::vector<double> sums(chunks, 0.0), sqs(chunks, 0.0);
    auto run_chunk = [&](int c) {
        const std::int64_t lo = count * c / chunks;
        const std::int64_t hi = count * (c + 1) / chunks;
        KahanSum s, q;
        for (std::int64_t i = lo; i < hi; ++i) {
            const double v = term(i);
            s.add(v);
            q.add(v * v);
        }
        sums[static_cast<std::size_t>(c)] = s.value();
        sqs[static_cast<std::size_t>(c)] = q.value();
    };
    if (threads <= 1) {
        for (int c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        const int per = (chunks + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * per;
            const int hi = std::min(chunks, lo + per);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (int c = lo; c < hi; ++c) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    KahanSum s, q;
    for (int c = 0; c < chunks; ++c) {
        s.add(sums[static_cast<std::size_t>(c)]);
        q.add(sqs[static_cast<std::size_t>(c)]);
    }
    MeanSe r;
    r.n = count;
    if (count == 0) return r;
    r.mean = s.value() / static_cast<double>(count);
    const double var =
        std::max(0.0, q.value() / static_cast<double>(count) - r.mean * r.mean);
    r.se = std::sqrt(var / static_cast<double>(count));
    return r;
}

}  // namespace graphmix
