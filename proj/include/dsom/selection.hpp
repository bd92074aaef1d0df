#ifndef DSOM_SELECTION_HPP
#define DSOM_SELECTION_HPP

#include "dsom/core.hpp"
#include "dsom/random.hpp"

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dsom {

using Pass = std::vector<Index>;

/**
 * Staggered presentation order, generated one pass at a time.
 *
 * A front index walks up from 0 and a back index walks down from S-1. Passes
 * alternate direction, starting forward: a forward pass starts at the front
 * index and walks up (wrapping), a reverse pass starts at the back index and
 * walks down (wrapping). After each pass the index it started from moves one
 * step inward. Generation ends when the front index passes the back index,
 * which happens after exactly S passes.
 */
class StaggeredSelector {
public:
    explicit StaggeredSelector(Index sampleCount) : count_(sampleCount), back_(sampleCount - 1)
    {
        if (sampleCount < 1)
            throw InputError("staggered selection needs at least one sample");
    }

    Index sample_count() const { return count_; }
    Index pass_count() const { return count_; }
    bool done() const { return front_ > back_; }

    /// Writes the next pass into `out`; returns false once every pass has been produced.
    bool next(Pass& out)
    {
        if (done())
            return false;
        out.clear();
        out.reserve(static_cast<std::size_t>(count_));
        const Index start = reverse_ ? back_ : front_;
        Index current = start;
        do {
            out.push_back(current);
            current = reverse_ ? (current - 1 + count_) % count_ : (current + 1 + count_) % count_;
        } while (current != start);

        if (reverse_)
            --back_;
        else
            ++front_;
        reverse_ = !reverse_;
        return true;
    }

private:
    Index count_;
    Index front_ = 0;
    Index back_;
    bool reverse_ = false;
};

/// Independent uniform shuffle of 0..S-1 per pass, from SeededRandom(seed).
class RandomSelector {
public:
    RandomSelector(Index sampleCount, std::uint64_t seed) : count_(sampleCount), rng_(seed)
    {
        if (sampleCount < 1)
            throw InputError("random selection needs at least one sample");
    }

    Index sample_count() const { return count_; }

    bool next(Pass& out)
    {
        out.resize(static_cast<std::size_t>(count_));
        std::iota(out.begin(), out.end(), Index(0));
        rng_.shuffle(std::span<Index>(out));
        return true;
    }

private:
    Index count_;
    SeededRandom rng_;
};

using Selector = std::variant<StaggeredSelector, RandomSelector>;

inline bool next_pass(Selector& selector, Pass& out)
{
    return std::visit([&](auto& s) { return s.next(out); }, selector);
}

struct StaggeredPlan {
    std::vector<Pass> passes;
    int maxEpochs = 0;
};

/// All staggered passes materialized. O(S^2) memory; prefer StaggeredSelector for real data.
inline StaggeredPlan staggered_passes(Index sampleCount)
{
    StaggeredSelector selector(sampleCount);
    StaggeredPlan plan;
    Pass pass;
    while (selector.next(pass))
        plan.passes.push_back(pass);
    plan.maxEpochs = static_cast<int>(plan.passes.size());
    return plan;
}

inline std::vector<Pass> random_passes(Index sampleCount, int epochs, std::uint64_t seed)
{
    if (epochs < 1)
        throw InputError("random_passes: epochs must be >= 1");
    RandomSelector selector(sampleCount, seed);
    std::vector<Pass> passes(static_cast<std::size_t>(epochs));
    for (auto& p : passes)
        selector.next(p);
    return passes;
}

} // namespace dsom

#endif // DSOM_SELECTION_HPP
