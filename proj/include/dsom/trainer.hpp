#ifndef DSOM_TRAINER_HPP
#define DSOM_TRAINER_HPP

#include "dsom/core.hpp"
#include "dsom/fingerprint.hpp"
#include "dsom/grid.hpp"
#include "dsom/random.hpp"
#include "dsom/schedule.hpp"
#include "dsom/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsom {

enum class InitKind { gradient, random };
enum class SelectKind { staggered, random };

inline const char* to_string(InitKind k) { return k == InitKind::gradient ? "gradient" : "random"; }
inline const char* to_string(SelectKind k) { return k == SelectKind::staggered ? "staggered" : "random"; }

struct GridShape {
    int rows = 1;
    int cols = 1;

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct TrainerConfig {
    /// Exactly one of these two picks the lattice size.
    std::optional<double> avgSamplesPerNode;
    std::optional<GridShape> shape;

    double initialLearningRate = 0.1;
    double base = std::numbers::e;
    InitKind init = InitKind::gradient;
    SelectKind select = SelectKind::staggered;
    std::uint64_t seed = 0;
    std::optional<int> epochCap;
    /// Stretch the gradient initialization to the per-feature data range.
    bool gradientRescale = false;

    bool deterministic() const { return init == InitKind::gradient && select == SelectKind::staggered; }

    void validate() const
    {
        if (avgSamplesPerNode.has_value() == shape.has_value())
            throw InputError("config: set exactly one of avgSamplesPerNode or explicit rows/cols");
        if (avgSamplesPerNode && !(*avgSamplesPerNode > 0.0))
            throw InputError("config: avgSamplesPerNode must be > 0");
        if (shape && (shape->rows < 1 || shape->cols < 1))
            throw InputError("config: rows and cols must be >= 1");
        if (!(initialLearningRate > 0.0 && initialLearningRate <= 1.0))
            throw InputError("config: learning rate must be in (0,1]");
        if (!(base > 1.0) || !std::isfinite(base))
            throw InputError("config: base must be > 1");
        if (epochCap && *epochCap < 1)
            throw InputError("config: epoch cap must be >= 1");
    }
};

template <typename Scalar = double>
struct TrainingRun {
    SomGrid<Scalar> grid;
    std::vector<NodeCoord> assignments;
    int epochsRun = 0;
    bool converged = false;
    std::vector<Index> perEpochChangeCounts;

    TrainerConfig config;
    DecaySchedule schedule;
    std::string dataFingerprint;
    Index sampleCount = 0;
    double initialQuantizationError = 0.0;
    double finalQuantizationError = 0.0;
    double seconds = 0.0;
};

/**
 * Lattice shape for a target number of samples per node.
 *
 * The node count round(n / avg) is factored as close to square as possible with
 * rows <= cols. A prime count above 3 has no useful factorization, so the lattice
 * becomes floor(sqrt(count)) x ceil(count / rows) and may hold a few extra nodes.
 */
inline GridShape derive_dims(Index sampleCount, double avgPerNode)
{
    if (sampleCount < 1 || !(avgPerNode > 0.0))
        throw InputError("derive_dims: need sampleCount >= 1 and avgPerNode > 0");
    const auto nodes = std::max<long long>(1, std::llround(double(sampleCount) / avgPerNode));

    long long root = static_cast<long long>(std::sqrt(double(nodes)));
    while (root * root > nodes)
        --root;
    while ((root + 1) * (root + 1) <= nodes)
        ++root;

    long long rows = root;
    while (nodes % rows != 0)
        --rows;

    if (rows == 1 && nodes > 3) {
        rows = root;
        const long long cols = (nodes + rows - 1) / rows;
        return {static_cast<int>(rows), static_cast<int>(cols)};
    }
    return {static_cast<int>(rows), static_cast<int>(nodes / rows)};
}

/// Pulls each component of `target` toward f by the fraction `amount` in [0,1].
template <typename DerivedV, typename DerivedF>
void pull_toward(Eigen::MatrixBase<DerivedV>& target, const Eigen::MatrixBase<DerivedF>& f,
                 typename DerivedV::Scalar amount)
{
    using Scalar = typename DerivedV::Scalar;
    if (amount == Scalar(1)) {
        target = f;
        return;
    }
    for (Index i = 0; i < target.size(); ++i) {
        const Scalar v = target(i);
        const Scalar to = f(i);
        const Scalar moved = v + amount * (to - v);
        // Clamp to the segment [v, to]; rounding can overshoot it.
        target(i) = std::min(std::max(moved, std::min(v, to)), std::max(v, to));
    }
}

/// v + I*L*(f - v), componentwise.
template <typename DerivedV, typename DerivedF>
FeatureVector<typename DerivedV::Scalar> update_prototype(const Eigen::MatrixBase<DerivedV>& v,
                                                          const Eigen::MatrixBase<DerivedF>& f,
                                                          double influenceFactor, double learningRate)
{
    using Scalar = typename DerivedV::Scalar;
    if (v.size() != f.size())
        throw InputError("update_prototype: length mismatch");
    if (!(influenceFactor >= 0.0 && influenceFactor <= 1.0) || !(learningRate >= 0.0 && learningRate <= 1.0))
        throw InputError("update_prototype: influence and learning rate must lie in [0,1]");
    FeatureVector<Scalar> out = v;
    pull_toward(out, f, static_cast<Scalar>(influenceFactor * learningRate));
    return out;
}

struct EpochResult {
    std::vector<NodeCoord> assignments;
    Index changeCount = 0;
};

/**
 * One online pass: for each sample in `order`, find its BMU on the current grid and
 * pull every node within R(t) of it toward the sample by I(d)*L(t).
 *
 * `assignments` holds the BMU recorded for each sample during this pass, indexed by
 * sample. `previous` is the previous epoch's record; when it is empty every sample
 * presented counts as changed.
 */
template <typename Scalar>
EpochResult train_epoch(SomGrid<Scalar>& grid, const SampleMatrix<Scalar>& samples, std::span<const Index> order,
                        int t, const DecaySchedule& schedule, std::span<const NodeCoord> previous)
{
    if (samples.rows() > 0 && samples.cols() != grid.dim())
        throw InputError("train_epoch: samples have dimension " + std::to_string(samples.cols())
                         + ", grid expects " + std::to_string(grid.dim()));
    if (!previous.empty() && static_cast<Index>(previous.size()) != samples.rows())
        throw InputError("train_epoch: previous assignments do not match sample count");

    const double radius = radius_at(t, schedule);
    const double rate = learning_rate_at(t, schedule);

    // Column b holds the pull factor I(d)*L(t) of every node when b is the BMU;
    // 0 marks nodes outside the radius.
    const Index nodes = grid.node_count();
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> pull =
        Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(nodes, nodes);
    for (Index b = 0; b < nodes; ++b)
        for (Index n = 0; n < nodes; ++n) {
            const double d = grid_distance(grid.coord_of(b), grid.coord_of(n));
            if (d <= radius)
                pull(n, b) = static_cast<Scalar>(influence(d, radius, schedule.base) * rate);
        }

    EpochResult result;
    result.assignments.assign(static_cast<std::size_t>(samples.rows()), NodeCoord{});
    BmuSearch<Scalar> search;
    for (const Index s : order) {
        if (s < 0 || s >= samples.rows())
            throw InputError("train_epoch: sample index out of range");
        const auto f = samples.row(s);
        const Index winner = search(grid, f);
        const NodeCoord coord = grid.coord_of(winner);
        result.assignments[static_cast<std::size_t>(s)] = coord;
        if (previous.empty() || previous[static_cast<std::size_t>(s)] != coord)
            ++result.changeCount;

        for (Index n = 0; n < nodes; ++n)
            if (pull(n, winner) > Scalar(0)) {
                auto proto = grid.prototypes().row(n);
                pull_toward(proto, f, pull(n, winner));
            }
    }
    return result;
}

template <typename Scalar>
std::vector<NodeCoord> label(const SomGrid<Scalar>& grid, const SampleMatrix<Scalar>& samples)
{
    std::vector<NodeCoord> out(static_cast<std::size_t>(samples.rows()));
    BmuSearch<Scalar> search;
    for (Index s = 0; s < samples.rows(); ++s)
        out[static_cast<std::size_t>(s)] = grid.coord_of(search(grid, samples.row(s)));
    return out;
}

/// Mean Euclidean distance from each sample to the prototype of its BMU.
template <typename Scalar>
double quantization_error(const SomGrid<Scalar>& grid, const SampleMatrix<Scalar>& samples)
{
    if (samples.rows() == 0)
        return 0.0;
    double total = 0.0;
    BmuSearch<Scalar> search;
    for (Index s = 0; s < samples.rows(); ++s) {
        const auto f = samples.row(s);
        total += std::sqrt(double(squared_distance(grid.prototypes().row(search(grid, f)), f)));
    }
    return total / double(samples.rows());
}

/// Copies ragged input into a sample table, rejecting empty or mixed-dimension data.
inline Samples to_samples(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty() || rows.front().empty())
        throw InputError("dataset is empty");
    const auto dim = rows.front().size();
    Samples out(static_cast<Index>(rows.size()), static_cast<Index>(dim));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != dim)
            throw InputError("dataset row " + std::to_string(r) + " has dimension " + std::to_string(rows[r].size())
                             + ", expected " + std::to_string(dim));
        for (std::size_t c = 0; c < dim; ++c)
            out(Index(r), Index(c)) = rows[r][c];
    }
    return out;
}

namespace detail {

template <typename Scalar>
SomGrid<Scalar> initial_grid(const TrainerConfig& config, const GridShape& shape, const SampleMatrix<Scalar>& samples)
{
    const FeatureVector<Scalar> lo = samples.colwise().minCoeff().transpose();
    const FeatureVector<Scalar> hi = samples.colwise().maxCoeff().transpose();
    if (config.init == InitKind::random)
        return random_init<Scalar>(shape.rows, shape.cols, samples.cols(), mix_seed(config.seed, streams::init), lo, hi);
    if (config.gradientRescale)
        return gradient_init_rescaled<Scalar>(shape.rows, shape.cols, lo, hi);
    return gradient_init<Scalar>(shape.rows, shape.cols, samples.cols());
}

} // namespace detail

/**
 * Full training run.
 *
 * The epoch budget is the sample count (one staggered pass per sample), reduced to
 * epochCap when one is set; the decay constants use that budget. Training stops at
 * the first epoch in which no sample changes its BMU, or when the budget runs out.
 * The returned assignments come from a final labeling sweep over the finished grid.
 */
template <typename Scalar>
TrainingRun<Scalar> train(const SampleMatrix<Scalar>& samples, const TrainerConfig& config)
{
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    if (samples.rows() == 0 || samples.cols() == 0)
        throw InputError("train: dataset is empty");
    if (!samples.allFinite())
        throw InputError("train: dataset contains non-finite values");

    const Index sampleCount = samples.rows();
    const GridShape shape = config.shape ? *config.shape : derive_dims(sampleCount, *config.avgSamplesPerNode);

    int maxEpochs = static_cast<int>(std::min<Index>(sampleCount, std::numeric_limits<int>::max()));
    if (config.epochCap)
        maxEpochs = std::min(maxEpochs, *config.epochCap);

    TrainingRun<Scalar> run;
    run.config = config;
    run.sampleCount = sampleCount;
    run.schedule = DecaySchedule::make(initial_radius(shape.rows, shape.cols), config.initialLearningRate, maxEpochs,
                                       config.base);
    run.dataFingerprint = data_fingerprint(samples);
    run.grid = detail::initial_grid(config, shape, samples);
    run.initialQuantizationError = quantization_error(run.grid, samples);

    Selector selector = config.select == SelectKind::staggered
        ? Selector(StaggeredSelector(sampleCount))
        : Selector(RandomSelector(sampleCount, mix_seed(config.seed, streams::selection)));

    std::vector<NodeCoord> previous;
    Pass pass;
    for (int t = 0; t < maxEpochs && next_pass(selector, pass); ++t) {
        EpochResult epoch = train_epoch(run.grid, samples, pass, t, run.schedule, previous);
        run.perEpochChangeCounts.push_back(epoch.changeCount);
        ++run.epochsRun;
        previous = std::move(epoch.assignments);
        if (epoch.changeCount == 0) {
            run.converged = true;
            break;
        }
    }

    run.assignments = label(run.grid, samples);
    run.finalQuantizationError = quantization_error(run.grid, samples);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return run;
}

} // namespace dsom

#endif // DSOM_TRAINER_HPP
