#include "dsom/trainer.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <random>

using namespace dsom;

namespace {

/// Four tight clusters around the corners of a tetrahedron-like set in 5 dimensions.
struct Clusters {
    Samples samples;
    std::vector<int> labels;
};

Clusters four_clusters(Index perCluster, double spread, std::uint64_t seed)
{
    const double centers[4][5] = {
        {0.1, 0.1, 0.1, 0.9, 0.5}, {0.9, 0.1, 0.9, 0.1, 0.5}, {0.1, 0.9, 0.9, 0.1, 0.2}, {0.9, 0.9, 0.1, 0.9, 0.8}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    Clusters out;
    out.samples.resize(4 * perCluster, 5);
    for (Index i = 0; i < 4 * perCluster; ++i) {
        const int k = static_cast<int>(i % 4);
        out.labels.push_back(k);
        for (Index j = 0; j < 5; ++j)
            out.samples(i, j) = centers[k][j] + noise(rng);
    }
    return out;
}

double purity(const std::vector<NodeCoord>& assignments, const std::vector<int>& labels)
{
    std::map<NodeCoord, std::map<int, int>> tally;
    for (std::size_t i = 0; i < labels.size(); ++i)
        ++tally[assignments[i]][labels[i]];
    int majority = 0;
    for (const auto& [node, counts] : tally) {
        int best = 0;
        for (const auto& [label, n] : counts)
            best = std::max(best, n);
        majority += best;
    }
    return double(majority) / double(labels.size());
}

TrainerConfig shaped(int rows, int cols)
{
    TrainerConfig c;
    c.shape = GridShape{rows, cols};
    return c;
}

std::vector<oracle::Vec> rows_of(const Eigen::MatrixXd& m)
{
    std::vector<oracle::Vec> out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            out[r][c] = m(r, c);
    return out;
}

} // namespace

TEST_CASE("derive_dims examples")
{
    CHECK(derive_dims(120, 10) == GridShape{3, 4});
    CHECK(derive_dims(10, 10) == GridShape{1, 1});
    CHECK(derive_dims(100, 1) == GridShape{10, 10});
    CHECK(derive_dims(3, 10) == GridShape{1, 1});
    CHECK(derive_dims(7, 1) == GridShape{2, 4});
    CHECK(derive_dims(3, 1) == GridShape{1, 3});
    CHECK_THROWS_AS(derive_dims(0, 1), InputError);
    CHECK_THROWS_AS(derive_dims(10, 0), InputError);
}

TEST_CASE("derive_dims agrees with divisor enumeration")
{
    for (long n = 1; n <= 1500; ++n) {
        CAPTURE(n);
        const auto shape = derive_dims(n, 1.0);
        REQUIRE(shape.rows <= shape.cols);
        const auto [r, c] = oracle::square_factorization(n);
        const bool prime = r == 1 && n > 3;
        if (prime) {
            const long root = static_cast<long>(std::floor(std::sqrt(double(n))));
            REQUIRE(shape.rows == root);
            REQUIRE(shape.cols == (n + root - 1) / root);
            REQUIRE(long(shape.rows) * shape.cols >= n);
        } else {
            REQUIRE(shape.rows == r);
            REQUIRE(shape.cols == c);
        }
    }
}

TEST_CASE("update_prototype examples")
{
    const Eigen::Vector2d v(0, 0), f(1, 1);
    CHECK(update_prototype(v, f, 1.0, 0.5) == Eigen::Vector2d(0.5, 0.5));
    CHECK(update_prototype(v, f, 1.0, 0.0) == v);
    CHECK(update_prototype(Eigen::Vector2d(0.3, -7.1), Eigen::Vector2d(0.1 + 0.2, 1e-9), 1.0, 1.0)
          == Eigen::Vector2d(0.1 + 0.2, 1e-9));
    CHECK_THROWS_AS(update_prototype(v, Eigen::Vector3d(1, 1, 1), 1.0, 0.5), InputError);
    CHECK_THROWS_AS(update_prototype(v, f, 1.5, 0.5), InputError);
    CHECK_THROWS_AS(update_prototype(v, f, 0.5, -0.1), InputError);
}

TEST_CASE("update_prototype keeps every component between v and f")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> value(-1e6, 1e6), unit(0.0, 1.0);
    std::uniform_int_distribution<int> exponent(-300, 300);
    for (int trial = 0; trial < 20000; ++trial) {
        Eigen::VectorXd v(3), f(3);
        for (Index i = 0; i < 3; ++i) {
            v(i) = value(rng) * std::pow(10.0, exponent(rng) / 100);
            f(i) = value(rng) * std::pow(10.0, exponent(rng) / 100);
        }
        const double influenceFactor = unit(rng), rate = trial % 7 == 0 ? 1.0 : unit(rng);
        const auto out = update_prototype(v, f, influenceFactor, rate);
        for (Index i = 0; i < 3; ++i) {
            REQUIRE(out(i) >= std::min(v(i), f(i)));
            REQUIRE(out(i) <= std::max(v(i), f(i)));
        }
    }
}

TEST_CASE("train_epoch examples")
{
    SUBCASE("single node moves by L(t)")
    {
        SomGrid<double> g(1, 1, 2);
        Samples s(1, 2);
        s << 1.0, 2.0;
        const auto sched = DecaySchedule::make(0.5, 0.1, 10);
        const std::vector<Index> order{0};
        const auto r = train_epoch(g, s, order, 3, sched, {});
        const double l = learning_rate_at(3, sched);
        CHECK(g.prototypes()(0, 0) == doctest::Approx(l * 1.0).epsilon(1e-15));
        CHECK(g.prototypes()(0, 1) == doctest::Approx(l * 2.0).epsilon(1e-15));
        CHECK(r.changeCount == 1);
        CHECK(r.assignments.front() == NodeCoord{1, 1});
    }
    SUBCASE("empty pass leaves the grid alone")
    {
        auto g = gradient_init(2, 3, 4);
        const auto before = g;
        Samples s(0, 4);
        const auto r = train_epoch(g, s, std::span<const Index>{}, 0, DecaySchedule::make(1.0, 0.1, 1), {});
        CHECK(g == before);
        CHECK(r.changeCount == 0);
    }
    SUBCASE("stable samples on a two-node map")
    {
        SomGrid<double> g(1, 2, 2);
        g.prototypes() << 0.0, 0.0, 10.0, 10.0;
        const auto before = g;
        Samples s(2, 2);
        s << 0.0, 0.0, 10.0, 10.0;
        // R0 = 0.5 keeps the other node outside every neighborhood.
        const auto sched = DecaySchedule::make(0.5, 0.01, 5);
        const std::vector<Index> order{0, 1};
        const std::vector<NodeCoord> previous{{1, 1}, {1, 2}};
        const auto r = train_epoch(g, s, order, 0, sched, previous);
        CHECK(r.changeCount == 0);
        CHECK(r.assignments == previous);
        CHECK(g == before);
    }
    SUBCASE("neighbor inside the radius is pulled by I(d)*L(t)")
    {
        SomGrid<double> g(1, 2, 1);
        g.prototypes() << 0.0, 10.0;
        Samples s(1, 1);
        s << 1.0;
        const auto sched = DecaySchedule::make(1.0, 0.2, 5);
        const std::vector<Index> order{0};
        train_epoch(g, s, order, 0, sched, {});
        CHECK(g.prototypes()(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
        const double pull = std::exp(-0.5) * 0.2;
        CHECK(g.prototypes()(1, 0) == doctest::Approx(10.0 + pull * (1.0 - 10.0)).epsilon(1e-14));
    }
    SUBCASE("dimension mismatch")
    {
        auto g = gradient_init(2, 2, 3);
        Samples s(1, 2);
        s << 0.0, 0.0;
        const std::vector<Index> order{0};
        CHECK_THROWS_AS(train_epoch(g, s, order, 0, DecaySchedule::make(1.0, 0.1, 1), {}), InputError);
    }
}

TEST_CASE("train_epoch agrees with a direct transcription of the update rules")
{
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> side(1, 5), dims(1, 6), count(1, 25);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = side(rng), cols = side(rng);
        const Index dim = dims(rng), n = count(rng);
        SomGrid<double> g(rows, cols, dim);
        for (Index k = 0; k < g.prototypes().size(); ++k)
            g.prototypes().data()[k] = unit(rng);
        Samples s(n, dim);
        for (Index k = 0; k < s.size(); ++k)
            s.data()[k] = unit(rng);
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index(0));
        std::shuffle(order.begin(), order.end(), rng);
        const auto sched = DecaySchedule::make(initial_radius(rows, cols), 0.1 + 0.8 * unit(rng), 10);
        const int t = trial % 11;

        auto protos = rows_of(g.prototypes());
        const std::vector<long> orderL(order.begin(), order.end());
        const auto winners = oracle::naive_epoch(protos, cols, rows_of(s), orderL, radius_at(t, sched),
                                                 learning_rate_at(t, sched), sched.base);
        const auto result = train_epoch(g, s, order, t, sched, {});

        for (Index i = 0; i < n; ++i)
            REQUIRE(g.index_of(result.assignments[i]) == Index(winners[i]));
        for (Index k = 0; k < g.node_count(); ++k)
            for (Index j = 0; j < dim; ++j)
                REQUIRE(g.prototypes()(k, j) == doctest::Approx(protos[k][j]).epsilon(1e-12));
    }
}

TEST_CASE("train is deterministic")
{
    const auto data = four_clusters(30, 0.05, 5);
    auto config = shaped(3, 3);
    const auto a = train(data.samples, config);
    const auto b = train(data.samples, config);
    CHECK(a.grid == b.grid);
    CHECK(a.assignments == b.assignments);
    CHECK(a.epochsRun == b.epochsRun);
    CHECK(a.perEpochChangeCounts == b.perEpochChangeCounts);
    CHECK(a.dataFingerprint == b.dataFingerprint);
    // The seed plays no part in the deterministic mode.
    config.seed = 999;
    CHECK(train(data.samples, config).grid == a.grid);
}

TEST_CASE("train on identical samples")
{
    Samples s = Samples::Constant(25, 4, 0.3);
    const auto run = train(s, shaped(3, 3));
    CHECK(run.converged);
    CHECK(run.epochsRun <= 25);
    for (const auto& a : run.assignments)
        CHECK(a == run.assignments.front());
    // The winner ends at least as close to the sample as it started.
    const auto initial = gradient_init(3, 3, 4);
    const Index w = run.grid.index_of(run.assignments.front());
    CHECK(squared_distance(run.grid.prototypes().row(w), s.row(0))
          <= squared_distance(initial.prototypes().row(w), s.row(0)));
    CHECK(run.finalQuantizationError <= run.initialQuantizationError);
}

TEST_CASE("train separates well-separated clusters on a 2x2 map")
{
    const auto synth = testing::draw_clouds(testing::block_centroids(4, 0.35), 2000, 0.005, 1, 1, 8);
    const auto run = train(synth.dataset.features(), shaped(2, 2));
    CHECK(purity(run.assignments, synth.labels) == 1.0);
    std::set<NodeCoord> used(run.assignments.begin(), run.assignments.end());
    CHECK(used.size() == 4);
    CHECK(run.converged);
}

TEST_CASE("run invariants across configurations")
{
    const auto data = four_clusters(15, 0.08, 21);
    for (InitKind init : {InitKind::gradient, InitKind::random})
        for (SelectKind select : {SelectKind::staggered, SelectKind::random})
            for (std::optional<int> cap : {std::optional<int>{}, std::optional<int>{3}}) {
                auto config = shaped(2, 3);
                config.init = init;
                config.select = select;
                config.seed = 4;
                config.epochCap = cap;
                CAPTURE(to_string(init));
                CAPTURE(to_string(select));
                const auto run = train(data.samples, config);
                CHECK(run.assignments.size() == std::size_t(data.samples.rows()));
                CHECK(run.epochsRun <= run.schedule.maxEpochs);
                CHECK(run.schedule.maxEpochs == (cap ? *cap : 60));
                CHECK(run.perEpochChangeCounts.size() == std::size_t(run.epochsRun));
                CHECK(run.perEpochChangeCounts.front() == data.samples.rows());
                if (run.converged) {
                    const auto first = std::find(run.perEpochChangeCounts.begin(), run.perEpochChangeCounts.end(), 0);
                    CHECK(first - run.perEpochChangeCounts.begin() + 1 == run.epochsRun);
                } else {
                    CHECK(run.epochsRun == run.schedule.maxEpochs);
                }
                CHECK(run.finalQuantizationError <= run.initialQuantizationError);
                CHECK(run.assignments == label(run.grid, data.samples));
                CHECK(run.finalQuantizationError == doctest::Approx(quantization_error(run.grid, data.samples)));
            }
}

TEST_CASE("seeded baseline runs are reproducible")
{
    const auto data = four_clusters(20, 0.1, 3);
    auto config = shaped(3, 3);
    config.init = InitKind::random;
    config.select = SelectKind::random;
    config.seed = 17;
    const auto a = train(data.samples, config);
    const auto b = train(data.samples, config);
    CHECK(a.grid == b.grid);
    CHECK(a.assignments == b.assignments);
    config.seed = 18;
    CHECK_FALSE(train(data.samples, config).grid == a.grid);
}

TEST_CASE("avg-per-node derives the map")
{
    const auto data = four_clusters(30, 0.05, 1);
    TrainerConfig config;
    config.avgSamplesPerNode = 10.0;
    const auto run = train(data.samples, config);
    CHECK(run.grid.rows() == 3);
    CHECK(run.grid.cols() == 4);
}

TEST_CASE("train rejects bad input")
{
    CHECK_THROWS_AS(train(Samples(0, 3), shaped(2, 2)), InputError);
    Samples bad = Samples::Zero(3, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(bad, shaped(2, 2)), InputError);
    CHECK_THROWS_AS(to_samples({{1.0, 2.0}, {3.0}}), InputError);
    CHECK_THROWS_AS(to_samples({}), InputError);

    const Samples zeros = Samples::Zero(3, 2);
    TrainerConfig both = shaped(2, 2);
    both.avgSamplesPerNode = 4.0;
    CHECK_THROWS_AS(train(zeros, both), InputError);
    CHECK_THROWS_AS(train(zeros, TrainerConfig{}), InputError);
    auto rate = shaped(2, 2);
    rate.initialLearningRate = 0.0;
    CHECK_THROWS_AS(train(zeros, rate), InputError);
    auto cap = shaped(2, 2);
    cap.epochCap = 0;
    CHECK_THROWS_AS(train(zeros, cap), InputError);
}

TEST_CASE("data fingerprint")
{
    CHECK(sha256_hex(std::string("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string()) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    Samples a = Samples::Zero(2, 3), b = Samples::Zero(3, 2);
    CHECK(data_fingerprint(a) != data_fingerprint(b));
    Samples c = a;
    c(1, 2) = -0.0;
    CHECK(data_fingerprint(a) != data_fingerprint(c));
    CHECK(data_fingerprint(a) == data_fingerprint(Samples(Samples::Zero(2, 3))));
}
