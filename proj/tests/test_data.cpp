#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "ifl/data/partition.hpp"
#include "ifl/data/sampler.hpp"
#include "ifl/data/synthetic.hpp"
#include "ifl/errors.hpp"
#include "ifl/seed.hpp"

using namespace ifl;
using namespace ifl::data;

TEST_CASE("synthetic generator is deterministic and well-ranged") {
    auto a = make_synthetic(64, 123);
    auto b = make_synthetic(64, 123);
    CHECK(bitwise_equal(a.images, b.images));
    CHECK(a.labels == b.labels);

    auto c = make_synthetic(64, 124);
    CHECK(!bitwise_equal(a.images, c.images));

    CHECK(a.images.shape == Shape{64, 1, 28, 28});
    CHECK((a.images.data >= 0.0f).all());
    CHECK((a.images.data <= 1.0f).all());
    CHECK(a.labels.size() == 64);
    for (int y : a.labels) {
        CHECK(y >= 0);
        CHECK(y < kNumClasses);
    }
    // all ten classes appear in a modest draw
    std::set<int> seen(a.labels.begin(), a.labels.end());
    CHECK(seen.size() == kNumClasses);
    validate(a);
}

TEST_CASE("label_flip changes labels but never images") {
    auto clean = make_synthetic(256, 5, 0.0);
    auto noisy = make_synthetic(256, 5, 0.3);
    CHECK(bitwise_equal(clean.images, noisy.images));

    int flips = 0;
    for (std::size_t i = 0; i < clean.labels.size(); ++i)
        if (clean.labels[i] != noisy.labels[i]) ++flips;
    CHECK(flips > 256 * 0.15);
    CHECK(flips < 256 * 0.45);

    CHECK_THROWS_AS(make_synthetic(8, 1, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic(8, 1, 1.0), std::invalid_argument);
}

TEST_CASE("validate rejects inconsistent datasets") {
    auto ds = make_synthetic(8, 1);
    CHECK_NOTHROW(validate(ds));

    auto bad_count = ds;
    bad_count.labels.pop_back();
    CHECK_THROWS_AS(validate(bad_count), DataError);

    auto bad_label = ds;
    bad_label.labels[0] = 10;
    CHECK_THROWS_AS(validate(bad_label), DataError);

    auto bad_pixel = ds;
    bad_pixel.images.data[0] = 1.5f;
    CHECK_THROWS_AS(validate(bad_pixel), DataError);

    auto bad_rank = ds;
    bad_rank.images = ds.images.reshaped({8, 28, 28});
    CHECK_THROWS_AS(validate(bad_rank), DataError);
}

TEST_CASE("take_prefix and gather") {
    auto ds = make_synthetic(10, 2);
    auto head = take_prefix(ds, 4);
    CHECK(head.size() == 4);
    CHECK(head.labels == std::vector<int>(ds.labels.begin(), ds.labels.begin() + 4));
    CHECK((head.images.data == ds.images.data.head(4 * 784)).all());

    CHECK(take_prefix(ds, 0).size() == 10);
    CHECK(take_prefix(ds, -3).size() == 10);
    CHECK(take_prefix(ds, 99).size() == 10);

    std::vector<int> idx{7, 0, 7};
    Tensorf x;
    std::vector<int> y;
    gather(ds, idx, x, y);
    CHECK(x.shape == Shape{3, 1, 28, 28});
    CHECK(y == std::vector<int>{ds.labels[7], ds.labels[0], ds.labels[7]});
    CHECK((x.data.segment(0, 784) == ds.images.data.segment(7 * 784, 784)).all());
    CHECK((x.data.segment(784, 784) == ds.images.data.segment(0, 784)).all());
}

TEST_CASE("dirichlet partition is exact and disjoint") {
    auto ds = make_synthetic(1200, 3);
    auto rng = make_rng(3, {stream::partition});
    auto part = dirichlet_partition(ds.labels, 4, 0.5, rng);
    CHECK(part.n_clients() == 4);
    CHECK(part.total() == 1200);

    std::set<int> all;
    for (const auto& shard : part.client_indices)
        for (int i : shard) {
            CHECK(i >= 0);
            CHECK(i < 1200);
            CHECK(all.insert(i).second);  // no index appears twice
        }
    CHECK(all.size() == 1200);

    // per-class counts add up across clients
    std::map<int, int> class_total;
    for (const auto& shard : part.client_indices)
        for (int i : shard) ++class_total[ds.labels[static_cast<std::size_t>(i)]];
    std::map<int, int> want;
    for (int y : ds.labels) ++want[y];
    CHECK(class_total == want);
}

TEST_CASE("huge alpha approaches a uniform split") {
    auto ds = make_synthetic(2000, 4);
    auto rng = make_rng(4, {stream::partition});
    auto part = dirichlet_partition(ds.labels, 4, 1e6, rng);
    for (const auto& shard : part.client_indices) {
        CHECK(shard.size() > 400);
        CHECK(shard.size() < 600);
    }
}

TEST_CASE("small alpha concentrates classes") {
    auto ds = make_synthetic(2000, 5);
    auto rng = make_rng(5, {stream::partition});
    auto part = dirichlet_partition(ds.labels, 4, 0.1, rng);
    // at alpha=0.1 at least one client should hold a large majority of some class
    bool concentrated = false;
    for (const auto& shard : part.client_indices) {
        std::map<int, int> counts;
        for (int i : shard) ++counts[ds.labels[static_cast<std::size_t>(i)]];
        std::map<int, int> total;
        for (int y : ds.labels) ++total[y];
        for (auto [cls, n] : counts)
            if (n > 0.8 * total[cls]) concentrated = true;
    }
    CHECK(concentrated);
}

TEST_CASE("partition validation and retry exhaustion") {
    auto ds = make_synthetic(100, 6);
    auto rng = make_rng(6, {stream::partition});
    CHECK_THROWS_AS(dirichlet_partition(ds.labels, 0, 0.5, rng), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(ds.labels, 4, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(ds.labels, 4, -1.0, rng), std::invalid_argument);

    // 100 samples cannot give 4 clients 50 each
    CHECK_THROWS_AS(dirichlet_partition(ds.labels, 4, 0.5, rng, 50), DataError);
    // ... and an unreachable floor exhausts max_attempts
    CHECK_THROWS_AS(dirichlet_partition(ds.labels, 4, 0.01, rng, 25, 3), DataError);
}

TEST_CASE("min_per_client floor holds when satisfiable") {
    auto ds = make_synthetic(4000, 7);
    auto rng = make_rng(7, {stream::partition});
    auto part = dirichlet_partition(ds.labels, 4, 0.5, rng, 64);
    for (const auto& shard : part.client_indices) CHECK(shard.size() >= 64);
}

TEST_CASE("sampler walks a permuted epoch and reshuffles") {
    std::vector<int> indices(10);
    std::iota(indices.begin(), indices.end(), 100);
    BatchSampler s(indices, 5, make_rng(1, {stream::sampler, 1}));
    CHECK(s.batch_size() == 5);
    CHECK(s.shard_size() == 10);

    auto b1 = s.next();
    auto b2 = s.next();
    std::multiset<int> epoch(b1.begin(), b1.end());
    epoch.insert(b2.begin(), b2.end());
    CHECK(epoch == std::multiset<int>(indices.begin(), indices.end()));

    // construction already shuffles: the first batch is not simply 100..104
    bool reordered = false;
    BatchSampler s2(indices, 10, make_rng(1, {stream::sampler, 2}));
    auto big = s2.next();
    for (std::size_t i = 0; i < big.size(); ++i)
        if (big[i] != indices[i]) reordered = true;
    CHECK(reordered);
    CHECK(std::multiset<int>(big.begin(), big.end()) ==
          std::multiset<int>(indices.begin(), indices.end()));

    // second epoch ordering differs from the first with high probability;
    // copy first, the span views a buffer the reshuffle permutes in place
    const std::vector<int> first_epoch(big.begin(), big.end());
    auto big2 = s2.next();
    CHECK(std::multiset<int>(big2.begin(), big2.end()) ==
          std::multiset<int>(indices.begin(), indices.end()));
    CHECK(!std::equal(first_epoch.begin(), first_epoch.end(), big2.begin()));
}

TEST_CASE("sampler drops the trailing partial batch") {
    std::vector<int> indices{1, 2, 3, 4, 5, 6, 7};
    BatchSampler s(indices, 3, make_rng(2, {stream::sampler, 1}));
    std::multiset<int> seen;
    for (int k = 0; k < 2; ++k) {
        auto b = s.next();
        REQUIRE(b.size() == 3);
        seen.insert(b.begin(), b.end());
    }
    // six of seven indices used, none twice within the epoch
    for (int i : seen) CHECK(seen.count(i) == 1);
    auto b3 = s.next();  // new epoch
    REQUIRE(b3.size() == 3);
}

TEST_CASE("sampler is deterministic in its rng") {
    std::vector<int> indices(32);
    std::iota(indices.begin(), indices.end(), 0);
    BatchSampler a(indices, 8, make_rng(9, {stream::sampler, 3}));
    BatchSampler b(indices, 8, make_rng(9, {stream::sampler, 3}));
    for (int k = 0; k < 10; ++k) {
        auto ba = a.next();
        auto bb = b.next();
        CHECK(std::equal(ba.begin(), ba.end(), bb.begin(), bb.end()));
    }
}

TEST_CASE("sampler rejects bad sizes") {
    std::vector<int> indices{1, 2, 3};
    CHECK_THROWS_AS(BatchSampler(indices, 0, std::mt19937_64(1)), std::invalid_argument);
    CHECK_THROWS_AS(BatchSampler(indices, 4, std::mt19937_64(1)), DataError);
}

TEST_CASE("next_batch gathers images for the sampled indices") {
    auto ds = make_synthetic(20, 8);
    std::vector<int> indices(20);
    std::iota(indices.begin(), indices.end(), 0);
    BatchSampler s(indices, 4, make_rng(8, {stream::sampler, 1}));
    auto [x, y] = next_batch(s, ds);
    CHECK(x.shape == Shape{4, 1, 28, 28});
    CHECK(y.size() == 4);
    for (int label : y) {
        CHECK(label >= 0);
        CHECK(label < kNumClasses);
    }
}
