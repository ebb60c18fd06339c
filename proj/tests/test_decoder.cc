#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srnn/decoder.h"
#include "srnn/oracle.h"
#include "srnn/rng.h"
#include "srnn/segcrf.h"

using namespace srnn;

namespace {

ScoreLattice random_lattice(int T, int L, int V, Rng& rng) {
    ScoreLattice lat(T, L, V);
    for (double& v : lat.raw()) v = rng.uniform(-2.0, 2.0);
    return lat;
}

}  // namespace

TEST_CASE("single-frame lattice decodes to the best single segment") {
    ScoreLattice lat(1, 1, 3);
    lat.at(0, 1, 0) = 0.5;
    lat.at(0, 1, 1) = 2.0;
    lat.at(0, 1, 2) = -1.0;
    DecodeResult r = decode_joint(lat);
    CHECK(r.labels == LabelSequence{{1}});
    CHECK(r.segmentation == Segmentation{{0, 1}});
    CHECK(r.score == 2.0);

    DecodeResult h = decode_marginal_hybrid(lat);
    CHECK(h.labels == r.labels);
    CHECK(h.score == r.score);
    CHECK(h.mode == DecodeMode::kMarginalHybrid);
}

TEST_CASE("all-equal scores pick unit segments with label 0") {
    ScoreLattice lat(4, 3, 2);  // all scores zero
    DecodeResult r = decode_joint(lat);
    CHECK(r.segmentation == Segmentation{{0, 1, 2, 3, 4}});
    CHECK(r.labels == LabelSequence{{0, 0, 0, 0}});
    CHECK(r.score == 0.0);
}

TEST_CASE("joint decode equals brute-force argmax on a grid") {
    Rng rng(121);
    for (int T = 1; T <= 6; ++T) {
        for (int L = 1; L <= T; ++L) {
            for (int V = 1; V <= 3; ++V) {
                for (int rep = 0; rep < 3; ++rep) {
                    ScoreLattice lat = random_lattice(T, L, V, rng);
                    DecodeResult dp = decode_joint(lat);
                    oracle::BruteBest brute = oracle::brute_argmax(lat);
                    CHECK(dp.score == brute.score);  // same summation order
                    CHECK(dp.labels == brute.labels);
                    CHECK(dp.segmentation == brute.seg);
                }
            }
        }
    }
}

TEST_CASE("joint decode matches brute force under engineered ties") {
    // Quantized scores force plenty of exact ties.
    Rng rng(131);
    for (int rep = 0; rep < 40; ++rep) {
        int T = 2 + static_cast<int>(rng.uniform_int(0, 3));
        int L = 1 + static_cast<int>(rng.uniform_int(0, T - 1));
        int V = 1 + static_cast<int>(rng.uniform_int(0, 1));
        ScoreLattice lat(T, L, V);
        for (double& v : lat.raw()) v = static_cast<double>(rng.uniform_int(0, 1));
        DecodeResult dp = decode_joint(lat);
        oracle::BruteBest brute = oracle::brute_argmax(lat);
        CHECK(dp.score == brute.score);
        CHECK(dp.labels == brute.labels);
        CHECK(dp.segmentation == brute.seg);
    }
}

TEST_CASE("joint score never exceeds the partition") {
    Rng rng(137);
    for (int rep = 0; rep < 30; ++rep) {
        ScoreLattice lat = random_lattice(5, 3, 2, rng);
        CHECK(decode_joint(lat).score <= log_partition(lat) + 1e-12);
    }
}

TEST_CASE("hybrid score upper-bounds the joint score") {
    Rng rng(139);
    for (int rep = 0; rep < 30; ++rep) {
        ScoreLattice lat = random_lattice(6, 4, 3, rng);
        DecodeResult joint = decode_joint(lat);
        DecodeResult hybrid = decode_marginal_hybrid(lat);
        CHECK(hybrid.score >= joint.score - 1e-12);
        CHECK(validate_segmentation(*hybrid.segmentation, 6, 4).ok);
    }
}

TEST_CASE("hybrid labels match joint when one label dominates") {
    Rng rng(149);
    ScoreLattice lat = random_lattice(5, 3, 3, rng);
    for (int t = 1; t <= 5; ++t)
        for (int k = lat.min_start(t); k < t; ++k) {
            lat.at(k, t, 1) = 5.0 + lat.at(k, t, 1);  // label 1 dominates
        }
    DecodeResult joint = decode_joint(lat);
    DecodeResult hybrid = decode_marginal_hybrid(lat);
    CHECK(joint.labels == hybrid.labels);
    for (int y : joint.labels.labels) CHECK(y == 1);
}

TEST_CASE("duration-shift invariance of both decoders") {
    Rng rng(151);
    for (double c : {-1.0, 0.5, 3.0}) {
        ScoreLattice lat = random_lattice(6, 3, 2, rng);
        ScoreLattice shifted = lat;
        for (int t = 1; t <= 6; ++t)
            for (int k = lat.min_start(t); k < t; ++k)
                for (int y = 0; y < 2; ++y) shifted.at(k, t, y) += c * (t - k);
        DecodeResult j0 = decode_joint(lat), j1 = decode_joint(shifted);
        CHECK(j0.labels == j1.labels);
        CHECK(j0.segmentation == j1.segmentation);
        DecodeResult h0 = decode_marginal_hybrid(lat), h1 = decode_marginal_hybrid(shifted);
        CHECK(h0.labels == h1.labels);
        CHECK(h0.segmentation == h1.segmentation);
    }
}

TEST_CASE("boosting one label weakly increases its count") {
    Rng rng(157);
    for (int rep = 0; rep < 20; ++rep) {
        ScoreLattice lat = random_lattice(6, 3, 3, rng);
        auto count_label = [](const DecodeResult& r, int y) {
            int n = 0;
            for (int l : r.labels.labels) n += l == y;
            return n;
        };
        int before = count_label(decode_joint(lat), 1);
        for (int t = 1; t <= 6; ++t)
            for (int k = lat.min_start(t); k < t; ++k) lat.at(k, t, 1) += 0.7;
        int after = count_label(decode_joint(lat), 1);
        CHECK(after >= before);
    }
}

TEST_CASE("joint result score equals the sum of its segment scores") {
    Rng rng(163);
    ScoreLattice lat = random_lattice(6, 4, 2, rng);
    DecodeResult r = decode_joint(lat);
    REQUIRE(r.segmentation.has_value());
    double acc = 0.0;
    for (int j = 0; j < r.segmentation->num_segments(); ++j)
        acc += lat.at(r.segmentation->start(j), r.segmentation->end(j),
                      r.labels.labels[j]);
    CHECK(acc == r.score);
}
