#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srnn/oracle.h"
#include "srnn/rng.h"

using namespace srnn;
using namespace srnn::oracle;

namespace {

ScoreLattice random_lattice(int T, int L, int V, Rng& rng, double lo = -2.0,
                            double hi = 2.0) {
    ScoreLattice lat(T, L, V);
    for (double& v : lat.raw()) v = rng.uniform(lo, hi);
    return lat;
}

}  // namespace

TEST_CASE("enumeration counts") {
    CHECK(enumerate_segmentations(3, 3).size() == 4);
    CHECK(enumerate_segmentations(4, 1).size() == 1);
    // Steps {1,2} give the Fibonacci-like count: F(5) = 8.
    CHECK(enumerate_segmentations(5, 2).size() == 8);

    // Counts match the analytic recurrence.
    for (int T = 1; T <= 8; ++T)
        for (int L = 1; L <= T; ++L)
            CHECK(enumerate_segmentations(T, L).size() ==
                  static_cast<size_t>(count_segmentations(T, L)));
}

TEST_CASE("enumeration respects the budget") {
    EnumerationBudget tight;
    tight.max_T = 4;
    CHECK_THROWS_AS(enumerate_segmentations(5, 5, tight), Error);
    ScoreLattice big(6, 6, 3);
    EnumerationBudget small_pairs;
    small_pairs.max_pairs = 10;
    CHECK_THROWS_AS(brute_log_partition(big, small_pairs), Error);
}

TEST_CASE("analytic pair counts") {
    // T=4, V=2, L=4: sum_J C(3, J-1) * 2^J = 2 + 12 + 24 + 16 = 54.
    CHECK(count_labeled_paths(4, 4, 2) == 54.0);
    CHECK(count_labeled_paths(2, 2, 2) == 6.0);
    CHECK(std::exp(log_count_labeled_paths(4, 4, 2)) == doctest::Approx(54.0));
    CHECK(count_segmentations_with_parts(5, 3, 5) == doctest::Approx(6.0));  // C(4,2)
    CHECK(std::exp(log_count_segmentations_with_parts(5, 3, 5)) == doctest::Approx(6.0));
    // With a clamp: T=6 J=2 L=4 -> durations (2,4),(3,3),(4,2) = 3.
    CHECK(count_segmentations_with_parts(6, 2, 4) == 3.0);
}

TEST_CASE("all-zero scores give ln of pair count") {
    ScoreLattice lat(2, 2, 2);  // scores all zero
    CHECK(brute_log_partition(lat) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("partition equals lse over clamped sums of all label sequences") {
    Rng rng(11);
    ScoreLattice lat = random_lattice(4, 3, 2, rng);
    // Enumerate all label sequences of every feasible length 1..T.
    std::vector<double> parts;
    for (int J = 1; J <= 4; ++J) {
        std::vector<int> y(J, 0);
        while (true) {
            auto r = brute_log_clamped(lat, LabelSequence{y});
            if (r.feasible) parts.push_back(r.log_z);
            int i = J - 1;
            while (i >= 0 && ++y[i] == 2) y[i--] = 0;
            if (i < 0) break;
        }
    }
    double m = parts[0];
    for (double p : parts) m = std::max(m, p);
    double s = 0;
    for (double p : parts) s += std::exp(p - m);
    CHECK(brute_log_partition(lat) == doctest::Approx(m + std::log(s)).epsilon(1e-10));
}

TEST_CASE("clamped sum infeasible cases") {
    ScoreLattice lat(3, 3, 2);
    CHECK_FALSE(brute_log_clamped(lat, LabelSequence{{0, 1, 0, 1}}).feasible);  // J > T
    ScoreLattice clamped(4, 1, 2);
    CHECK_FALSE(brute_log_clamped(clamped, LabelSequence{{0}}).feasible);  // J*L < T
}

TEST_CASE("posteriors sum to expected segment counts") {
    Rng rng(13);
    ScoreLattice lat = random_lattice(4, 4, 2, rng);
    auto post = brute_segment_posteriors(lat);
    for (const auto& [key, p] : post) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0 + 1e-12);
    }
    // Sum over (k,t,y) of posteriors = E[#segments]; for each t, the
    // probability that t is a boundary is <= 1; total within (0, T].
    double total = 0;
    for (const auto& [key, p] : post) total += p;
    CHECK(total > 1.0 - 1e-9);
    CHECK(total <= 4.0 + 1e-9);

    // Conditioned on a label sequence, per-position boundary mass with J
    // segments sums to exactly J.
    LabelSequence y{{1, 0}};
    auto cpost = brute_segment_posteriors(lat, &y);
    double ctotal = 0;
    for (const auto& [key, p] : cpost) ctotal += p;
    CHECK(ctotal == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("argmax score accumulates left to right") {
    Rng rng(17);
    ScoreLattice lat = random_lattice(5, 3, 2, rng);
    BruteBest best = brute_argmax(lat);
    double acc = 0.0;
    for (int j = 0; j < best.seg.num_segments(); ++j)
        acc += lat.at(best.seg.start(j), best.seg.end(j), best.labels.labels[j]);
    CHECK(acc == best.score);  // bit-equal by construction
    CHECK(validate_segmentation(best.seg, 5, 3).ok);
}
