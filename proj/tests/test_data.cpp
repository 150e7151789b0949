#include "hetrl/data.hpp"
#include "hetrl/errors.hpp"
#include "hetrl/experiment.hpp"
#include "hetrl/sources.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace hetrl;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("hetrl_test_" + name); }

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// Binomial(K, 1/2) pmf by the recurrence, for the exact expected kept count.
double expected_kept(int K, double T, double log_term) {
    double pmf = std::pow(0.5, K), total = 0.0;
    for (int a = 0; a <= K; ++a) {
        const double trimmed = a - T * std::sqrt(a * log_term);
        const double budget = trimmed > 0 ? std::floor(trimmed) : 0.0;
        total += pmf * std::min(budget, double(K - a));
        pmf *= double(K - a) / (a + 1);
    }
    return total;
}

} // namespace

TEST_CASE("sampling is deterministic and follows the behavior policy") {
    const BuiltinTarget t = builtin_fig2_target();
    const SourceDataset a = sample_dataset(t.mdp, t.behavior, t.init, 1000, 17, 3);
    CHECK(a == sample_dataset(t.mdp, t.behavior, t.init, 1000, 17, 3));
    CHECK(!(a == sample_dataset(t.mdp, t.behavior, t.init, 1000, 18, 3)));
    CHECK(a.source_id == 3);
    REQUIRE(a.steps.size() == 20000);

    double zeros = 0;
    for (const Step& s : a.steps) zeros += s.action == 0;
    const double n = double(a.steps.size());
    CHECK(std::abs(zeros / n - 0.2) <= 3 * std::sqrt(0.2 * 0.8 / n));

    for (int k = 0; k < a.num_trajectories; ++k)
        for (int h = 0; h + 1 < 20; ++h) REQUIRE(a.at(k, h).next_state == a.at(k, h + 1).state);

    CHECK_THROWS_AS(sample_dataset(t.mdp, t.behavior, t.init, 0, 1), InputError);
    CHECK_THROWS_AS(sample_dataset(t.mdp, t.behavior, InitDist::uniform(3), 5, 1), ShapeError);
    CHECK_THROWS_AS(sample_dataset(t.mdp, DeterministicPolicy::constant(20, 2, 25), t.init, 5, 1), ShapeError);
}

TEST_CASE("two-fold subsampling: argument checks") {
    const BuiltinTarget t = builtin_fig2_target();
    const SourceDataset one = sample_dataset(t.mdp, t.behavior, t.init, 1, 1);
    CHECK_THROWS_AS(two_fold_subsample(one, SubsampleConfig{}, 0), InputError);
    const SourceDataset two = sample_dataset(t.mdp, t.behavior, t.init, 2, 1);
    CHECK_THROWS_AS(two_fold_subsample(two, SubsampleConfig{10.0, 1.5, 1}, 0), InputError);
    CHECK_THROWS_AS(two_fold_subsample(two, SubsampleConfig{10.0, 0.05, 0}, 0), InputError);
}

TEST_CASE("two-fold subsampling: expected kept count matches the binomial split") {
    // One state, one action, H = 1: N_aux ~ Bin(K, 1/2) and the kept count is
    // min(budget(N_aux), K - N_aux).
    const EpisodicMdp m(Shape{1, 1, 1}, numvec{1.0}, numvec{0.5});
    const auto pi = DeterministicPolicy::constant(1, 1, 0);
    const int K = 40;
    for (double T : {0.0, 0.3}) {
        const SubsampleConfig cfg{T, 0.05, 1};
        const double exact = expected_kept(K, T, std::log(K / 0.05));
        double sum = 0.0, sum_sq = 0.0;
        const int reps = 4000;
        for (int r = 0; r < reps; ++r) {
            const SourceDataset ds = sample_dataset(m, pi, InitDist::uniform(1), K, 1000 + r);
            const double kept = double(two_fold_subsample(ds, cfg, 5000 + r).samples.size());
            sum += kept;
            sum_sq += kept * kept;
        }
        const double mean = sum / reps;
        const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
        CHECK(std::abs(mean - exact) <= 4 * se + 1e-9);
    }
}

TEST_CASE("two-fold subsampling keeps a subset and shrinks with the trim constant") {
    const BuiltinTarget t = builtin_fig2_target();
    for (int r = 0; r < 100; ++r) {
        const SourceDataset ds = sample_dataset(t.mdp, t.behavior, t.init, 200, 77 + r);
        const VisitCounts full = count_visits(ds);
        std::int64_t prev = std::numeric_limits<std::int64_t>::max();
        for (double T : {0.0, 0.05, 0.2, 1.0}) {
            const TransitionSet sub = two_fold_subsample(ds, SubsampleConfig{T, 0.05, 4}, 9 + r);
            const VisitCounts c = count_visits(sub);
            std::int64_t total = 0;
            for (std::size_t i = 0; i < c.sa.size(); ++i) {
                REQUIRE(c.sa[i] <= full.sa[i]);
                total += c.sa[i];
            }
            for (std::size_t i = 0; i < c.sas.size(); ++i) REQUIRE(c.sas[i] <= full.sas[i]);
            REQUIRE(total <= prev);
            prev = total;
        }
        CHECK(two_fold_subsample(ds, SubsampleConfig{0.0, 0.05, 4}, 9 + r).samples.size() <= ds.steps.size() / 2 + 40);
    }
}

TEST_CASE("visit counting identities") {
    const EpisodicMdp m = random_mdp(Shape{3, 3, 2}, 4);
    const SourceDataset ds = sample_dataset(m, MixedPolicy::uniform(3, 3, 2), InitDist::uniform(3), 300, 2);
    const VisitCounts c = count_visits(ds);
    const Shape& sh = m.shape();
    for (int h = 0; h < 3; ++h) {
        std::int64_t step_total = 0;
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) {
                step_total += c.n(h, s, a);
                std::int64_t next_total = 0;
                for (int n = 0; n < 3; ++n) next_total += c.n(h, s, a, n);
                CHECK(next_total == c.n(h, s, a));
                if (c.n(h, s, a) > 0) {
                    CHECK(c.reward_lo[sh.sa(h, s, a)] == m.reward(h, s, a));
                    CHECK(c.reward_hi[sh.sa(h, s, a)] == m.reward(h, s, a));
                    CHECK(c.reward_sum[sh.sa(h, s, a)] == doctest::Approx(c.n(h, s, a) * m.reward(h, s, a)));
                }
            }
        CHECK(step_total == 300);
    }
    const VisitCounts via_flatten = count_visits(flatten(ds));
    CHECK(via_flatten.sa == c.sa);
    CHECK(via_flatten.sas == c.sas);
}

TEST_CASE("aggregation of per-source models") {
    const Shape sh{1, 2, 2};
    TransitionSet s0{0, sh, {{0, {0, 0, 0.4, 0}}, {0, {0, 0, 0.4, 1}}}};
    TransitionSet s1{1, sh, {{0, {0, 0, 0.8, 1}}, {0, {1, 1, 0.1, 0}}}};
    const std::vector<VisitCounts> counts{count_visits(s0), count_visits(s1)};
    const AggregatedModel agg = aggregate_model(counts);

    CHECK(agg.num_active[std::size_t(sh.sa(0, 0, 0))] == 2);
    CHECK(agg.reward[std::size_t(sh.sa(0, 0, 0))] == doctest::Approx(0.6));
    const auto row = agg.transition_row(0, 0, 0);
    CHECK(row[0] == doctest::Approx(0.25));
    CHECK(row[1] == doctest::Approx(0.75));
    CHECK(agg.p_min[std::size_t(sh.sa(0, 0, 0))] == doctest::Approx(0.25));
    CHECK(agg.source_visits(0, 0, 0)[0] == 2);
    CHECK(agg.source_visits(0, 0, 0)[1] == 1);

    CHECK(agg.num_active[std::size_t(sh.sa(0, 1, 1))] == 1);
    CHECK(!agg.active(0, 1, 1, 0));
    CHECK(agg.transition_row(0, 1, 1)[0] == 1.0);

    // never visited: sentinel row and zero reward
    CHECK(agg.num_active[std::size_t(sh.sa(0, 0, 1))] == 0);
    CHECK(agg.reward[std::size_t(sh.sa(0, 0, 1))] == 0.0);
    CHECK(agg.transition_row(0, 0, 1)[0] == 0.5);
    CHECK(agg.p_min[std::size_t(sh.sa(0, 0, 1))] == 0.0);

    TransitionSet bad{0, sh, {{0, {0, 0, 0.4, 0}}, {0, {0, 0, 0.5, 0}}}};
    const std::vector<VisitCounts> bad_counts{count_visits(bad)};
    CHECK_THROWS_AS(aggregate_model(bad_counts), DataIntegrityError);

    const std::vector<VisitCounts> mixed{count_visits(s0), VisitCounts(Shape{2, 2, 2})};
    CHECK_THROWS_AS(aggregate_model(mixed), ShapeError);
}

TEST_CASE("dataset CSV round trip and validation") {
    const BuiltinTarget t = builtin_fig2_target();
    std::vector<SourceDataset> ds;
    for (int l = 0; l < 3; ++l) ds.push_back(sample_dataset(t.mdp, t.behavior, t.init, 7, 100 + l, l));
    const fs::path p = temp_file("ds.csv");
    write_dataset_csv(p, ds);
    CHECK(read_dataset_csv(p, t.mdp.shape()) == ds);

    const ZeroSumGame g = random_game(3, 2, 2, 3, 1);
    const SourceDataset gd = sample_dataset(g.joint(), MixedPolicy::uniform(3, 2, 6), InitDist::uniform(2), 5, 3);
    const fs::path pg = temp_file("game.csv");
    write_dataset_csv(pg, std::vector<SourceDataset>{gd}, 3);
    {
        std::ifstream in(pg);
        std::string header;
        std::getline(in, header);
        CHECK(header == "source_id,trajectory,step,s,a1,a2,r,s_next");
    }
    CHECK(read_dataset_csv(pg, g.joint().shape(), 3) == std::vector<SourceDataset>{gd});

    const Shape small{2, 2, 2};
    const std::string header = "source_id,trajectory,step,s,a,r,s_next\n";
    const fs::path bad = temp_file("bad.csv");
    write_text(bad, "source,trajectory,step,s,a,r,s_next\n0,0,0,0,0,0.5,1\n0,0,1,1,0,0.5,0\n");
    CHECK_THROWS_AS(read_dataset_csv(bad, small), InputError);
    write_text(bad, header + "0,0,0,0,0,0.5,1\n");
    CHECK_THROWS(read_dataset_csv(bad, small)); // missing step 1
    write_text(bad, header + "0,0,0,0,0,0.5,1\n0,0,1,0,0,0.5,0\n");
    CHECK_THROWS(read_dataset_csv(bad, small)); // s_next does not continue
    write_text(bad, header + "0,0,0,0,5,0.5,1\n0,0,1,1,0,0.5,0\n");
    CHECK_THROWS(read_dataset_csv(bad, small)); // action out of range
    write_text(bad, header + "0,0,0,0,0,0.5\n");
    CHECK_THROWS(read_dataset_csv(bad, small));
    write_text(bad, header + "0,0,0,0,0,0.5,1\n0,0,1,1,0,0.5,0\n");
    CHECK(read_dataset_csv(bad, small).size() == 1);
    CHECK_THROWS(read_dataset_csv(temp_file("does_not_exist.csv"), small));
    fs::remove(p);
    fs::remove(pg);
    fs::remove(bad);
}
