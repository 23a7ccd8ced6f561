#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "dkbo/pool_io.hpp"
#include "dkbo/synthetic.hpp"

using namespace dkbo;

namespace {

const std::filesystem::path kFixtures = DKBO_FIXTURE_DIR;

std::vector<double> sorted_labels(const CandidatePool& p) {
    std::vector<double> v(p.y().data(), p.y().data() + p.y().size());
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST(Generate, DeterministicPerSpecAndSeed) {
    for (auto g : {Generator::gp_draw, Generator::planted_clusters, Generator::linear_subspace}) {
        SyntheticSpec sp;
        sp.generator = g;
        sp.n = 50;
        sp.d = 5;
        const auto a = generate(sp), b = generate(sp);
        EXPECT_EQ(a.X(), b.X());
        EXPECT_EQ(a.y(), b.y());
        sp.seed = 2;
        EXPECT_NE(generate(sp).X(), a.X()) << to_string(g);
    }
}

TEST(Generate, ShapeIdsAndMeta) {
    SyntheticSpec sp;
    sp.generator = Generator::linear_subspace;
    sp.n = 12;
    sp.d = 7;
    sp.active_dims = 3;
    const auto p = generate(sp);
    EXPECT_EQ(p.size(), 12u);
    EXPECT_EQ(p.dim(), 7u);
    EXPECT_EQ(p.ids().front(), "c00000");
    EXPECT_EQ(p.ids().back(), "c00011");
    EXPECT_EQ(p.meta().at("generator"), "linear_subspace");
    EXPECT_EQ(SyntheticSpec::from_json(nlohmann::json::parse(p.meta().at("spec"))).to_json(), sp.to_json());
    const auto coords = p.meta().at("active_coords");
    EXPECT_EQ(std::count(coords.begin(), coords.end(), ','), 2);
}

TEST(Generate, LinearSubspaceLabelsFollowActiveCoordinates) {
    SyntheticSpec sp;
    sp.generator = Generator::linear_subspace;
    sp.n = 40;
    sp.d = 6;
    sp.noise = 0.0;
    const auto p = generate(sp);
    std::vector<Eigen::Index> coords;
    std::stringstream ss(p.meta().at("active_coords"));
    for (std::string tok; std::getline(ss, tok, ',');) coords.push_back(std::stoi(tok));
    for (Eigen::Index i = 0; i < 40; ++i) {
        double v = 0.0;
        for (auto j : coords) v += std::sin(p.X()(i, j));
        EXPECT_NEAR(p.y()(i), v, 1e-14);
    }
}

TEST(Generate, PlantedClustersWithLargeGapAreThresholdSeparable) {
    SyntheticSpec sp;
    sp.k = 2;
    sp.gap = 10.0;
    sp.center_scale = 50.0;
    sp.spread = 0.1;
    sp.n = 60;
    sp.d = 4;
    const auto p = generate(sp);
    std::vector<std::size_t> hi, lo;
    for (std::size_t i = 0; i < p.size(); ++i) (p.y()(static_cast<Eigen::Index>(i)) > 5.0 ? hi : lo).push_back(i);
    ASSERT_EQ(hi.size(), 30u);
    ASSERT_EQ(lo.size(), 30u);
    auto dist = [&](std::size_t a, std::size_t b) {
        return (p.X().row(static_cast<Eigen::Index>(a)) - p.X().row(static_cast<Eigen::Index>(b))).norm();
    };
    double within = 0.0, across = INFINITY;
    for (const auto* cls : {&hi, &lo})
        for (auto a : *cls)
            for (auto b : *cls) within = std::max(within, dist(a, b));
    for (auto a : hi)
        for (auto b : lo) across = std::min(across, dist(a, b));
    EXPECT_LT(within, across);
}

TEST(Generate, GpDrawHasRequestedScale) {
    SyntheticSpec sp;
    sp.generator = Generator::gp_draw;
    sp.n = 400;
    sp.d = 3;
    sp.signal_variance = 4.0;
    const auto p = generate(sp);
    const double var = (p.y().array() - p.y().mean()).square().mean();
    EXPECT_GT(var, 1.0);
    EXPECT_LT(var, 12.0);
}

TEST(Spec, ValidationAndJson) {
    SyntheticSpec sp;
    sp.k = 0;
    EXPECT_THROW(sp.validate(), ConfigError);
    EXPECT_THROW(SyntheticSpec::from_json({{"generator", "planted_clusters"}, {"bogus", 1}}), ConfigError);
    EXPECT_THROW(SyntheticSpec::from_json({{"generator", "nope"}}), ConfigError);
    EXPECT_THROW(SyntheticSpec::from_json({{"generator", "gp_draw"}, {"n", "ten"}}), ConfigError);
    EXPECT_THROW(SyntheticSpec::from_json(nlohmann::json::array()), ConfigError);
    const auto r = SyntheticSpec::from_json({{"generator", "gp_draw"}, {"n", 9}, {"lengthscale", 0.5}});
    EXPECT_EQ(r.generator, Generator::gp_draw);
    EXPECT_EQ(r.n, 9u);
    EXPECT_EQ(r.lengthscale, 0.5);
}

TEST(Transforms, RotationPreservesDistancesAndLabels) {
    SyntheticSpec sp;
    sp.n = 30;
    sp.d = 6;
    const auto p = generate(sp);
    const auto r = rotate(p, 11);
    EXPECT_EQ(r.y(), p.y());
    EXPECT_EQ(r.ids(), p.ids());
    EXPECT_FALSE(r.X().isApprox(p.X()));
    for (Eigen::Index i = 0; i < 30; ++i)
        for (Eigen::Index j = i + 1; j < 30; ++j)
            EXPECT_NEAR((r.X().row(i) - r.X().row(j)).norm(), (p.X().row(i) - p.X().row(j)).norm(), 1e-10);
}

TEST(Transforms, CorruptPadAndShuffle) {
    SyntheticSpec sp;
    sp.n = 30;
    sp.d = 4;
    const auto p = generate(sp);
    EXPECT_EQ(corrupt(p, 0.0, 1).X(), p.X());
    const auto c = corrupt(p, 1.0, 1);
    EXPECT_GT((c.X() - p.X()).norm(), 1.0);
    EXPECT_EQ(c.y(), p.y());

    const auto pad = pad_noise_dims(p, 3, 2.0, 1);
    EXPECT_EQ(pad.dim(), 7u);
    EXPECT_EQ(pad.X().leftCols(4), p.X());

    const auto s = shuffle_labels(p, 5);
    EXPECT_EQ(s.X(), p.X());
    EXPECT_NE(s.y(), p.y());
    EXPECT_EQ(sorted_labels(s), sorted_labels(p));
    EXPECT_EQ(shuffle_labels(p, 5).y(), s.y());
}

TEST(Fixtures, CommittedPoolsRegenerateByteForByte) {
    for (const char* name : {"planted_clusters", "gp_draw", "linear_subspace"}) {
        const auto spec_path = kFixtures / (std::string(name) + ".json");
        const auto pool_path = kFixtures / (std::string(name) + ".bin");
        ASSERT_TRUE(std::filesystem::exists(spec_path)) << spec_path;
        const auto spec = SyntheticSpec::from_json(nlohmann::json::parse(dkbo::detail::read_file(spec_path)));
        EXPECT_EQ(serialize_pool_binary(generate(spec)), dkbo::detail::read_file(pool_path)) << name;
    }
}
