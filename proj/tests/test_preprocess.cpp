#include "perfkit/preprocess.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

using namespace perfkit;

namespace {

double affine(const Eigen::Vector3d& p)
{
    return 2.0 * p.x() + 3.0 * p.y() - p.z();
}

Volume3 affine_volume(const Grid3& g)
{
    Volume3 v(g);
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i)
                v(i, j, k) = static_cast<float>(affine(g.physical(Eigen::Vector3d(i, j, k))));
    return v;
}

Volume3 index_volume(const Index3& dims)
{
    const Grid3 g(dims, Eigen::Vector3d(0.5, 0.5, 3.0));
    Volume3 v(g);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = static_cast<float>(i + 1);
    return v;
}

} // namespace

TEST_CASE("resample_trilinear")
{
    std::mt19937_64 rng(3);

    SUBCASE("identity at the target spacing")
    {
        const Grid3 g(Index3(9, 7, 5), Eigen::Vector3d(1.0, 1.0, 3.0), Eigen::Vector3d(0.1, -3.3, 7.7));
        const Volume3 v = testing::random_volume(g, rng);
        const Volume3 out = resample_trilinear(v, Eigen::Vector3d(1.0, 1.0, 3.0));
        CHECK(compatible(out.grid(), g));
        CHECK((out.data() == v.data()).all());
    }

    SUBCASE("constant volume stays constant")
    {
        const Grid3 g(Index3(5, 6, 3), Eigen::Vector3d(0.7, 0.9, 4.5));
        const Volume3 out = resample_trilinear(Volume3(g, 12.5f), Eigen::Vector3d(1.0, 1.0, 3.0));
        CHECK((out.data() == 12.5f).all());
    }

    SUBCASE("output covers the same extent")
    {
        const Grid3 g(Index3(100, 90, 20), Eigen::Vector3d(0.6, 0.6, 3.6));
        const Volume3 out = resample_trilinear(Volume3(g), Eigen::Vector3d(1.0, 1.0, 3.0));
        CHECK(out.grid().dims == Index3(60, 54, 24));
        CHECK(out.grid().spacing == Eigen::Vector3d(1.0, 1.0, 3.0));
    }

    SUBCASE("affine field is reproduced at interior centers")
    {
        const Grid3 g(Index3(6, 6, 6), Eigen::Vector3d(2.0, 2.0, 2.0));
        const Volume3 out = resample_trilinear(affine_volume(g), Eigen::Vector3d(1.0, 1.0, 1.0));
        const Grid3& og = out.grid();
        CHECK(og.dims == Index3(12, 12, 12));
        const Eigen::Vector3d lo = g.physical(Eigen::Vector3d::Zero());
        const Eigen::Vector3d hi = g.physical((g.dims.array() - 1).cast<double>().matrix());
        int interior = 0;
        double worst = 0.0;
        for (int k = 0; k < og.dims.z(); ++k)
            for (int j = 0; j < og.dims.y(); ++j)
                for (int i = 0; i < og.dims.x(); ++i) {
                    const Eigen::Vector3d p = og.physical(Eigen::Vector3d(i, j, k));
                    if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any())
                        continue;
                    ++interior;
                    worst = std::max(worst, std::abs(out(i, j, k) - affine(p)));
                }
        CHECK(interior == 10 * 10 * 10);
        CHECK(worst <= 1e-5);
    }

    SUBCASE("output stays inside the input range")
    {
        const Grid3 g(Index3(7, 5, 4), Eigen::Vector3d(0.8, 1.3, 2.2));
        for (int trial = 0; trial < 10; ++trial) {
            const Volume3 v = testing::random_volume(g, rng, -100.0f, 100.0f);
            const Volume3 out = resample_trilinear(v, Eigen::Vector3d(1.0, 1.0, 3.0));
            CHECK(out.data().minCoeff() >= v.data().minCoeff());
            CHECK(out.data().maxCoeff() <= v.data().maxCoeff());
        }
    }

    CHECK_THROWS_AS(resample_trilinear(Volume3(Grid3()), Eigen::Vector3d(1, 0, 1)), ValidationError);
}

TEST_CASE("center_crop")
{
    SUBCASE("192x192 keeps [48, 144)")
    {
        const Volume3 v = index_volume(Index3(192, 192, 3));
        const Volume3 out = center_crop(v, Eigen::Vector2i(96, 96));
        REQUIRE(out.grid().dims == Index3(96, 96, 3));
        bool all = true;
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 96; ++j)
                for (int i = 0; i < 96; ++i)
                    all = all && out(i, j, k) == v(i + 48, j + 48, k);
        CHECK(all);
        CHECK(out.grid().origin.x() == doctest::Approx(48 * 0.5));
    }

    SUBCASE("96x96 is the identity")
    {
        const Volume3 v = index_volume(Index3(96, 96, 2));
        const Volume3 out = center_crop(v, Eigen::Vector2i(96, 96));
        CHECK(compatible(out.grid(), v.grid()));
        CHECK((out.data() == v.data()).all());
    }

    SUBCASE("90x90 pads 3 zeros per side")
    {
        const Volume3 v = index_volume(Index3(90, 90, 2));
        const Volume3 out = center_crop(v, Eigen::Vector2i(96, 96));
        bool all = true;
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 96; ++j)
                for (int i = 0; i < 96; ++i) {
                    const bool inside = i >= 3 && i < 93 && j >= 3 && j < 93;
                    const float want = inside ? v(i - 3, j - 3, k) : 0.0f;
                    all = all && out(i, j, k) == want;
                }
        CHECK(all);
    }

    SUBCASE("odd padding puts the extra voxel on the high side")
    {
        const Volume3 v = index_volume(Index3(91, 96, 1));
        const Volume3 out = center_crop(v, Eigen::Vector2i(96, 96));
        CHECK(out(1, 0, 0) == 0.0f);
        CHECK(out(2, 0, 0) == v(0, 0, 0));
        CHECK(out(92, 0, 0) == v(90, 0, 0));
        CHECK(out(93, 0, 0) == 0.0f);
        CHECK(out(95, 0, 0) == 0.0f);
    }

    SUBCASE("idempotent")
    {
        const Volume3 v = index_volume(Index3(101, 77, 2));
        const Volume3 once = center_crop(v, Eigen::Vector2i(64, 80));
        const Volume3 twice = center_crop(once, Eigen::Vector2i(64, 80));
        CHECK(compatible(once.grid(), twice.grid()));
        CHECK((once.data() == twice.data()).all());
    }
}

TEST_CASE("normalize_minmax")
{
    const Grid3 g(Index3(3, 1, 1), Eigen::Vector3d::Ones());
    Volume3::Storage values(3);
    values << -2.0f, 0.0f, 6.0f;
    const auto r = normalize_minmax(Volume3(g, values));
    CHECK_FALSE(r.degenerate);
    CHECK(r.volume[0] == 0.0f);
    CHECK(r.volume[1] == 0.25f);
    CHECK(r.volume[2] == 1.0f);

    const auto flat = normalize_minmax(Volume3(g, 4.0f));
    CHECK(flat.degenerate);
    CHECK((flat.volume.data() == 0.0f).all());

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Volume3 v = testing::random_volume(Grid3(Index3(6, 5, 4), Eigen::Vector3d::Ones()), rng, -300.0f, 900.0f);
        const Volume3 once = normalize_minmax(v).volume;
        CHECK(once.data().minCoeff() >= 0.0f);
        CHECK(once.data().maxCoeff() <= 1.0f);
        CHECK((normalize_minmax(once).volume.data() == once.data()).all());
    }
}

TEST_CASE("preprocess pipeline")
{
    std::mt19937_64 rng(4);
    const Grid3 g(Index3(160, 150, 20), Eigen::Vector3d(0.625, 0.625, 3.5));
    const Volume3 v = testing::random_volume(g, rng);
    const PreprocessConfig config;
    const Volume3 a = preprocess(v, config);
    const Volume3 b = preprocess(v, config);
    CHECK(a.grid().dims.head<2>() == Eigen::Vector2i(96, 96));
    CHECK(a.grid().spacing == Eigen::Vector3d(1.0, 1.0, 3.0));
    CHECK(a.grid().dims.z() == 24); // ceil(70 / 3)
    CHECK((a.data() == b.data()).all());
    CHECK(a.data().minCoeff() == 0.0f);
    CHECK(a.data().maxCoeff() == 1.0f);

    PreprocessConfig bad;
    bad.crop_size = Eigen::Vector2i(0, 96);
    CHECK_THROWS_AS(preprocess(v, bad), ValidationError);
}

TEST_CASE("assemble_channels")
{
    const Grid3 g(Index3(4, 4, 2), Eigen::Vector3d(1, 1, 3));
    const Volume3 t2(g, 1.0f), adc(g, 2.0f), tmax(g, 3.0f);

    const std::vector<Volume3> bp{t2, adc};
    const MultiChannel two = assemble_channels(bp);
    REQUIRE(two.channels.size() == 2);
    CHECK(two.channels[0][0] == 1.0f);
    CHECK(two.channels[1][0] == 2.0f);

    const std::vector<Volume3> mp{t2, adc, tmax};
    const MultiChannel three = assemble_channels(mp);
    CHECK(three.channels.size() == 3);
    CHECK(three.channels[2][0] == 3.0f);

    const std::vector<Volume3> mismatched{t2, Volume3(Grid3(Index3(4, 4, 3), Eigen::Vector3d(1, 1, 3)))};
    CHECK_THROWS_AS(assemble_channels(mismatched), ValidationError);
    const std::vector<Volume3> single{t2};
    CHECK_THROWS_AS(assemble_channels(single), ValidationError);
}
