#include "helpers.hpp"

#include "resilinet/desk.hpp"
#include "resilinet/errors.hpp"

#include <algorithm>
#include <doctest.h>
#include <fstream>

using namespace resilinet;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("IDX round trip scales bytes to [0, 1]")
{
    const auto dir = testutil::temp_dir("idx");
    const std::vector<std::uint8_t> pixels{0, 255, 51, 102, 1, 2, 3, 4};
    write_idx_images(dir / "img", 2, 2, 2, pixels);
    write_idx_labels(dir / "lbl", std::vector<std::uint8_t>{3, 9});
    const auto ds = load_dataset({DatasetFormat::Idx, {dir / "img", dir / "lbl"}}, 10, Split::Test);
    CHECK(ds.size() == 2);
    CHECK(ds.images.shape() == Shape{2, 1, 2, 2});
    CHECK(ds.images[1] == 1.0f);
    CHECK(ds.images[2] == 51.0f / 255.0f);
    CHECK(ds.labels == std::vector<std::int32_t>{3, 9});
}

TEST_CASE("IDX magic and label range are checked")
{
    const auto dir = testutil::temp_dir("idx_bad");
    write_idx_images(dir / "img", 1, 2, 2, std::vector<std::uint8_t>(4));
    write_idx_labels(dir / "lbl", std::vector<std::uint8_t>{7});
    CHECK_THROWS_AS(load_dataset({DatasetFormat::Idx, {dir / "lbl", dir / "img"}}, 10, Split::Train), FormatError);
    CHECK_THROWS_AS(load_dataset({DatasetFormat::Idx, {dir / "img", dir / "lbl"}}, 5, Split::Train), FormatError);
    CHECK_THROWS_AS(load_dataset({DatasetFormat::Idx, {dir / "img", dir / "missing"}}, 10, Split::Train), IoError);
}

TEST_CASE("CIFAR binary records, one or two label bytes")
{
    const auto dir = testutil::temp_dir("cifar");
    std::vector<std::uint8_t> rec10(1 + 3072, 10);
    rec10[0] = 4;
    std::vector<std::uint8_t> two(rec10.size() * 2);
    std::copy(rec10.begin(), rec10.end(), two.begin());
    std::copy(rec10.begin(), rec10.end(), two.begin() + 3073);
    two[3073] = 6;
    write_bytes(dir / "b10", two);
    const auto ds = load_dataset({DatasetFormat::Cifar10, {dir / "b10"}}, 10, Split::Train);
    CHECK(ds.images.shape() == Shape{2, 3, 32, 32});
    CHECK(ds.labels == std::vector<std::int32_t>{4, 6});

    std::vector<std::uint8_t> rec100(2 + 3072, 0);
    rec100[0] = 1;   // coarse
    rec100[1] = 77;  // fine
    write_bytes(dir / "b100", rec100);
    CHECK(load_dataset({DatasetFormat::Cifar100, {dir / "b100"}}, 100, Split::Test).labels[0] == 77);
    write_bytes(dir / "short", std::vector<std::uint8_t>(100));
    CHECK_THROWS_AS(load_dataset({DatasetFormat::Cifar10, {dir / "short"}}, 10, Split::Test), FormatError);
}

TEST_CASE("normalisation is applied per channel")
{
    const auto dir = testutil::temp_dir("norm");
    write_idx_images(dir / "img", 1, 1, 2, std::vector<std::uint8_t>{0, 255});
    write_idx_labels(dir / "lbl", std::vector<std::uint8_t>{0});
    const auto ds = load_dataset({DatasetFormat::Idx, {dir / "img", dir / "lbl"}}, 2, Split::Test, {{0.5f}, {0.25f}});
    CHECK(ds.images[0] == -2.0f);
    CHECK(ds.images[1] == 2.0f);
}

TEST_CASE("subset and gather keep sample order")
{
    const auto m = testutil::random_mlp(3, 2, 2, 1);
    const auto ds = testutil::random_dataset(m, 5, 4);
    const std::size_t idx[] = {4, 1};
    const auto sub = ds.subset(idx);
    CHECK(sub.size() == 2);
    CHECK(sub.labels[0] == ds.labels[4]);
    CHECK(sub.images[0] == ds.images[12]);
    CHECK(sub.images[3] == ds.images[3]);
}

TEST_CASE("glyph sets are deterministic, balanced and distinct per seed")
{
    const auto a = make_glyphs({200, 16, 5});
    const auto b = make_glyphs({200, 16, 5});
    const auto c = make_glyphs({200, 16, 6});
    CHECK(a.pixels == b.pixels);
    CHECK(a.labels == b.labels);
    CHECK(a.pixels != c.pixels);
    std::vector<int> counts(10);
    for (const auto l : a.labels) ++counts[l];
    for (const int n : counts) CHECK(n == 20);
    const auto ds = a.to_dataset(Split::Train);
    CHECK(ds.images.shape() == Shape{200, 1, 16, 16});
}

}
