#include "helpers.hpp"

#include "resilinet/desk.hpp"
#include "resilinet/engine.hpp"
#include "resilinet/errors.hpp"
#include "resilinet/hardening.hpp"
#include "resilinet/model_io.hpp"
#include "resilinet/pruning.hpp"

#include <bit>
#include <cmath>
#include <doctest.h>
#include <limits>
#include <nlohmann/json.hpp>

using namespace resilinet;

namespace {

std::vector<std::uint8_t> container(const nlohmann::json& manifest, std::size_t blob_floats, std::uint32_t version = 1)
{
    const std::string text = manifest.dump();
    std::vector<std::uint8_t> out{'N', 'N', 'H', 'M'};
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(version >> (8 * i)));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(std::uint64_t{text.size()} >> (8 * i)));
    out.insert(out.end(), text.begin(), text.end());
    out.resize(out.size() + 4 * blob_floats, 0);
    return out;
}

nlohmann::json fc_manifest(std::size_t count)
{
    return {{"format", "NNHM"},
            {"version", 1},
            {"input_shape", {2}},
            {"num_classes", 5},
            {"layers", {{{"kind", "fully_connected"}, {"in_features", 2}, {"out_features", 5}, {"has_bias", false}}}},
            {"tensors", {{{"layer", 0}, {"name", "weight"}, {"shape", {5, 2}}, {"offset", 0}, {"count", count}}}},
            {"hardening", nullptr}};
}

std::string error_of(const std::vector<std::uint8_t>& bytes)
{
    try {
        deserialize_model(bytes);
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("round trip preserves every bit, including NaN payloads")
{
    auto m = make_desk_cnn({}, 4);
    m.layers[0].params[slot::weight][0] = std::bit_cast<float>(0x7FC01234u);
    m.layers[0].params[slot::weight][1] = -std::numeric_limits<float>::infinity();
    m.layers[0].params[slot::weight][2] = std::bit_cast<float>(0x00000001u);
    const auto back = deserialize_model(serialize_model(m));
    CHECK(bitwise_equal(m, back));
    CHECK(back.input_shape == m.input_shape);
    CHECK(back.num_classes == m.num_classes);
    CHECK_FALSE(back.hardening.has_value());
}

TEST_CASE("hardened models carry their plan and correction layers")
{
    const auto m = testutil::random_cnn(6);
    const auto ds = testutil::random_dataset(m, 8, 1);
    const auto plan = make_hardening_plan(m, l1_scores(m), 0.5, HardeningMode::Duplicate, IntervalScope::DuplicatedOnly);
    const auto h = harden_model(m, plan, profile_intervals(m, ds));
    const auto dir = testutil::temp_dir("io_hardened");
    save_model(h, dir / "h.nnhm");
    const auto back = load_model(dir / "h.nnhm");
    CHECK(bitwise_equal(h, back));
    REQUIRE(back.hardening.has_value());
    CHECK(*back.hardening == plan);
}

TEST_CASE("distinct diagnostics for malformed containers")
{
    CHECK(error_of(container(fc_manifest(10), 10)).empty());
    auto bad_magic = container(fc_manifest(10), 10);
    bad_magic[0] = 'X';
    CHECK(error_of(bad_magic).find("not an NNHM container") != std::string::npos);
    CHECK(error_of(container(fc_manifest(10), 10, 2)).find("version") != std::string::npos);
    CHECK(error_of(container(fc_manifest(10), 8)).find("truncated blob") != std::string::npos);
    CHECK(error_of(container(fc_manifest(9), 10)).find("shape/blob-length mismatch") != std::string::npos);
    auto unknown = fc_manifest(10);
    unknown["layers"][0]["kind"] = "attention";
    CHECK(error_of(container(unknown, 10)).find("unknown layer kind") != std::string::npos);
    CHECK(error_of({'N', 'N'}).find("truncated") != std::string::npos);
}

TEST_CASE("interval CSV round-trips exactly")
{
    IntervalTable t;
    t.layers[0] = {{-1.25f, 0.1f, -std::numeric_limits<float>::infinity()}, {3.0f, 1e-30f, 7.0f}};
    t.layers[4] = {{0.3333333432674408f}, {123456.789f}};
    const auto dir = testutil::temp_dir("io_intervals");
    write_intervals_csv(t, dir / "iv.csv");
    const auto back = read_intervals_csv(dir / "iv.csv");
    REQUIRE(back.layers.size() == 2);
    for (const auto& [layer, iv] : t.layers) {
        const auto& b = back.layers.at(layer);
        for (std::size_t c = 0; c < iv.lower.size(); ++c) {
            CHECK(std::bit_cast<std::uint32_t>(b.lower[c]) == std::bit_cast<std::uint32_t>(iv.lower[c]));
            CHECK(std::bit_cast<std::uint32_t>(b.upper[c]) == std::bit_cast<std::uint32_t>(iv.upper[c]));
        }
    }
}

TEST_CASE("argmax ties and NaN resolve to the lowest index")
{
    const float tie[] = {1.0f, 3.0f, 3.0f};
    CHECK(argmax_row(tie) == 1);
    const float nan_first[] = {std::nanf(""), 2.0f, 1.0f};
    CHECK(argmax_row(nan_first) == 1);
    const float all_nan[] = {std::nanf(""), std::nanf("")};
    CHECK(argmax_row(all_nan) == 0);
}

TEST_CASE("profiled intervals bound every raw channel output")
{
    const auto m = testutil::random_cnn(7);
    const auto ds = testutil::random_dataset(m, 20, 2);
    const auto table = profile_intervals(m, ds);
    CHECK(table.layers.size() == channel_layers(m).size());
    forward_observed(m, ds.images, [&](std::size_t li, const Tensor& out) {
        if (!is_channel_layer(m.layers[li].spec.kind)) return;
        const auto& iv = table.layers.at(li);
        const std::size_t c = out.dim(1);
        const std::size_t plane = out.size() / (out.dim(0) * c);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::size_t ch = (i / plane) % c;
            CHECK(in_interval(out[i], iv.lower[ch], iv.upper[ch]));
        }
    });
}

}
