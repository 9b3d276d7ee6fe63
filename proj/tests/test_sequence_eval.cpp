#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tm3/config.hpp"
#include "tm3/error.hpp"
#include "tm3/image_io.hpp"
#include "tm3/ope.hpp"
#include "tm3/sequence.hpp"
#include "tm3/synth.hpp"

using namespace tm3;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("tm3_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

std::string error_of(const std::string& text)
{
    try {
        parse_groundtruth(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("groundtruth parsing")
{
    const auto a = parse_groundtruth("1,1,10,20\n5,6,7,8\n");
    REQUIRE(a.size() == 2);
    CHECK(a[0].x == 0.0);
    CHECK(a[0].y == 0.0);
    CHECK(a[1].w == 7.0);
    CHECK(a[1].h == 8.0);

    const auto b = parse_groundtruth("1 1 10 20\r\n\n5\t6\t7\t8\n");
    REQUIRE(b.size() == 2);
    CHECK(b[1].x == a[1].x);
    CHECK(b[1].h == a[1].h);

    CHECK(error_of("1,1,10,20\n1,1,2,2\n1,1,x,2\n").find("line 3") != std::string::npos);
    CHECK(error_of("1,1,10\n").find("line 1") != std::string::npos);
}

TEST_CASE("box formatting is 1-based")
{
    CHECK(format_box({0, 9.5, 10, 20}) == "1.0000,10.5000,10.0000,20.0000");
}

TEST_CASE("OPE metrics")
{
    const std::vector<BoundingBox> truth{{0, 0, 10, 10}, {10, 10, 10, 10}, {30, 0, 20, 10}, {5, 5, 5, 5}};
    SUBCASE("perfect results")
    {
        const auto r = ope_metrics(truth, truth);
        CHECK(r.auc == doctest::Approx(1.0));
        CHECK(r.precision_at_20 == 1.0);
        CHECK(r.mean_vor == doctest::Approx(1.0));
    }
    SUBCASE("disjoint and far away")
    {
        std::vector<BoundingBox> far;
        for (const auto& b : truth) far.push_back({b.x + 200, b.y + 200, b.w, b.h});
        const auto r = ope_metrics(far, truth);
        CHECK(r.auc <= 0.01);
        CHECK(r.precision_at_20 == 0.0);
        CHECK(r.success_curve[0] == 0.0);
    }
    SUBCASE("half right")
    {
        auto mixed = truth;
        mixed[1].x += 300;
        mixed[3].y += 300;
        const auto r = ope_metrics(mixed, truth);
        for (int k = 0; k < 100; ++k) CHECK(r.success_curve[static_cast<std::size_t>(k)] == doctest::Approx(0.5));
        CHECK(r.success_curve[100] == doctest::Approx(0.5));
        CHECK(r.precision_at_20 == 0.5);
    }
    SUBCASE("curve shapes on shifted boxes")
    {
        std::vector<BoundingBox> shifted;
        for (std::size_t k = 0; k < truth.size(); ++k) shifted.push_back({truth[k].x + 2.0 * k, truth[k].y, truth[k].w, truth[k].h});
        const auto r = ope_metrics(shifted, truth);
        double vor_pos = 0.0, mean = 0.0;
        for (std::size_t k = 0; k < truth.size(); ++k) {
            vor_pos += vor(shifted[k], truth[k]) > 0.0;
            mean += vor(shifted[k], truth[k]);
        }
        CHECK(r.success_curve[0] == doctest::Approx(vor_pos / truth.size()));
        CHECK(r.mean_vor == doctest::Approx(mean / truth.size()));
        double s = 0.0;
        for (double v : r.success_curve) s += v;
        CHECK(r.auc == doctest::Approx(s / 101.0));
        for (std::size_t k = 1; k < r.success_curve.size(); ++k) CHECK(r.success_curve[k] <= r.success_curve[k - 1]);
        for (std::size_t k = 1; k < r.precision_curve.size(); ++k) CHECK(r.precision_curve[k] >= r.precision_curve[k - 1]);
        CHECK(r.precision_curve[0] == doctest::Approx(0.25));
    }
    CHECK_THROWS_AS(ope_metrics(std::vector<BoundingBox>(2), truth), ValidationError);
}

TEST_CASE("metrics CSV and SVG")
{
    std::vector<BoundingBox> truth{{0, 0, 10, 10}, {1, 1, 10, 10}};
    const auto r = ope_metrics(truth, truth);
    const auto csv = metrics_csv(r);
    CHECK(csv.rfind("metric,threshold,value\n", 0) == 0);
    CHECK(csv.find("auc,") != std::string::npos);
    CHECK(metrics_csv(r) == csv);
    CHECK(curves_svg(r, "x").find("<svg") != std::string::npos);
}

TEST_CASE("synthetic motion")
{
    SynthSpec spec;
    spec.frames = 10;
    SUBCASE("no motion keeps the box")
    {
        spec.vx = spec.vy = 0.0;
        const auto seq = synth_sequence(spec);
        for (const auto& b : seq.groundtruth) {
            CHECK(b.x == seq.groundtruth[0].x);
            CHECK(b.y == seq.groundtruth[0].y);
            CHECK(b.w == seq.groundtruth[0].w);
        }
    }
    SUBCASE("linear motion translates exactly")
    {
        spec.vx = 2.0;
        spec.vy = 0.0;
        const auto seq = synth_sequence(spec);
        for (std::size_t t = 0; t < seq.groundtruth.size(); ++t) {
            CHECK(seq.groundtruth[t].x == doctest::Approx(spec.start_x + 2.0 * t));
            CHECK(seq.groundtruth[t].y == doctest::Approx(spec.start_y));
        }
    }
    SUBCASE("scale oscillation keeps the center path")
    {
        spec.scale_amplitude = 0.1;
        spec.scale_period = 8;
        const auto seq = synth_sequence(spec);
        CHECK(seq.groundtruth[2].w == doctest::Approx(spec.target_w * 1.1));
        CHECK(seq.groundtruth[6].w == doctest::Approx(spec.target_w * 0.9));
        CHECK(seq.groundtruth[2].center().x() == doctest::Approx(spec.start_x + 20 + 2 * spec.vx));
    }
    SUBCASE("deterministic per seed")
    {
        spec.seed = 4;
        const auto a = synth_sequence(spec), b = synth_sequence(spec);
        CHECK(a.frames[5].rgb == b.frames[5].rgb);
        spec.seed = 5;
        CHECK(synth_sequence(spec).frames[5].rgb != a.frames[5].rgb);
    }
}

TEST_CASE("occluder covers the requested share of the target")
{
    SynthSpec spec;
    spec.frames = 12;
    spec.noise = 0.0;
    const auto clean = synth_sequence(spec);
    spec.occlusions.push_back({4, 7, 0.4});
    const auto occ = synth_sequence(spec);
    for (int t = 0; t < spec.frames; ++t) {
        const auto& b = occ.groundtruth[static_cast<std::size_t>(t)];
        int inside = 0, changed = 0;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                if (x + 0.5 < b.x || x + 0.5 >= b.x + b.w || y + 0.5 < b.y || y + 0.5 >= b.y + b.h) continue;
                ++inside;
                const auto& f0 = clean.frames[static_cast<std::size_t>(t)];
                const auto& f1 = occ.frames[static_cast<std::size_t>(t)];
                bool diff = false;
                for (int c = 0; c < 3; ++c) diff |= f0.at(x, y, c) != f1.at(x, y, c);
                changed += diff;
            }
        const double share = double(changed) / inside;
        if (t >= 4 && t <= 7) {
            CHECK(share >= 0.3);
            CHECK(occ.occluded_pixels[static_cast<std::size_t>(t)] >= 0.3 * occ.target_pixels[static_cast<std::size_t>(t)]);
        } else {
            CHECK(changed == 0);
        }
    }
}

TEST_CASE("synth spec parsing")
{
    const auto s = parse_synth_spec("# demo\nframes = 30\nvx = 2.5\nocclusion = 3,5,0.4\nocclusion = 10, 12, 0.3\nseed=9\n");
    CHECK(s.frames == 30);
    CHECK(s.vx == 2.5);
    CHECK(s.seed == 9);
    REQUIRE(s.occlusions.size() == 2);
    CHECK(s.occlusions[1].first == 10);
    CHECK(s.occlusions[1].coverage == doctest::Approx(0.3));
    CHECK_THROWS_AS(parse_synth_spec("colour = 3\n"), ValidationError);
    CHECK_THROWS_AS(parse_synth_spec("frames = many\n"), ValidationError);
    CHECK_THROWS_AS(parse_synth_spec("occlusion = 1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_synth_spec("frames = 1\n"), ValidationError);
}

TEST_CASE("sequence directory round trip")
{
    SynthSpec spec;
    spec.frames = 3;
    const auto seq = synth_sequence(spec);
    const auto dir = scratch_dir("roundtrip");
    write_sequence(seq, dir);
    const auto loaded = load_sequence(dir);
    REQUIRE(loaded.frames.size() == 3);
    REQUIRE(loaded.groundtruth.size() == 3);
    CHECK(loaded.name == "tm3_test_roundtrip");
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(loaded.groundtruth[k].x == doctest::Approx(seq.groundtruth[k].x).epsilon(1e-4));
        CHECK(read_image(loaded.frames[k]).rgb == seq.frames[k].rgb);
    }

    write_file(dir / "groundtruth_rect.txt", "1,1,5,5\n1,1,5,5\n");
    CHECK_THROWS_AS(load_sequence(dir), ValidationError);
    CHECK_THROWS_AS(load_sequence(dir / "missing"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("two-frame fixture")
{
    const auto dir = scratch_dir("fixture");
    fs::create_directories(dir / "img");
    Image a(8, 8, 10), b(8, 8, 200);
    write_png(dir / "img" / "0001.png", a);
    write_png(dir / "img" / "0002.png", b);
    write_file(dir / "groundtruth_rect.txt", "2\t2\t4\t4\n3\t2\t4\t4\n");
    const auto s = load_sequence(dir);
    CHECK(s.frames.size() == 2);
    CHECK(s.groundtruth.size() == 2);
    CHECK(s.groundtruth[1].x == 2.0);
    CHECK(read_image(s.frames[1]).rgb == b.rgb);

    write_file(dir / "img" / "0003.png", "not an image");
    write_file(dir / "groundtruth_rect.txt", "2,2,4,4\n3,2,4,4\n3,2,4,4\n");
    const auto s3 = load_sequence(dir);
    CHECK_THROWS_AS(read_image(s3.frames[2]), IoError);
    fs::remove_all(dir);
}

TEST_CASE("tracker config parsing")
{
    const auto cfg = parse_tracker_config("n_r = 300\n# comment\nflow_e = false\nsigma1=0.7\nseed = 12\n");
    CHECK(cfg.n_r == 300);
    CHECK_FALSE(cfg.flow_e);
    CHECK(cfg.sigma1 == 0.7);
    CHECK(cfg.seed == 12);
    CHECK(cfg.beta == 10.0);
    CHECK(parse_tracker_config("n_r = 1\nn_r = 5\n").n_r == 5);
    CHECK_THROWS_AS(parse_tracker_config("speed = 3\n"), ValidationError);
    CHECK_THROWS_AS(parse_tracker_config("n_r = lots\n"), ValidationError);
    CHECK_THROWS_AS(parse_tracker_config("n_r 3\n"), ValidationError);
    CHECK_THROWS_AS(parse_tracker_config("cap_c = 0\n"), ValidationError);
    CHECK_THROWS_AS(read_text_file("/nonexistent/tm3.cfg"), IoError);
}
