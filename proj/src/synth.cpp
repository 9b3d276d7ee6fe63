#include "tm3/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tm3/config.hpp"
#include "tm3/error.hpp"
#include "tm3/image_io.hpp"
#include "tm3/sequence.hpp"

namespace tm3 {

namespace fs = std::filesystem;

void SynthSpec::validate() const
{
    require(width >= 16 && height >= 16, "synth: image too small");
    require(frames >= 2, "synth: need at least 2 frames");
    require(target_w >= 4 && target_h >= 4, "synth: target too small");
    require(scale_amplitude >= 0.0 && scale_amplitude < 0.9, "synth: scale_amplitude must be in [0, 0.9)");
    require(scale_period > 0.0, "synth: scale_period must be positive");
    require(brightness_drift > -1.0, "synth: brightness_drift must be > -1");
    require(noise >= 0.0, "synth: noise must be non-negative");
    require(clutter >= 0, "synth: clutter must be non-negative");
    for (const auto& o : occlusions) {
        require(o.first >= 0 && o.last >= o.first, "synth: bad occlusion window");
        require(o.coverage > 0.0 && o.coverage <= 1.0, "synth: occlusion coverage must be in (0, 1]");
    }
}

namespace {

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ValidationError("synth: bad value for " + key);
    return out;
}

int to_int(const std::string& key, const std::string& v)
{
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ValidationError("synth: bad value for " + key);
    return out;
}

// Per-sequence appearance: smooth background field, clutter blobs, target texture.
struct Scene {
    double phase[6];
    double freq[6];
    struct Blob {
        double x, y, rx, ry;
        std::uint8_t color[3];
    };
    std::vector<Blob> blobs;
    static constexpr int kWaves = 3;
    struct Wave {
        double fu, fv, phase;
    };
    Wave waves[3][kWaves];
    std::uint8_t occluder[3];
};

Scene make_scene(const SynthSpec& spec)
{
    std::mt19937_64 rng(mix_seed(spec.seed, 0x5e));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s{};
    for (int k = 0; k < 6; ++k) {
        s.phase[k] = 2.0 * std::numbers::pi * u(rng);
        s.freq[k] = 0.01 + 0.03 * u(rng);
    }
    for (int k = 0; k < spec.clutter; ++k) {
        Scene::Blob b{};
        b.x = u(rng) * spec.width;
        b.y = u(rng) * spec.height;
        b.rx = 6.0 + 14.0 * u(rng);
        b.ry = 6.0 + 14.0 * u(rng);
        for (auto& c : b.color) c = static_cast<std::uint8_t>(60 + 120 * u(rng));
        s.blobs.push_back(b);
    }
    // Target texture: a few oriented color waves, so neighboring patches differ.
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < Scene::kWaves; ++k) {
            const double angle = 2.0 * std::numbers::pi * u(rng);
            const double freq = 2.0 * std::numbers::pi * (1.0 + 2.0 * u(rng));  // 1-3 cycles across the target
            s.waves[c][k] = {freq * std::cos(angle), freq * std::sin(angle), 2.0 * std::numbers::pi * u(rng)};
        }
    for (auto& c : s.occluder) c = static_cast<std::uint8_t>(90 + 40 * u(rng));
    return s;
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SynthSpec parse_synth_spec(const std::string& text)
{
    SynthSpec s;
    for (const auto& [key, v] : parse_key_values(text)) {
        if (key == "width") s.width = to_int(key, v);
        else if (key == "height") s.height = to_int(key, v);
        else if (key == "frames") s.frames = to_int(key, v);
        else if (key == "target_w") s.target_w = to_double(key, v);
        else if (key == "target_h") s.target_h = to_double(key, v);
        else if (key == "start_x") s.start_x = to_double(key, v);
        else if (key == "start_y") s.start_y = to_double(key, v);
        else if (key == "vx") s.vx = to_double(key, v);
        else if (key == "vy") s.vy = to_double(key, v);
        else if (key == "scale_amplitude") s.scale_amplitude = to_double(key, v);
        else if (key == "scale_period") s.scale_period = to_double(key, v);
        else if (key == "brightness_drift") s.brightness_drift = to_double(key, v);
        else if (key == "noise") s.noise = to_double(key, v);
        else if (key == "clutter") s.clutter = to_int(key, v);
        else if (key == "seed") s.seed = static_cast<std::uint64_t>(to_double(key, v));
        else if (key == "occlusion") {
            std::vector<std::string> parts;
            std::stringstream ss(v);
            for (std::string p; std::getline(ss, p, ',');) {
                const auto b = p.find_first_not_of(" \t"), e = p.find_last_not_of(" \t");
                parts.push_back(b == std::string::npos ? std::string{} : p.substr(b, e - b + 1));
            }
            require(parts.size() == 3, "synth: occlusion expects first,last,coverage");
            s.occlusions.push_back({to_int(key, parts[0]), to_int(key, parts[1]), to_double(key, parts[2])});
        } else
            throw ValidationError("synth: unknown key '" + key + "'");
    }
    s.validate();
    return s;
}

SynthSequence synth_sequence(const SynthSpec& spec)
{
    spec.validate();
    const Scene scene = make_scene(spec);
    SynthSequence out;

    Image background(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = 110.0 + 25.0 * std::sin(scene.freq[c] * x + scene.phase[c]) +
                                 25.0 * std::cos(scene.freq[c + 3] * y + scene.phase[c + 3]);
                background.at(x, y, c) = clamp8(v);
            }
    for (const auto& b : scene.blobs)
        for (int y = std::max(0, static_cast<int>(b.y - b.ry)); y < std::min(spec.height, static_cast<int>(b.y + b.ry) + 1); ++y)
            for (int x = std::max(0, static_cast<int>(b.x - b.rx)); x < std::min(spec.width, static_cast<int>(b.x + b.rx) + 1); ++x) {
                const double dx = (x + 0.5 - b.x) / b.rx, dy = (y + 0.5 - b.y) / b.ry;
                if (dx * dx + dy * dy <= 1.0)
                    for (int c = 0; c < 3; ++c) background.at(x, y, c) = b.color[c];
            }

    std::mt19937_64 noise_rng(mix_seed(spec.seed, 0x401));
    std::normal_distribution<double> noise(0.0, spec.noise);

    for (int t = 0; t < spec.frames; ++t) {
        const double s = 1.0 + spec.scale_amplitude * std::sin(2.0 * std::numbers::pi * t / spec.scale_period);
        const double w = spec.target_w * s, h = spec.target_h * s;
        const double cx = spec.start_x + 0.5 * spec.target_w + spec.vx * t;
        const double cy = spec.start_y + 0.5 * spec.target_h + spec.vy * t;
        const BoundingBox box{cx - 0.5 * w, cy - 0.5 * h, w, h};

        Image frame = background;
        int target_pixels = 0;
        int covered = 0;
        bool occluded = false;
        double coverage = 0.0;
        for (const auto& o : spec.occlusions)
            if (t >= o.first && t <= o.last) {
                occluded = true;
                coverage = std::max(coverage, o.coverage);
            }
        // The occluder is a bar over the left part of the target, full height.
        const double occ_x1 = box.x + coverage * box.w;

        for (int y = std::max(0, static_cast<int>(std::floor(box.y))); y < std::min(spec.height, static_cast<int>(std::ceil(box.y + box.h))); ++y)
            for (int x = std::max(0, static_cast<int>(std::floor(box.x))); x < std::min(spec.width, static_cast<int>(std::ceil(box.x + box.w))); ++x) {
                const double u = (x + 0.5 - box.x) / box.w, v = (y + 0.5 - box.y) / box.h;
                if (u < 0.0 || u >= 1.0 || v < 0.0 || v >= 1.0) continue;
                ++target_pixels;
                if (occluded && x + 0.5 < occ_x1) {
                    for (int c = 0; c < 3; ++c) frame.at(x, y, c) = scene.occluder[c];
                    ++covered;
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    double val = 0.0;
                    for (const auto& wv : scene.waves[c]) val += std::sin(wv.fu * u + wv.fv * v + wv.phase);
                    frame.at(x, y, c) = clamp8(128.0 + 120.0 * val / Scene::kWaves);
                }
            }
        // Occluder extends a little above and below the target.
        if (occluded) {
            const int y0 = std::max(0, static_cast<int>(std::floor(box.y - 0.2 * box.h)));
            const int y1 = std::min(spec.height, static_cast<int>(std::ceil(box.y + 1.2 * box.h)));
            for (int y = y0; y < y1; ++y)
                for (int x = std::max(0, static_cast<int>(std::floor(box.x - 0.1 * box.w))); x < std::min(spec.width, static_cast<int>(std::ceil(occ_x1))); ++x) {
                    if (x + 0.5 >= occ_x1) continue;
                    const double v = (y + 0.5 - box.y) / box.h, u = (x + 0.5 - box.x) / box.w;
                    if (u >= 0.0 && u < 1.0 && v >= 0.0 && v < 1.0) continue;  // already drawn
                    for (int c = 0; c < 3; ++c) frame.at(x, y, c) = scene.occluder[c];
                }
        }

        const double gain = 1.0 + spec.brightness_drift * t / (spec.frames - 1);
        for (auto& px : frame.rgb) px = clamp8(px * gain + noise(noise_rng));

        out.frames.push_back(std::move(frame));
        out.groundtruth.push_back(box);
        out.occluded_pixels.push_back(occluded ? covered : 0);
        out.target_pixels.push_back(target_pixels);
    }
    return out;
}

void write_sequence(const SynthSequence& seq, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir / "img", ec);
    if (ec) throw IoError("cannot create " + (dir / "img").string() + ": " + ec.message());
    char name[32];
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
        std::snprintf(name, sizeof name, "%04zu.png", k + 1);
        write_png(dir / "img" / name, seq.frames[k]);
    }
    std::ofstream gt(dir / "groundtruth_rect.txt");
    if (!gt) throw IoError("cannot write groundtruth in " + dir.string());
    for (const auto& b : seq.groundtruth) gt << format_box(b) << '\n';
    if (!gt) throw IoError("write failed in " + dir.string());
}

}  // namespace tm3
