#include "tm3/sequence.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "tm3/config.hpp"
#include "tm3/error.hpp"

namespace tm3 {

namespace fs = std::filesystem;

std::vector<BoundingBox> parse_groundtruth(const std::string& text)
{
    std::vector<BoundingBox> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t' || c == '\r'; }, ' ');
        std::istringstream fields(line);
        std::vector<double> v;
        std::string tok;
        while (fields >> tok) {
            double x = 0.0;
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
            if (ec != std::errc{} || p != tok.data() + tok.size())
                throw ValidationError("groundtruth line " + std::to_string(lineno) + ": bad number '" + tok + "'");
            v.push_back(x);
        }
        if (v.empty()) continue;
        if (v.size() != 4)
            throw ValidationError("groundtruth line " + std::to_string(lineno) + ": expected 4 values, got " +
                                  std::to_string(v.size()));
        out.push_back({v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
    }
    return out;
}

SequenceBundle load_sequence(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    const fs::path img = dir / "img";
    if (!fs::is_directory(img)) throw IoError("missing img/ in " + dir.string());

    SequenceBundle seq;
    seq.name = fs::absolute(dir).lexically_normal().filename().string();
    if (seq.name.empty()) seq.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    for (const auto& entry : fs::directory_iterator(img)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") seq.frames.push_back(entry.path());
    }
    std::sort(seq.frames.begin(), seq.frames.end());

    seq.groundtruth = parse_groundtruth(read_text_file(dir / "groundtruth_rect.txt"));
    require(seq.frames.size() == seq.groundtruth.size(),
            "frame count " + std::to_string(seq.frames.size()) + " does not match groundtruth count " +
                std::to_string(seq.groundtruth.size()));
    require(seq.frames.size() >= 2, "a sequence needs at least 2 frames");
    require(seq.groundtruth.front().valid(), "first groundtruth box is invalid");
    return seq;
}

std::string format_box(const BoundingBox& box)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f", box.x + 1.0, box.y + 1.0, box.w, box.h);
    return buf;
}

}  // namespace tm3
