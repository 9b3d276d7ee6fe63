// tm3: track, evaluate, synthesize sequences and check the score statistics.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tm3/config.hpp"
#include "tm3/error.hpp"
#include "tm3/image_io.hpp"
#include "tm3/ope.hpp"
#include "tm3/sequence.hpp"
#include "tm3/synth.hpp"
#include "tm3/theory.hpp"
#include "tm3/tracker.hpp"

namespace fs = std::filesystem;
using namespace tm3;

namespace {

constexpr const char* kVersion = "0.3.0";

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string result_line(std::size_t frame, const BoundingBox& box, double confidence, const char* cue)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, ",%.6f,", confidence);
    return std::to_string(frame) + "," + format_box(box) + buf + cue + "\n";
}

int run_track(const fs::path& seq_dir, const std::optional<fs::path>& config, const fs::path& out,
              std::optional<std::uint64_t> seed)
{
    TrackerConfig cfg;
    if (config) cfg = parse_tracker_config(read_text_file(*config));
    if (seed) cfg.seed = *seed;
    const SequenceBundle seq = load_sequence(seq_dir);

    Tracker tracker(cfg);
    tracker.initialize(read_image(seq.frames.front()), seq.groundtruth.front());
    std::string csv = "frame,x,y,w,h,confidence,cue\n";
    csv += result_line(1, seq.groundtruth.front(), 0.0, "init");
    for (std::size_t k = 1; k < seq.frames.size(); ++k) {
        const FrameResult r = tracker.track(read_image(seq.frames[k]));
        csv += result_line(k + 1, r.box, r.confidence, r.lost ? "lost" : cue_name(r.cue_origin));
    }
    write_file(out, csv);
    return 0;
}

std::vector<BoundingBox> read_results(const fs::path& path)
{
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    require(line.rfind("frame,x,y,w,h", 0) == 0, "results file lacks the frame,x,y,w,h header");
    std::string boxes;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        std::string f, x, y, w, h;
        if (!std::getline(fields, f, ',') || !std::getline(fields, x, ',') || !std::getline(fields, y, ',') ||
            !std::getline(fields, w, ',') || !std::getline(fields, h, ','))
            throw ValidationError("results line " + std::to_string(lineno) + ": expected frame,x,y,w,h");
        boxes += x + "," + y + "," + w + "," + h + "\n";
    }
    return parse_groundtruth(boxes);
}

int run_eval(const fs::path& results, const fs::path& seq_dir, const fs::path& out,
             const std::optional<fs::path>& plot)
{
    const SequenceBundle seq = load_sequence(seq_dir);
    const std::vector<BoundingBox> boxes = read_results(results);
    const OpeReport rep = ope_metrics(boxes, seq.groundtruth);
    write_file(out, metrics_csv(rep));
    if (plot) write_file(*plot, curves_svg(rep, seq.name));
    std::printf("%s: auc %.4f  precision@20 %.4f  mean VOR %.4f\n", seq.name.c_str(), rep.auc, rep.precision_at_20,
                rep.mean_vor);
    return 0;
}

int run_synth(const fs::path& spec_file, const fs::path& out, std::optional<std::uint64_t> seed)
{
    SynthSpec spec = parse_synth_spec(read_text_file(spec_file));
    if (seed) spec.seed = *seed;
    write_sequence(synth_sequence(spec), out);
    return 0;
}

int run_verify(std::int64_t trials, std::uint64_t seed, int n, int m, double sigma1, const fs::path& out)
{
    const auto g = theory::DistributionSpec::gaussian(0.0, 1.0);
    const theory::TheoryReport rep = theory::mc_estimate(g, g, n, m, sigma1, trials, seed);
    const theory::QuadratureResult quad = theory::quadrature_expectation(g, g, n, m, sigma1);
    const theory::Lemma3Verdict l3 = theory::verify_lemma3(rep, quad);
    const theory::Theorem1Verdict t1 = theory::verify_theorem1(rep);

    std::ostringstream csv;
    char buf[160];
    csv << "quantity,value,stderr\n";
    const auto row = [&](const char* name, double v, double se) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g\n", name, v, se);
        csv << buf;
    };
    const auto est = [&](const char* name, const theory::Estimate& e) { row(name, e.value, e.stderr_); };
    row("n", n, 0);
    row("m", m, 0);
    row("sigma1", sigma1, 0);
    row("trials", static_cast<double>(trials), 0);
    est("e_mbs", rep.e_mbs);
    est("e_mbs2", rep.e_mbs2);
    est("e_bbs", rep.e_bbs);
    est("e_bbs2", rep.e_bbs2);
    est("v_mbs", rep.v_mbs);
    est("v_bbs", rep.v_bbs);
    est("lemma3_margin", rep.lemma3_margin);
    row("lemma3_closed_form", quad.lemma3_closed_form, quad.achieved_rel_error * std::abs(quad.lemma3_closed_form));
    row("quad_e_mbs", quad.e_mbs, 0);
    row("quad_e_mbs2", quad.e_mbs2, 0);
    row("quad_e_bbs", quad.e_bbs, 0);
    row("plugin_margin_printed", quad.plugin_margin_printed, 0);
    est("theorem1_lhs", rep.theorem1_margin);
    est("theorem1_rhs", rep.theorem1_rhs);
    est("exact_margin", rep.exact_margin);
    row("lemma3_pass", l3.passed(), 0);
    row("theorem1_pass", t1.passed(), 0);
    write_file(out, csv.str());
    std::printf("lemma 3 margin %.6g (se %.2g, closed form %.6g): %s\n", l3.mc_margin, l3.mc_stderr, l3.closed_form,
                l3.passed() ? "pass" : "FAIL");
    std::printf("variance identity %.6g vs %.6g (se %.2g): %s\n", t1.lhs, t1.rhs, t1.stderr_,
                t1.passed() ? "pass" : "FAIL");
    return l3.passed() && t1.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Template matching tracker with dual memory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "random seed (overrides config files)");

    auto* track = app.add_subcommand("track", "track a sequence in OTB layout");
    fs::path track_dir, track_out = "results.csv";
    std::optional<fs::path> track_cfg;
    track->add_option("seq_dir", track_dir)->required();
    track->add_option("--config", track_cfg, "key=value tracker configuration");
    track->add_option("--out", track_out);

    auto* eval = app.add_subcommand("eval", "one-pass evaluation of a results file");
    fs::path eval_results, eval_dir, eval_out;
    std::optional<fs::path> eval_plot;
    eval->add_option("results", eval_results)->required();
    eval->add_option("seq_dir", eval_dir)->required();
    eval->add_option("--out", eval_out)->required();
    eval->add_option("--plot", eval_plot, "write success/precision curves as SVG");

    auto* synth = app.add_subcommand("synth", "render a synthetic sequence");
    fs::path synth_spec, synth_out;
    synth->add_option("spec", synth_spec)->required();
    synth->add_option("--out", synth_out)->required();

    auto* verify = app.add_subcommand("verify-theory", "Monte Carlo check of the score moment inequalities");
    std::int64_t trials = 100000;
    int n = 20, m = 20;
    double sigma1 = 0.5;
    fs::path verify_out;
    verify->add_option("--trials", trials)->check(CLI::Range(std::int64_t{100}, std::int64_t{1} << 40));
    verify->add_option("--n", n)->check(CLI::PositiveNumber);
    verify->add_option("--m", m)->check(CLI::PositiveNumber);
    verify->add_option("--sigma1", sigma1)->check(CLI::PositiveNumber);
    verify->add_option("--out", verify_out)->required();
    // A subcommand-level --seed is accepted too.
    std::optional<std::uint64_t> verify_seed;
    verify->add_option("--seed", verify_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*track) return run_track(track_dir, track_cfg, track_out, seed);
        if (*eval) return run_eval(eval_results, eval_dir, eval_out, eval_plot);
        if (*synth) return run_synth(synth_spec, synth_out, seed);
        if (*verify) return run_verify(trials, verify_seed.value_or(seed.value_or(0)), n, m, sigma1, verify_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
