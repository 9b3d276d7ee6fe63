#include "tm3/ope.hpp"

#include <cstdio>
#include <sstream>

#include "tm3/error.hpp"

namespace tm3 {

OpeReport ope_metrics(std::span<const BoundingBox> results, std::span<const BoundingBox> truth)
{
    require(results.size() == truth.size(), "ope_metrics: result and truth counts differ");
    require(!truth.empty(), "ope_metrics: no frames");
    const auto n = static_cast<double>(truth.size());

    std::vector<double> overlaps, errors;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        overlaps.push_back(vor(results[k], truth[k]));
        errors.push_back(center_error(results[k], truth[k]));
    }

    OpeReport r;
    for (std::size_t t = 0; t < r.success_curve.size(); ++t) {
        const double thr = static_cast<double>(t) / 100.0;
        std::size_t hits = 0;
        // A perfect overlap counts at every threshold, including 1.
        for (const double o : overlaps) hits += o > thr || o >= 1.0 - 1e-12;
        r.success_curve[t] = static_cast<double>(hits) / n;
    }
    for (std::size_t t = 0; t < r.precision_curve.size(); ++t) {
        std::size_t hits = 0;
        for (const double e : errors) hits += e <= static_cast<double>(t);
        r.precision_curve[t] = static_cast<double>(hits) / n;
    }
    double sum = 0.0;
    for (const double s : r.success_curve) sum += s;
    r.auc = sum / static_cast<double>(r.success_curve.size());
    r.precision_at_20 = r.precision_curve[20];
    sum = 0.0;
    for (const double o : overlaps) sum += o;
    r.mean_vor = sum / n;
    return r;
}

std::string metrics_csv(const OpeReport& report)
{
    std::ostringstream out;
    char buf[96];
    out << "metric,threshold,value\n";
    std::snprintf(buf, sizeof buf, "auc,,%.6f\n", report.auc);
    out << buf;
    std::snprintf(buf, sizeof buf, "precision_at_20,20,%.6f\n", report.precision_at_20);
    out << buf;
    std::snprintf(buf, sizeof buf, "mean_vor,,%.6f\n", report.mean_vor);
    out << buf;
    for (std::size_t t = 0; t < report.success_curve.size(); ++t) {
        std::snprintf(buf, sizeof buf, "success,%.2f,%.6f\n", static_cast<double>(t) / 100.0, report.success_curve[t]);
        out << buf;
    }
    for (std::size_t t = 0; t < report.precision_curve.size(); ++t) {
        std::snprintf(buf, sizeof buf, "precision,%zu,%.6f\n", t, report.precision_curve[t]);
        out << buf;
    }
    return out.str();
}

namespace {

template <std::size_t N>
std::string polyline(const std::array<double, N>& ys, double x0, double y0, double w, double h)
{
    std::ostringstream pts;
    char buf[64];
    for (std::size_t k = 0; k < N; ++k) {
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x0 + w * static_cast<double>(k) / (N - 1), y0 + h * (1.0 - ys[k]));
        pts << buf;
    }
    return "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"" + pts.str() + "\"/>\n";
}

std::string panel(double x0, const std::string& title, const std::string& xlabel, const std::string& xmax)
{
    std::ostringstream s;
    s << "<rect x=\"" << x0 << "\" y=\"40\" width=\"300\" height=\"240\" fill=\"none\" stroke=\"#333\"/>\n";
    s << "<text x=\"" << x0 + 150 << "\" y=\"30\" text-anchor=\"middle\">" << title << "</text>\n";
    s << "<text x=\"" << x0 + 150 << "\" y=\"310\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    s << "<text x=\"" << x0 << "\" y=\"296\" text-anchor=\"middle\">0</text>\n";
    s << "<text x=\"" << x0 + 300 << "\" y=\"296\" text-anchor=\"middle\">" << xmax << "</text>\n";
    s << "<text x=\"" << x0 - 6 << "\" y=\"45\" text-anchor=\"end\">1</text>\n";
    s << "<text x=\"" << x0 - 6 << "\" y=\"284\" text-anchor=\"end\">0</text>\n";
    return s.str();
}

}  // namespace

std::string curves_svg(const OpeReport& report, const std::string& title)
{
    char auc[64], prec[64];
    std::snprintf(auc, sizeof auc, "Success (AUC %.3f)", report.auc);
    std::snprintf(prec, sizeof prec, "Precision (@20 px %.3f)", report.precision_at_20);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"340\" font-family=\"sans-serif\" "
         "font-size=\"12\">\n";
    s << "<title>" << title << "</title>\n";
    s << panel(40, auc, "overlap threshold", "1") << polyline(report.success_curve, 40, 40, 300, 240);
    s << panel(400, prec, "location error threshold (px)", "50") << polyline(report.precision_curve, 400, 40, 300, 240);
    s << "</svg>\n";
    return s.str();
}

}  // namespace tm3
