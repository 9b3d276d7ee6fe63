#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tm3/geometry.hpp"

namespace tm3 {

struct OpeReport {
    std::array<double, 101> success_curve{};    // fraction with VOR > k/100 (or VOR = 1)
    std::array<double, 51> precision_curve{};   // fraction with center error <= k px
    double auc = 0.0;
    double precision_at_20 = 0.0;
    double mean_vor = 0.0;
};

OpeReport ope_metrics(std::span<const BoundingBox> results, std::span<const BoundingBox> truth);

std::string metrics_csv(const OpeReport& report);
std::string curves_svg(const OpeReport& report, const std::string& title);

}  // namespace tm3
