#pragma once

#include <string>
#include <vector>

#include "replaygan/tensor.hpp"

namespace replaygan::report {

/// Kernel-density overlay of two samples (real in gold, synthetic in the
/// given accent color). Gaussian kernel, Silverman bandwidth.
std::string kde_svg(const std::vector<double>& real_values, const std::vector<double>& syn_values,
                    const std::string& title, const std::string& accent = "#2aa4c6");

/// Side-by-side level shares.
std::string barplot_svg(const std::vector<std::string>& levels, const std::vector<double>& real_frac,
                        const std::vector<double>& syn_frac, const std::string& title,
                        const std::string& accent = "#2aa4c6");

/// Matrix tiles with value labels; `lo`/`hi` pin the color scale.
std::string heatmap_svg(const Tensor& matrix, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, const std::string& title, double lo, double hi);

/// One polyline per named series over a shared x axis.
std::string line_svg(const std::vector<std::pair<std::string, std::vector<double>>>& series, const std::string& title,
                     const std::string& y_label);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace replaygan::report
