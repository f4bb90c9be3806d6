#pragma once

// Minimal static SVG line plots: axes with ticks, legend, polyline series.
// Output depends only on the inputs, so plots are diffable.

#include <cstddef>
#include <string>
#include <vector>

namespace tepinn {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    /// Empty picks from the built-in palette by series index.
    std::string color;
    bool dashed = false;
    bool markers = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 800;
    int height = 480;
    /// Series longer than this are decimated by a fixed stride.
    std::size_t max_points = 2000;
};

/// Throws LengthMismatch if a series has x/y of different lengths and
/// InvalidArgument on non-finite data.
std::string render_svg(const PlotSpec& spec);

/// Round-number ticks covering [lo, hi], roughly `target` of them.
std::vector<double> nice_ticks(double lo, double hi, int target = 6);

std::string xml_escape(const std::string& s);

}  // namespace tepinn
