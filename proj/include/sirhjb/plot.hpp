#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sirhjb {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double width = 1.5;
};

/// Point marker, emitted as a circle with id `marker-<id>` and data-x / data-y attributes.
struct PlotMarker {
    std::string id;
    std::string label;
    double x = 0.0;
    double y = 0.0;
    std::string color = "#d62728";
};

struct PlotSegment {
    std::string label;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    std::string color = "#d62728";
    double width = 3.0;
    bool dashed = false;
};

struct PlotRect {
    std::string label;
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    std::string fill = "#d62728";
    double opacity = 0.12;
};

/// Static 2-D figure in data coordinates; ranges default to the data extent.
struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotRect> rects;
    std::vector<PlotSeries> series;
    std::vector<PlotSegment> segments;
    std::vector<PlotMarker> markers;
    std::optional<double> x_min, x_max, y_min, y_max;
    double width = 720.0;
    double height = 440.0;
};

/// Writes the figure as a standalone SVG document with axes, ticks, and a legend.
void write_svg(const Figure& figure, std::ostream& out);

} // namespace sirhjb
