#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cascade/harness.hpp"

namespace cascade {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::ofstream open_for_write(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void ensure_writable(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::binary | std::ios::trunc);
        if (!out || !(out << 'x') || !out.flush()) {
            throw std::runtime_error("output directory " + dir.string() + " is not writable");
        }
    }
    fs::remove(probe, ec);
}

void write_curve_csv(const ExperimentSummary& s, const fs::path& path) {
    auto out = open_for_write(path);
    out << "checkpoint,mean_regret,std_regret\n";
    for (std::size_t i = 0; i < s.checkpoints.size(); ++i) {
        out << s.checkpoints[i] << ',' << num(s.curve_mean[i]) << ',' << num(s.curve_std[i]) << '\n';
    }
    finish(out, path);
}

void write_detections_csv(const ExperimentSummary& s, const fs::path& path) {
    auto out = open_for_write(path);
    out << "change_point,mean_detection,std_detection,detected,missed\n";
    for (const auto& d : s.detections) {
        out << d.change_point << ',';
        if (d.detected > 0) {
            out << num(d.mean) << ',' << num(d.std);
        } else {
            out << ',';
        }
        out << ',' << d.detected << ',' << d.missed << '\n';
    }
    finish(out, path);
}

void write_summary_json(const ExperimentSummary& s, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    {
        auto out = open_for_write(tmp);
        out << summary_to_json(s).dump(2) << '\n';
        finish(out, tmp);
    }
    fs::rename(tmp, path);
}

void write_curve_svg(const ExperimentSummary& s, const fs::path& path) {
    constexpr double width = 640, height = 400, margin = 50;
    double ymax = 0.0;
    for (std::size_t i = 0; i < s.curve_mean.size(); ++i) {
        ymax = std::max(ymax, s.curve_mean[i] + s.curve_std[i]);
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double xmax = static_cast<double>(std::max<std::size_t>(s.horizon, 1));
    auto px = [&](double x) { return margin + x / xmax * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - y / ymax * (height - 2 * margin); };

    std::ostringstream band, line;
    for (std::size_t i = 0; i < s.checkpoints.size(); ++i) {
        const double x = px(static_cast<double>(s.checkpoints[i]));
        band << (i ? " " : "") << num(x) << ',' << num(py(s.curve_mean[i] + s.curve_std[i]));
        line << (i ? " " : "") << num(x) << ',' << num(py(s.curve_mean[i]));
    }
    for (std::size_t i = s.checkpoints.size(); i-- > 0;) {
        band << ' ' << num(px(static_cast<double>(s.checkpoints[i]))) << ','
             << num(py(std::max(0.0, s.curve_mean[i] - s.curve_std[i])));
    }

    auto out = open_for_write(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    for (std::size_t cp : s.change_points) {
        const double x = px(static_cast<double>(cp));
        out << "<line x1=\"" << num(x) << "\" y1=\"" << margin << "\" x2=\"" << num(x) << "\" y2=\""
            << height - margin << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    }
    out << "<polygon points=\"" << band.str() << "\" fill=\"#1f77b4\" fill-opacity=\"0.2\"/>\n";
    out << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << margin - 15 << "\" font-size=\"14\">" << s.policy
        << ": cumulative regret (" << s.trials << " trials)</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 20
        << "\" font-size=\"12\" text-anchor=\"end\">T = " << s.horizon << "</text>\n";
    out << "<text x=\"" << margin - 5 << "\" y=\"" << margin << "\" font-size=\"12\" text-anchor=\"end\">"
        << num(std::round(ymax)) << "</text>\n";
    out << "</svg>\n";
    finish(out, path);
}

}  // namespace

void emit_outputs(const ExperimentSummary& summary, const fs::path& dir, bool write_svg) {
    ensure_writable(dir);
    write_curve_csv(summary, dir / "regret_curve.csv");
    write_detections_csv(summary, dir / "detections.csv");
    if (write_svg) write_curve_svg(summary, dir / "regret_curve.svg");
    write_summary_json(summary, dir / "summary.json");
}

void write_comparison_csv(const std::vector<ExperimentSummary>& summaries, const fs::path& path) {
    if (path.has_parent_path()) ensure_writable(path.parent_path());
    auto out = open_for_write(path);
    out << "policy,regret_mean,regret_std\n";
    for (const auto& s : summaries) {
        out << s.policy << ',' << num(s.regret_mean) << ',' << num(s.regret_std) << '\n';
    }
    finish(out, path);
}

}  // namespace cascade
