#include "dae/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dae/error.hpp"

namespace dae {
namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string history_csv(const TrainHistory& h) {
    std::string s = "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < h.train_loss.size(); ++i)
        s += std::to_string(i + 1) + "," + num(h.train_loss[i]) + "," + num(h.validation_loss[i]) + "\n";
    return s;
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) { write_text(history_csv(h), path); }

std::string loss_curve_svg(const TrainHistory& h, const std::string& title) {
    constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
    const std::size_t n = h.train_loss.size();
    double lo = 1e300, hi = -1e300;
    for (const auto* series : {&h.train_loss, &h.validation_loss})
        for (double v : *series)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (lo > hi) lo = 0, hi = 1;
    if (hi - lo < 1e-12) hi = lo + 1e-12;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto px = [&](std::size_t i) { return left + (n > 1 ? (W - left - right) * i / static_cast<double>(n - 1) : 0.0); };
    auto py = [&](double v) { return top + (H - top - bottom) * (hi - v) / (hi - lo); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << num(std::round(v * 1e4) / 1e4) << "</text>\n";
    }
    if (n > 0) {
        for (int t = 0; t <= 4; ++t) {
            const std::size_t i = (n - 1) * static_cast<std::size_t>(t) / 4;
            os << "<text x=\"" << px(i) << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
        }
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">epoch</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">loss</text>\n";
    auto polyline = [&](const std::vector<double>& ys, const char* colour, const char* label, double ly) {
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ys.size(); ++i)
            if (std::isfinite(ys[i])) os << px(i) << ',' << py(ys[i]) << ' ';
        os << "\"/>\n";
        os << "<line x1=\"" << W - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - 125 << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - 120 << "\" y=\"" << ly + 4 << "\">" << label << "</text>\n";
    };
    polyline(h.train_loss, "#1f77b4", "training", top + 10);
    polyline(h.validation_loss, "#d62728", "validation", top + 28);
    os << "</svg>\n";
    return os.str();
}

void write_loss_svg(const TrainHistory& h, const std::string& title, const std::filesystem::path& path) {
    write_text(loss_curve_svg(h, title), path);
}

Image montage(const std::vector<std::vector<Image>>& rows, int gap) {
    int cell_h = 0, cell_w = 0;
    std::size_t cols = 0;
    for (const auto& row : rows) {
        cols = std::max(cols, row.size());
        for (const Image& img : row) {
            cell_h = std::max(cell_h, img.height);
            cell_w = std::max(cell_w, img.width);
        }
    }
    const int h = static_cast<int>(rows.size()) * (cell_h + gap) + gap;
    const int w = static_cast<int>(cols) * (cell_w + gap) + gap;
    Image out(h, w, 1.0f);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const Image& img = rows[r][c];
            const int oy = gap + static_cast<int>(r) * (cell_h + gap);
            const int ox = gap + static_cast<int>(c) * (cell_w + gap);
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x) out.at(oy + y, ox + x) = img.at(y, x);
        }
    return out;
}

}  // namespace dae
