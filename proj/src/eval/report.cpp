#include "tanet/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tanet/core/error.hpp"

namespace tanet::eval {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw FormatError("trailing junk in numeric field \"" + s + "\"");
        return v;
    } catch (const std::invalid_argument&) {
        throw FormatError("malformed numeric field \"" + s + "\"");
    } catch (const std::out_of_range&) {
        throw FormatError("numeric field out of range \"" + s + "\"");
    }
}

// One polyline panel: the curve in a unit box mapped to pixel coordinates.
void svg_panel(std::ostream& out, const std::vector<double>& curve, double x_max,
               const std::string& title, int ox) {
    const int w = 360, h = 300, pad = 30;
    out << "<g transform=\"translate(" << ox << ",20)\">\n";
    out << "<text x=\"" << pad + w / 2 << "\" y=\"12\" text-anchor=\"middle\" "
        << "font-size=\"13\">" << title << "</text>\n";
    out << "<rect x=\"" << pad << "\" y=\"20\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double fx = static_cast<double>(i) / (curve.size() - 1);
        const double px = pad + fx * w;
        const double py = 20 + (1.0 - curve[i]) * h;
        out << px << ',' << py << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"" << h + 45 << "\" font-size=\"11\">0</text>\n";
    out << "<text x=\"" << pad + w << "\" y=\"" << h + 45
        << "\" text-anchor=\"end\" font-size=\"11\">" << x_max << "</text>\n";
    out << "</g>\n";
}

} // namespace

void emit_report(const MetricReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    std::ofstream out(dir / "report.txt");
    if (!out) throw IoError("cannot open " + (dir / "report.txt").string() + " for writing");
    out << "auc " << fmt(report.auc) << '\n';
    out << "pr_at_20 " << fmt(report.pr_at_20) << '\n';
    out << "ao " << fmt(report.ao) << '\n';
    out << "sr_050 " << fmt(report.sr_050) << '\n';
    out << "sr_075 " << fmt(report.sr_075) << '\n';
    out << "lt_precision " << fmt(report.lt_precision) << '\n';
    out << "lt_recall " << fmt(report.lt_recall) << '\n';
    out << "lt_f1 " << fmt(report.lt_f1) << '\n';
    out << "pr_curve";
    for (const double v : report.pr_curve) out << ' ' << fmt(v);
    out << '\n';
    out << "sr_curve";
    for (const double v : report.sr_curve) out << ' ' << fmt(v);
    out << '\n';
    if (!out) throw IoError("failed writing " + (dir / "report.txt").string());
    out.close();

    std::ofstream svg(dir / "curves.svg");
    if (!svg) throw IoError("cannot open " + (dir / "curves.svg").string() + " for writing");
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"400\">\n";
    svg << "<rect width=\"860\" height=\"400\" fill=\"white\"/>\n";
    svg_panel(svg, report.pr_curve, 50.0, "precision vs center error (px)", 10);
    svg_panel(svg, report.sr_curve, 1.0, "success vs overlap threshold", 440);
    svg << "</svg>\n";
    if (!svg) throw IoError("failed writing " + (dir / "curves.svg").string());
}

MetricReport parse_report(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    MetricReport report;
    std::map<std::string, bool> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        seen[key] = true;
        std::string tok;
        if (key == "pr_curve" || key == "sr_curve") {
            std::vector<double> vals;
            while (ss >> tok) vals.push_back(parse_double(tok));
            (key == "pr_curve" ? report.pr_curve : report.sr_curve) = std::move(vals);
        } else {
            if (!(ss >> tok)) throw FormatError("report line \"" + line + "\" has no value");
            const double v = parse_double(tok);
            if (key == "auc")
                report.auc = v;
            else if (key == "pr_at_20")
                report.pr_at_20 = v;
            else if (key == "ao")
                report.ao = v;
            else if (key == "sr_050")
                report.sr_050 = v;
            else if (key == "sr_075")
                report.sr_075 = v;
            else if (key == "lt_precision")
                report.lt_precision = v;
            else if (key == "lt_recall")
                report.lt_recall = v;
            else if (key == "lt_f1")
                report.lt_f1 = v;
            else
                throw FormatError("unknown report key \"" + key + "\"");
        }
    }
    for (const char* key : {"auc", "pr_at_20", "ao", "sr_050", "sr_075", "lt_precision",
                            "lt_recall", "lt_f1", "pr_curve", "sr_curve"})
        if (!seen.count(key)) throw FormatError(std::string("report is missing key ") + key);
    return report;
}

void write_sequence_csv(const std::filesystem::path& file,
                        const std::vector<std::string>& names,
                        const std::vector<MetricReport>& reports) {
    if (names.size() != reports.size())
        throw ArgumentError("sequence CSV: " + std::to_string(names.size()) + " names vs " +
                            std::to_string(reports.size()) + " reports");
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << "sequence,auc,pr_at_20,ao,sr_050,sr_075,lt_precision,lt_recall,lt_f1\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const MetricReport& r = reports[i];
        out << names[i] << ',' << fmt(r.auc) << ',' << fmt(r.pr_at_20) << ',' << fmt(r.ao)
            << ',' << fmt(r.sr_050) << ',' << fmt(r.sr_075) << ',' << fmt(r.lt_precision)
            << ',' << fmt(r.lt_recall) << ',' << fmt(r.lt_f1) << '\n';
    }
    if (!out) throw IoError("failed writing " + file.string());
}

} // namespace tanet::eval
