#include "dlme/report.hpp"

#include "dlme/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dlme {

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Usage, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) fail(ErrorKind::Usage, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) fail(ErrorKind::Usage, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string fmt6(double v) {
    if (v == 0.0) return "0";  // no "-0"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

std::string hour_header(const std::string& first, Index T) {
    std::string h = first;
    for (Index t = 0; t < T; ++t) h += ",h" + std::to_string(t + 1);
    return h + "\n";
}

void row(std::ostringstream& os, const std::string& lead, const Eigen::Ref<const Eigen::RowVectorXd>& v) {
    os << lead;
    for (Index t = 0; t < v.size(); ++t) os << ',' << fmt6(v(t));
    os << '\n';
}

}  // namespace

std::string matrix_csv(const Eigen::MatrixXd& m, const NetworkCase& c) {
    if (static_cast<std::size_t>(m.rows()) != c.buses.size())
        fail(ErrorKind::Validation, "matrix rows do not match the bus count");
    std::ostringstream os;
    os << hour_header("bus", m.cols());
    for (Index i = 0; i < m.rows(); ++i) row(os, std::to_string(c.buses[static_cast<std::size_t>(i)].id), m.row(i));
    return os.str();
}

std::string dispatch_csv(const DispatchSolution& sol, const NetworkCase& c) {
    std::ostringstream os;
    os << hour_header("quantity,entity", sol.p_sub.size());
    row(os, "p_mw,substation", sol.p_sub.transpose());
    row(os, "q_mvar,substation", sol.q_sub.transpose());
    auto each = [&](const char* q, const Eigen::MatrixXd& m, auto name) {
        for (Index u = 0; u < m.rows(); ++u) row(os, std::string(q) + "," + name(static_cast<std::size_t>(u)), m.row(u));
    };
    auto inv = [&](std::size_t u) { return c.inverters[u].id; };
    auto sg = [&](std::size_t u) { return c.sync_dgs[u].id; };
    auto st = [&](std::size_t u) { return c.storage[u].id; };
    auto ev = [&](std::size_t u) { return c.evs[u].id; };
    auto br = [&](std::size_t k) {
        return std::to_string(c.branches[k].from_bus) + "-" + std::to_string(c.branches[k].to_bus);
    };
    auto bus = [&](std::size_t i) { return std::to_string(c.buses[i].id); };
    each("p_mw", sol.pv_p, inv);
    each("q_mvar", sol.pv_q, inv);
    each("p_mw", sol.sg_p, sg);
    each("q_mvar", sol.sg_q, sg);
    each("charge_mw", sol.st_cha, st);
    each("discharge_mw", sol.st_dis, st);
    each("energy_mwh", sol.st_e, st);
    each("p_mw", sol.ev_p, ev);
    each("branch_p_mw", sol.br_p, br);
    each("branch_q_mvar", sol.br_q, br);
    each("branch_l_pu", sol.br_l, br);
    each("v_sq_pu", sol.v, bus);
    return os.str();
}

HourSummary summarize(const Eigen::MatrixXd& m) {
    HourSummary s;
    for (Index t = 0; t < m.cols(); ++t) {
        std::vector<double> v(m.col(t).data(), m.col(t).data() + m.rows());
        std::sort(v.begin(), v.end());
        auto q = [&](double p) {
            if (v.empty()) return 0.0;
            const double pos = p * static_cast<double>(v.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, v.size() - 1);
            return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
        };
        s.min.push_back(q(0.0));
        s.q1.push_back(q(0.25));
        s.median.push_back(q(0.5));
        s.q3.push_back(q(0.75));
        s.max.push_back(q(1.0));
    }
    return s;
}

std::string summary_svg(const HourSummary& s, const std::string& title, const std::string& unit) {
    const double W = 720, H = 360, left = 60, right = 20, top = 36, bottom = 40;
    const std::size_t T = s.min.size();
    double lo = 0.0, hi = 0.0;
    if (T > 0) {
        lo = *std::min_element(s.min.begin(), s.min.end());
        hi = *std::max_element(s.max.begin(), s.max.end());
    }
    if (hi - lo < 1e-9) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto y = [&](double v) { return top + (hi - v) / (hi - lo) * (H - top - bottom); };
    const double step = T > 0 ? (W - left - right) / static_cast<double>(T) : 0.0;

    std::ostringstream os;
    char buf[256];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" x2=\"%g\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                      "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%s</text>\n",
                      left, W - right, y(v), y(v), left - 4, y(v) + 4, fmt6(v).c_str());
        os << buf;
    }
    for (std::size_t t = 0; t < T; ++t) {
        const double cx = left + step * (static_cast<double>(t) + 0.5);
        const double bw = step * 0.6;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" x2=\"%.2f\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"#333\"/>\n", cx, cx,
                      y(s.max[t]), y(s.min[t]));
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#8fb8de\" stroke=\"#333\"/>\n",
                      cx - bw / 2, y(s.q3[t]), bw, std::max(0.5, y(s.q1[t]) - y(s.q3[t])));
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" x2=\"%.2f\" y1=\"%.2f\" y2=\"%.2f\" stroke=\"#c00\" stroke-width=\"2\"/>\n",
                      cx - bw / 2, cx + bw / 2, y(s.median[t]), y(s.median[t]));
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%zu</text>\n", cx,
                      H - bottom + 14, t + 1);
        os << buf;
    }
    os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 6 << "\" text-anchor=\"middle\">hour</text>\n";
    os << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
       << ")\" text-anchor=\"middle\">" << unit << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace dlme
