#include "spanie/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace spanie {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

std::string render_svg(const Document& doc, const std::vector<FieldChain>& chains,
                       const SvgOptions& options) {
  const double w = options.width;
  const double aspect = doc.page_width > 0 ? static_cast<double>(doc.page_height) / doc.page_width : 1.0;
  const double h = w * aspect;
  auto sx = [&](int x) { return x * w / kGridMax; };
  auto sy = [&](int y) { return y * h / kGridMax; };
  auto center = [&](std::size_t token) {
    const auto& b = doc.tokens[token].box;
    return std::make_pair(sx(b.x0 + b.x1) / 2.0, sy(b.y0 + b.y1) / 2.0);
  };
  auto valid = [&](std::size_t t) { return t >= 1 && t < doc.tokens.size(); };

  std::set<std::size_t> starts, ends;
  for (const auto& fc : chains) {
    for (const auto& s : fc.chain.spans) {
      if (valid(s.start)) starts.insert(s.start);
      if (valid(s.end)) ends.insert(s.end);
    }
  }

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\">\n"
      << "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"7\" refY=\"4\" "
         "orient=\"auto\"><path d=\"M0,0 L8,4 L0,8 z\" fill=\"#2a9d3a\"/></marker></defs>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<title>" << xml_escape(doc.doc_id) << "</title>\n";
  for (std::size_t i = 1; i < doc.tokens.size(); ++i) {
    const auto& t = doc.tokens[i];
    const double x = sx(t.box.x0), y = sy(t.box.y0);
    const double bw = sx(t.box.x1) - x, bh = sy(t.box.y1) - y;
    out << "<rect class=\"token\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bw)
        << "\" height=\"" << num(bh) << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";
    if (starts.count(i)) {
      out << "<rect class=\"start\" x=\"" << num(x - 1) << "\" y=\"" << num(y - 1) << "\" width=\""
          << num(bw + 2) << "\" height=\"" << num(bh + 2)
          << "\" fill=\"none\" stroke=\"#d62828\" stroke-width=\"1.5\"/>\n";
    }
    if (ends.count(i)) {
      out << "<rect class=\"end\" x=\"" << num(x - 2) << "\" y=\"" << num(y - 2) << "\" width=\""
          << num(bw + 4) << "\" height=\"" << num(bh + 4)
          << "\" fill=\"none\" stroke=\"#1d4ed8\" stroke-width=\"1.5\"/>\n";
    }
    if (options.show_text) {
      out << "<text x=\"" << num(x + 1) << "\" y=\"" << num(y + bh - 1) << "\" font-size=\""
          << num(std::max(4.0, bh * 0.7)) << "\" fill=\"#444444\">" << xml_escape(t.text)
          << "</text>\n";
    }
  }
  for (const auto& fc : chains) {
    const auto& spans = fc.chain.spans;
    if (spans.empty() || !valid(spans.front().start)) continue;
    const auto [lx, ly] = center(spans.front().start);
    out << "<text class=\"label\" x=\"" << num(lx) << "\" y=\"" << num(ly - 6)
        << "\" font-size=\"8\" fill=\"#2a9d3a\">" << xml_escape(fc.field_id) << "</text>\n";
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (!valid(spans[k - 1].start) || !valid(spans[k].start)) continue;
      const auto [x1, y1] = center(spans[k - 1].start);
      const auto [x2, y2] = center(spans[k].start);
      out << "<line class=\"link\" data-field=\"" << xml_escape(fc.field_id) << "\" x1=\"" << num(x1)
          << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
          << "\" stroke=\"#2a9d3a\" stroke-width=\"1.2\" marker-end=\"url(#arrow)\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace spanie
