#pragma once

#include <string>
#include <vector>

#include "spanie/document.hpp"
#include "spanie/model.hpp"

namespace spanie {

struct SvgOptions {
  double width = 800.0;  // viewport width; height follows the page aspect ratio
  bool show_text = true;
};

// Token boxes on the page, predicted starts outlined red, ends blue, and one
// arrow per consecutive pair of chain links (from start to start), labelled
// by field id.
std::string render_svg(const Document& doc, const std::vector<FieldChain>& chains,
                       const SvgOptions& options = {});

std::string xml_escape(const std::string& text);

}  // namespace spanie
