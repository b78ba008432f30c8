#include "dcqual/record_model.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "dcqual/text.hpp"

namespace dcqual {

namespace {

constexpr std::array<std::string_view, kDcElementCount> kNames = {
    "title",  "creator", "subject",    "description", "publisher",
    "contributor", "date", "type",     "format",      "identifier",
    "source", "language", "relation", "coverage",    "rights",
};

}  // namespace

std::string_view element_name(DcElement e) noexcept {
  return kNames[static_cast<std::size_t>(e)];
}

std::string_view metric_label(DcElement e) noexcept {
  return e == DcElement::identifier ? std::string_view("identifier2") : element_name(e);
}

std::optional<DcElement> element_from_name(std::string_view name) noexcept {
  if (name == "identifier2") return DcElement::identifier;
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<DcElement>(i);
  }
  return std::nullopt;
}

bool DublinCoreRecord::empty() const noexcept {
  for (const auto& v : values_) {
    if (!v.empty()) return false;
  }
  return true;
}

DublinCoreRecord parse_dc(const xml::Element& dc, ParseDiagnostics* diagnostics) {
  DublinCoreRecord record;
  ParseDiagnostics diag;
  for (const auto& child : dc.children) {
    std::optional<DcElement> e;
    if (child.ns == kDcNamespace) e = element_from_name(child.local);
    // "identifier2" is a report label, never an XML name.
    if (!e || child.local == "identifier2") {
      ++diag.unknown_elements;
      continue;
    }
    std::string value = child.children.empty() ? child.text : child.all_text();
    if (text::is_blank(value)) ++diag.blank_values;
    record.add(*e, std::move(value));
  }
  if (diagnostics) *diagnostics += diag;
  return record;
}

DublinCoreRecord parse_dc(std::string_view xml_fragment, ParseDiagnostics* diagnostics) {
  return parse_dc(xml::parse(xml_fragment), diagnostics);
}

std::string joined_value(const DublinCoreRecord& record, DcElement element) {
  return text::join(record.values(element), ";");
}

bool is_filled(const DublinCoreRecord& record, DcElement element) noexcept {
  for (const auto& v : record.values(element)) {
    if (!text::is_blank(v)) return true;
  }
  return false;
}

std::string render_dc(const DublinCoreRecord& record) {
  std::string out =
      "<oai_dc:dc xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\""
      " xmlns:dc=\"http://purl.org/dc/elements/1.1/\""
      " xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\""
      " xsi:schemaLocation=\"http://www.openarchives.org/OAI/2.0/oai_dc/"
      " http://www.openarchives.org/OAI/2.0/oai_dc.xsd\">";
  for (auto e : kDcElements) {
    for (const auto& v : record.values(e)) {
      const auto name = element_name(e);
      out += "<dc:";
      out += name;
      out += '>';
      out += xml::escape_text(v);
      out += "</dc:";
      out += name;
      out += '>';
    }
  }
  out += "</oai_dc:dc>";
  return out;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(millis));
  return buf;
}

}  // namespace dcqual
