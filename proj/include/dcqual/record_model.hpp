#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcqual/xml.hpp"

namespace dcqual {

inline constexpr std::string_view kOaiDcNamespace = "http://www.openarchives.org/OAI/2.0/oai_dc/";
inline constexpr std::string_view kDcNamespace = "http://purl.org/dc/elements/1.1/";

/// The fifteen simple Dublin Core elements, in the order of the element set.
enum class DcElement : std::uint8_t {
  title,
  creator,
  subject,
  description,
  publisher,
  contributor,
  date,
  type,
  format,
  identifier,
  source,
  language,
  relation,
  coverage,
  rights,
};

inline constexpr std::size_t kDcElementCount = 15;

inline constexpr std::array<DcElement, kDcElementCount> kDcElements = {
    DcElement::title,    DcElement::creator,    DcElement::subject,  DcElement::description,
    DcElement::publisher, DcElement::contributor, DcElement::date,    DcElement::type,
    DcElement::format,   DcElement::identifier, DcElement::source,   DcElement::language,
    DcElement::relation, DcElement::coverage,   DcElement::rights,
};

/// XML local name, e.g. "identifier".
std::string_view element_name(DcElement e) noexcept;

/// Label used in metrics and reports. Same as element_name() except the
/// metadata identifier, which is "identifier2" so it cannot be confused with
/// the header identifier.
std::string_view metric_label(DcElement e) noexcept;

/// Accepts element names and "identifier2".
std::optional<DcElement> element_from_name(std::string_view name) noexcept;

struct RecordHeader {
  std::string identifier;
  std::string datestamp;
  std::vector<std::string> set_specs;
  bool deleted = false;

  friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

/// Values of one oai_dc record, per element, in document order and verbatim.
class DublinCoreRecord {
 public:
  const std::vector<std::string>& values(DcElement e) const noexcept {
    return values_[static_cast<std::size_t>(e)];
  }
  void add(DcElement e, std::string value) {
    values_[static_cast<std::size_t>(e)].push_back(std::move(value));
  }
  void set(DcElement e, std::vector<std::string> vals) {
    values_[static_cast<std::size_t>(e)] = std::move(vals);
  }
  bool empty() const noexcept;

  friend bool operator==(const DublinCoreRecord&, const DublinCoreRecord&) = default;

 private:
  std::array<std::vector<std::string>, kDcElementCount> values_;
};

/// Side information from parse_dc that does not belong in the record itself.
struct ParseDiagnostics {
  std::size_t unknown_elements = 0;
  /// Values that were present but blank, e.g. `<dc:title/>`.
  std::size_t blank_values = 0;

  ParseDiagnostics& operator+=(const ParseDiagnostics& o) noexcept {
    unknown_elements += o.unknown_elements;
    blank_values += o.blank_values;
    return *this;
  }
};

/// One stored record. (repo_id, header.identifier) is the corpus key.
struct HarvestedRecord {
  std::string repo_id;
  RecordHeader header;
  DublinCoreRecord metadata;
  /// UTC, "YYYY-MM-DDThh:mm:ss.mmmZ".
  std::string harvested_at;

  friend bool operator==(const HarvestedRecord&, const HarvestedRecord&) = default;
};

/// Parses an `<oai_dc:dc>` element. Children in the DC namespace with one of
/// the fifteen local names are appended to that element's list; anything
/// else is counted in `diagnostics->unknown_elements`.
DublinCoreRecord parse_dc(const xml::Element& dc, ParseDiagnostics* diagnostics = nullptr);

/// Same, from serialized XML. Throws MalformedXml.
DublinCoreRecord parse_dc(std::string_view xml_fragment, ParseDiagnostics* diagnostics = nullptr);

/// Values joined with ";", or "" when there are none.
std::string joined_value(const DublinCoreRecord& record, DcElement element);

/// True iff some value has a non-whitespace character.
bool is_filled(const DublinCoreRecord& record, DcElement element) noexcept;

/// Serializes `record` as an `<oai_dc:dc>` element with namespace declarations.
std::string render_dc(const DublinCoreRecord& record);

/// Current UTC time as "YYYY-MM-DDThh:mm:ss.mmmZ".
std::string utc_timestamp_now();

}  // namespace dcqual
