#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcqual/errors.hpp"

// Minimal namespace-aware XML tree built on expat. Element names are split
// into (namespace URI, local name); prefixes are not kept.
namespace dcqual::xml {

struct Element {
  std::string ns;
  std::string local;
  /// Attribute names are "uri local" when namespaced, bare otherwise.
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  /// Direct character data, concatenated.
  std::string text;

  bool is(std::string_view uri, std::string_view name) const noexcept {
    return ns == uri && local == name;
  }
  const Element* child(std::string_view uri, std::string_view name) const noexcept;
  std::vector<const Element*> children_named(std::string_view uri, std::string_view name) const;
  std::optional<std::string_view> attribute(std::string_view name) const noexcept;
  /// Character data of this element and all descendants in document order.
  std::string all_text() const;
};

/// Raised when the root element is not the one the caller asked for.
class UnexpectedRoot : public Error {
 public:
  UnexpectedRoot(std::string ns, std::string local)
      : Error("unexpected root element {" + ns + "}" + local),
        ns_(std::move(ns)),
        local_(std::move(local)) {}
  const std::string& ns() const noexcept { return ns_; }
  const std::string& local() const noexcept { return local_; }

 private:
  std::string ns_;
  std::string local_;
};

/// Parses a complete document. Throws MalformedXml.
Element parse(std::string_view document);

/// Like parse(), but stops at the root start tag with UnexpectedRoot when it
/// is not {root_ns}root_local. A mismatching root wins over later
/// well-formedness errors.
Element parse_expecting_root(std::string_view document, std::string_view root_ns,
                             std::string_view root_local);

std::string escape_text(std::string_view s);
std::string escape_attribute(std::string_view s);

}  // namespace dcqual::xml
