#include "dcqual/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <memory>

namespace dcqual::xml {

namespace {

constexpr char kNsSep = ' ';

struct ParserFree {
  void operator()(XML_Parser p) const noexcept { XML_ParserFree(p); }
};

struct BuildState {
  XML_Parser parser = nullptr;
  std::vector<Element> stack;
  std::optional<Element> root;
  std::optional<std::pair<std::string, std::string>> expected_root;
  std::optional<UnexpectedRoot> root_mismatch;
};

void split_name(const XML_Char* raw, std::string& ns, std::string& local) {
  std::string_view name(raw);
  const auto pos = name.find(kNsSep);
  if (pos == std::string_view::npos) {
    ns.clear();
    local.assign(name);
  } else {
    ns.assign(name.substr(0, pos));
    local.assign(name.substr(pos + 1));
  }
}

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* st = static_cast<BuildState*>(data);
  Element el;
  split_name(name, el.ns, el.local);
  if (st->stack.empty() && !st->root && st->expected_root &&
      (el.ns != st->expected_root->first || el.local != st->expected_root->second)) {
    st->root_mismatch.emplace(el.ns, el.local);
    XML_StopParser(st->parser, XML_FALSE);
    return;
  }
  for (auto a = attrs; *a != nullptr; a += 2) {
    el.attributes.emplace_back(a[0], a[1]);
  }
  st->stack.push_back(std::move(el));
}

void XMLCALL on_end(void* data, const XML_Char* /*name*/) {
  auto* st = static_cast<BuildState*>(data);
  // Expat still reports the end of a self-closing element after a stop.
  if (st->stack.empty()) return;
  Element done = std::move(st->stack.back());
  st->stack.pop_back();
  if (st->stack.empty()) {
    st->root = std::move(done);
  } else {
    st->stack.back().children.push_back(std::move(done));
  }
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<BuildState*>(data);
  if (!st->stack.empty()) st->stack.back().text.append(s, static_cast<std::size_t>(len));
}

Element run(std::string_view document,
            std::optional<std::pair<std::string, std::string>> expected_root) {
  std::unique_ptr<XML_ParserStruct, ParserFree> parser(XML_ParserCreateNS(nullptr, kNsSep));
  if (!parser) throw MalformedXml("cannot allocate XML parser");

  BuildState st;
  st.parser = parser.get();
  st.expected_root = std::move(expected_root);
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);

  // Feed in chunks so documents larger than INT_MAX bytes are not truncated.
  constexpr std::size_t kChunk = 1u << 24;
  std::size_t offset = 0;
  XML_Status status = XML_STATUS_OK;
  do {
    const std::size_t n = std::min(kChunk, document.size() - offset);
    const bool last = offset + n == document.size();
    status = XML_Parse(parser.get(), document.data() + offset, static_cast<int>(n),
                       last ? XML_TRUE : XML_FALSE);
    offset += n;
  } while (status == XML_STATUS_OK && offset < document.size());

  if (st.root_mismatch) throw *st.root_mismatch;
  if (status != XML_STATUS_OK) {
    const auto code = XML_GetErrorCode(parser.get());
    throw MalformedXml(std::string("line ") +
                       std::to_string(XML_GetCurrentLineNumber(parser.get())) + ": " +
                       XML_ErrorString(code));
  }
  if (!st.root) throw MalformedXml("document has no root element");
  return std::move(*st.root);
}

void collect_text(const Element& el, std::string& out) {
  // Child order relative to text is not tracked; text first is good enough
  // for the leaf-ish elements this is used on.
  out += el.text;
  for (const auto& c : el.children) collect_text(c, out);
}

std::string escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out += c;
        }
        break;
      case '\r': out += "&#13;"; break;
      case '\n':
        if (attribute) {
          out += "&#10;";
        } else {
          out += c;
        }
        break;
      case '\t':
        if (attribute) {
          out += "&#9;";
        } else {
          out += c;
        }
        break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const Element* Element::child(std::string_view uri, std::string_view name) const noexcept {
  for (const auto& c : children) {
    if (c.is(uri, name)) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view uri,
                                                    std::string_view name) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.is(uri, name)) out.push_back(&c);
  }
  return out;
}

std::optional<std::string_view> Element::attribute(std::string_view name) const noexcept {
  for (const auto& [k, v] : attributes) {
    if (k == name) return std::string_view(v);
  }
  return std::nullopt;
}

std::string Element::all_text() const {
  std::string out;
  collect_text(*this, out);
  return out;
}

Element parse(std::string_view document) { return run(document, std::nullopt); }

Element parse_expecting_root(std::string_view document, std::string_view root_ns,
                             std::string_view root_local) {
  return run(document, std::make_pair(std::string(root_ns), std::string(root_local)));
}

std::string escape_text(std::string_view s) { return escape(s, false); }

std::string escape_attribute(std::string_view s) { return escape(s, true); }

}  // namespace dcqual::xml
