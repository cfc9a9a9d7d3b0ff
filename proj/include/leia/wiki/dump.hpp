#pragma once

// Streaming reader for MediaWiki pages-articles exports. Yields one
// RawPage per <page> element in dump order; memory is bounded by a
// single page.

#include <cstdint>
#include <cstdlib>
#include <istream>
#include <string>

#include "leia/xml.hpp"

namespace leia {

struct RawPage {
    std::string title;
    int64_t ns = 0;
    bool is_redirect = false;
    std::string wikitext;
    uint64_t page_id = 0;
};

class DumpReader {
public:
    explicit DumpReader(std::istream& in) : xml_(in) {}

    // Fills `out` with the next page. Returns false at clean end of dump.
    bool next(RawPage& out) {
        out = RawPage();
        bool in_page = false;
        size_t page_depth = 0;
        bool have_id = false;
        for (;;) {
            XmlReader::Event ev = xml_.next();
            switch (ev) {
                case XmlReader::Event::Eof:
                    if (in_page) throw ParseError("dump truncated inside a <page> element");
                    return false;
                case XmlReader::Event::Start: {
                    const std::string& tag = xml_.name();
                    if (!in_page) {
                        if (tag == "page") {
                            in_page = true;
                            page_depth = xml_.depth();
                        }
                        // siteinfo and other preamble elements stream by as
                        // ordinary events; nothing to do.
                        break;
                    }
                    size_t rel = xml_.depth() - page_depth;
                    if (rel == 1) {
                        if (tag == "title") {
                            xml_.read_element_text(out.title);
                        } else if (tag == "ns") {
                            std::string v;
                            xml_.read_element_text(v);
                            out.ns = v.empty() ? 0 : std::strtoll(v.c_str(), nullptr, 10);
                        } else if (tag == "id" && !have_id) {
                            std::string v;
                            xml_.read_element_text(v);
                            out.page_id = std::strtoull(v.c_str(), nullptr, 10);
                            have_id = true;
                        } else if (tag == "redirect") {
                            out.is_redirect = true;
                            xml_.skip_element();
                        } else if (tag == "revision") {
                            read_revision(out);
                        } else {
                            xml_.skip_element();
                        }
                    }
                    break;
                }
                case XmlReader::Event::End:
                    if (in_page && xml_.depth() < page_depth) {
                        ++pages_read_;
                        return true;
                    }
                    break;
                case XmlReader::Event::Text:
                    break;  // inter-element whitespace
            }
        }
    }

    uint64_t pages_read() const { return pages_read_; }

private:
    void read_revision(RawPage& out) {
        size_t rev_depth = xml_.depth();
        bool took_text = false;
        for (;;) {
            XmlReader::Event ev = xml_.next();
            if (ev == XmlReader::Event::Eof)
                throw ParseError("dump truncated inside <revision>");
            if (ev == XmlReader::Event::Start) {
                if (xml_.depth() == rev_depth + 1 && xml_.name() == "text" && !took_text) {
                    xml_.read_element_text(out.wikitext);
                    took_text = true;
                } else {
                    xml_.skip_element();
                }
            } else if (ev == XmlReader::Event::End && xml_.depth() < rev_depth) {
                return;
            }
        }
    }

    XmlReader xml_;
    uint64_t pages_read_ = 0;
};

}  // namespace leia
