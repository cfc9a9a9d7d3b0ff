#pragma once

#include <fstream>
#include <istream>
#include <memory>
#include <string>

#include <boost/iostreams/device/file.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include "leia/util.hpp"

namespace leia {

enum class Compression { None, Bzip2, Gzip, Auto };

inline Compression sniff_compression(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path);
    unsigned char magic[3] = {0, 0, 0};
    probe.read(reinterpret_cast<char*>(magic), 3);
    if (magic[0] == 0x1F && magic[1] == 0x8B) return Compression::Gzip;
    if (magic[0] == 'B' && magic[1] == 'Z' && magic[2] == 'h') return Compression::Bzip2;
    return Compression::None;
}

// Opens a possibly-compressed input file as a plain istream.
inline std::unique_ptr<std::istream> open_input(const std::string& path,
                                                Compression mode = Compression::Auto) {
    if (mode == Compression::Auto) mode = sniff_compression(path);
    auto stream = std::make_unique<boost::iostreams::filtering_istream>();
    switch (mode) {
        case Compression::Bzip2:
            stream->push(boost::iostreams::bzip2_decompressor());
            break;
        case Compression::Gzip:
            stream->push(boost::iostreams::gzip_decompressor());
            break;
        default:
            break;
    }
    stream->push(boost::iostreams::file_source(path, std::ios::binary));
    if (!stream->good()) throw IoError("cannot open " + path);
    return stream;
}

}  // namespace leia
