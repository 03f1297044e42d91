#include "cloudfill/ply_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cloudfill {

namespace {

struct Property {
    std::string name;
    std::string type;
    std::size_t size = 0;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
    if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
    if (type == "int" || type == "int32" || type == "uint" || type == "uint32") return 4;
    if (type == "float" || type == "float32") return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

bool is_float32(const std::string& type) { return type == "float" || type == "float32"; }
bool is_uint8(const std::string& type) { return type == "uchar" || type == "uint8"; }

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    bool eof() const { return pos >= s.size(); }

    // Reads up to the next newline; returns the line without the terminator.
    std::string line(std::size_t& line_start) {
        line_start = pos;
        std::size_t end = s.find('\n', pos);
        if (end == std::string::npos) {
            std::string out = s.substr(pos);
            pos = s.size();
            if (!out.empty() && out.back() == '\r') out.pop_back();
            return out;
        }
        std::string out = s.substr(pos, end - pos);
        pos = end + 1;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return out;
    }

    void skip_space() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    // Next whitespace-separated token; empty at end of input.
    std::string token(std::size_t& tok_start) {
        skip_space();
        tok_start = pos;
        std::size_t end = pos;
        while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end]))) ++end;
        std::string out = s.substr(pos, end - pos);
        pos = end;
        return out;
    }
};

std::vector<std::string> split_words(const std::string& line) {
    std::vector<std::string> words;
    std::istringstream in(line);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

double parse_ascii_number(Cursor& cur, const char* what) {
    std::size_t at = 0;
    const std::string tok = cur.token(at);
    if (tok.empty()) throw ParseError(std::string("unexpected end of data reading ") + what, at);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(std::string("invalid number '") + tok + "' for " + what, at);
    return value;
}

}  // namespace

PointCloud read_ply(const std::string& bytes) {
    Cursor cur{bytes};
    std::size_t at = 0;

    if (cur.line(at) != "ply") throw ParseError("missing 'ply' magic", at);

    bool binary = false;
    bool have_format = false;
    std::vector<Element> elements;

    for (;;) {
        if (cur.eof()) throw ParseError("header has no end_header line", bytes.size());
        const std::string line = cur.line(at);
        const auto words = split_words(line);
        if (words.empty()) continue;
        if (words[0] == "comment" || words[0] == "obj_info") continue;
        if (words[0] == "format") {
            if (words.size() != 3 || words[2] != "1.0" ||
                (words[1] != "ascii" && words[1] != "binary_little_endian"))
                throw ParseError("unsupported format line '" + line + "'", at);
            binary = (words[1] == "binary_little_endian");
            have_format = true;
        } else if (words[0] == "element") {
            if (words.size() != 3) throw ParseError("malformed element line '" + line + "'", at);
            std::size_t count = 0;
            const auto [ptr, ec] =
                std::from_chars(words[2].data(), words[2].data() + words[2].size(), count);
            if (ec != std::errc() || ptr != words[2].data() + words[2].size())
                throw ParseError("invalid element count '" + words[2] + "'", at);
            elements.push_back({words[1], count, {}});
        } else if (words[0] == "property") {
            if (elements.empty())
                throw ParseError("property before any element", at);
            if (words.size() >= 2 && words[1] == "list")
                throw ParseError("unsupported property type 'list'", at);
            if (words.size() != 3) throw ParseError("malformed property line '" + line + "'", at);
            const std::size_t size = scalar_size(words[1]);
            if (size == 0)
                throw ParseError("unsupported property type '" + words[1] + "'", at);
            elements.back().props.push_back({words[2], words[1], size});
        } else if (words[0] == "end_header") {
            break;
        } else {
            throw ParseError("unrecognized header line '" + line + "'", at);
        }
    }
    if (!have_format) throw ParseError("header has no format line", cur.pos);

    PointCloud cloud;
    for (const Element& elem : elements) {
        if (elem.name != "vertex") {
            // Skip a foreign element's payload.
            if (binary) {
                std::size_t row = 0;
                for (const Property& p : elem.props) row += p.size;
                const std::size_t total = row * elem.count;
                if (cur.pos + total > bytes.size())
                    throw ParseError("truncated payload in element '" + elem.name + "'",
                                     bytes.size());
                cur.pos += total;
            } else {
                for (std::size_t i = 0; i < elem.count * elem.props.size(); ++i)
                    parse_ascii_number(cur, "skipped element");
            }
            continue;
        }

        int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
        for (std::size_t p = 0; p < elem.props.size(); ++p) {
            const Property& prop = elem.props[p];
            const auto bind = [&](int& slot, bool type_ok, const char* need) {
                if (!type_ok)
                    throw ParseError("unsupported property type '" + prop.type + "' for " +
                                         prop.name + " (need " + need + ")",
                                     at);
                slot = int(p);
            };
            if (prop.name == "x") bind(ix, is_float32(prop.type), "float32");
            else if (prop.name == "y") bind(iy, is_float32(prop.type), "float32");
            else if (prop.name == "z") bind(iz, is_float32(prop.type), "float32");
            else if (prop.name == "red") bind(ir, is_uint8(prop.type), "uint8");
            else if (prop.name == "green") bind(ig, is_uint8(prop.type), "uint8");
            else if (prop.name == "blue") bind(ib, is_uint8(prop.type), "uint8");
        }
        if (ix < 0 || iy < 0 || iz < 0)
            throw ParseError("vertex element lacks float32 x, y, z properties", at);
        const bool colored = ir >= 0 && ig >= 0 && ib >= 0;

        cloud.points.reserve(std::min<std::size_t>(elem.count, 1u << 20));
        if (colored) cloud.colors.reserve(std::min<std::size_t>(elem.count, 1u << 20));

        for (std::size_t v = 0; v < elem.count; ++v) {
            Vec3 p = Vec3::Zero();
            Vec3 c = Vec3::Zero();
            if (binary) {
                for (std::size_t q = 0; q < elem.props.size(); ++q) {
                    const Property& prop = elem.props[q];
                    if (cur.pos + prop.size > bytes.size())
                        throw ParseError("truncated payload at vertex " + std::to_string(v),
                                         bytes.size());
                    const char* src = bytes.data() + cur.pos;
                    if (int(q) == ix || int(q) == iy || int(q) == iz) {
                        float f = 0.f;
                        std::memcpy(&f, src, 4);
                        if (int(q) == ix) p.x() = f;
                        else if (int(q) == iy) p.y() = f;
                        else p.z() = f;
                    } else if (colored && (int(q) == ir || int(q) == ig || int(q) == ib)) {
                        const double channel = double(std::uint8_t(*src)) / 255.0;
                        if (int(q) == ir) c.x() = channel;
                        else if (int(q) == ig) c.y() = channel;
                        else c.z() = channel;
                    }
                    cur.pos += prop.size;
                }
            } else {
                for (std::size_t q = 0; q < elem.props.size(); ++q) {
                    const double value = parse_ascii_number(cur, elem.props[q].name.c_str());
                    const bool is_color =
                        colored && (int(q) == ir || int(q) == ig || int(q) == ib);
                    if (is_color && !(value >= 0.0 && value <= 255.0))
                        throw ParseError("color channel out of uint8 range at vertex " +
                                             std::to_string(v),
                                         cur.pos);
                    if (int(q) == ix) p.x() = float(value);
                    else if (int(q) == iy) p.y() = float(value);
                    else if (int(q) == iz) p.z() = float(value);
                    else if (colored && int(q) == ir) c.x() = value / 255.0;
                    else if (colored && int(q) == ig) c.y() = value / 255.0;
                    else if (colored && int(q) == ib) c.z() = value / 255.0;
                }
            }
            if (!p.allFinite())
                throw ParseError("non-finite coordinate at vertex " + std::to_string(v), cur.pos);
            cloud.points.push_back(p);
            if (colored) cloud.colors.push_back(c);
        }
        break;  // trailing elements carry no vertex data
    }
    return cloud;
}

std::string write_ply(const PointCloud& cloud) {
    cloud.validate();
    std::string out;
    out.reserve(64 + cloud.size() * 32);
    out += "ply\nformat ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_colors())
        out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out += "end_header\n";

    char buf[96];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", double(float(p.x())),
                      double(float(p.y())), double(float(p.z())));
        out += buf;
        if (cloud.has_colors()) {
            const Vec3& c = cloud.colors[i];
            const auto channel = [](double x) {
                return int(std::lround(std::min(1.0, std::max(0.0, x)) * 255.0));
            };
            std::snprintf(buf, sizeof(buf), " %d %d %d", channel(c.x()), channel(c.y()),
                          channel(c.z()));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

PointCloud read_ply_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgumentError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_ply(buf.str());
}

void write_ply_file(const std::filesystem::path& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgumentError("cannot write " + path.string());
    out << write_ply(cloud);
    if (!out) throw InvalidArgumentError("failed writing " + path.string());
}

}  // namespace cloudfill
