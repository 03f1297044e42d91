#include "cloudfill/pgm_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cloudfill {

namespace {

constexpr std::size_t kMaxPixels = 64u << 20;  // fuzz guard against absurd allocations

struct NetpbmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    double near = 0.0;
    double far = 0.0;
    bool have_range = false;
    std::size_t data_pos = 0;  // first byte after the header
};

// Parses "P?" magic, optional comments, width, height, maxval. A comment of
// the form "# near <v> far <v>" carries the depth quantization range.
NetpbmHeader parse_header(const std::string& bytes, int fields) {
    NetpbmHeader h;
    std::size_t pos = 0;
    const auto fail = [&](const std::string& msg) -> ParseError { return {msg, pos}; };

    if (bytes.size() < 2 || bytes[0] != 'P') throw fail("missing netpbm magic");
    h.magic = bytes.substr(0, 2);
    pos = 2;

    int parsed = 0;
    int values[3] = {0, 0, 0};
    while (parsed < fields) {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            const std::size_t eol = bytes.find('\n', pos);
            const std::string comment =
                bytes.substr(pos, (eol == std::string::npos ? bytes.size() : eol) - pos);
            std::istringstream in(comment.substr(1));
            std::string key;
            double near = 0.0, far = 0.0;
            if (in >> key && key == "near" && in >> near) {
                if (in >> key && key == "far" && in >> far) {
                    h.near = near;
                    h.far = far;
                    h.have_range = true;
                }
            }
            pos = (eol == std::string::npos) ? bytes.size() : eol + 1;
            continue;
        }
        if (pos >= bytes.size()) throw fail("truncated header");
        std::size_t end = pos;
        while (end < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[end])) &&
               bytes[end] != '#')
            ++end;
        int value = 0;
        const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + end, value);
        if (ec != std::errc() || ptr != bytes.data() + end || value < 0)
            throw fail("invalid header number '" + bytes.substr(pos, end - pos) + "'");
        values[parsed++] = value;
        pos = end;
    }
    // Exactly one whitespace byte separates the header from binary data.
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw fail("missing separator after header");
    ++pos;

    h.width = values[0];
    h.height = values[1];
    h.maxval = fields >= 3 ? values[2] : 0;
    h.data_pos = pos;
    if (h.width <= 0 || h.height <= 0) throw fail("image dimensions must be positive");
    if (std::size_t(h.width) * std::size_t(h.height) > kMaxPixels)
        throw fail("image dimensions unreasonably large");
    return h;
}

// Reads h.width * h.height samples as ASCII (P2) or big-endian binary (P5).
std::vector<int> read_gray_samples(const std::string& bytes, const NetpbmHeader& h) {
    const std::size_t n = std::size_t(h.width) * h.height;
    std::vector<int> samples(n, 0);
    std::size_t pos = h.data_pos;
    if (h.magic == "P2") {
        for (std::size_t i = 0; i < n; ++i) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])))
                ++pos;
            std::size_t end = pos;
            while (end < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[end])))
                ++end;
            int value = 0;
            const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + end, value);
            if (pos == end || ec != std::errc() || ptr != bytes.data() + end)
                throw ParseError("invalid or missing sample " + std::to_string(i), pos);
            if (value < 0 || value > h.maxval)
                throw ParseError("sample " + std::to_string(i) + " exceeds maxval", pos);
            samples[i] = value;
            pos = end;
        }
    } else {  // P5
        const std::size_t bpp = h.maxval > 255 ? 2 : 1;
        if (pos + n * bpp > bytes.size())
            throw ParseError("truncated pixel data", bytes.size());
        for (std::size_t i = 0; i < n; ++i) {
            int value;
            if (bpp == 2) {
                value = (std::uint8_t(bytes[pos]) << 8) | std::uint8_t(bytes[pos + 1]);
                pos += 2;
            } else {
                value = std::uint8_t(bytes[pos]);
                pos += 1;
            }
            if (value > h.maxval)
                throw ParseError("sample " + std::to_string(i) + " exceeds maxval", pos);
            samples[i] = value;
        }
    }
    return samples;
}

}  // namespace

std::string write_depth_pgm(const DepthImage& depth) {
    if (depth.width <= 0 || depth.height <= 0)
        throw InvalidArgumentError("depth image has no pixels");

    double near = 0.0, far = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
        if (!depth.valid[i]) continue;
        const double d = depth.depth[i];
        if (!(std::isfinite(d) && d > 0.0))
            throw InvalidArgumentError("valid depth sample must be finite and positive");
        if (!any) {
            near = far = d;
            any = true;
        } else {
            near = std::min(near, d);
            far = std::max(far, d);
        }
    }
    if (!any) {
        near = 0.0;
        far = 1.0;
    } else if (far <= near) {
        far = near + 1.0;  // constant depth still round-trips to `near`
    }

    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "P2\n# near %.17g far %.17g\n%d %d\n65535\n", near, far,
                  depth.width, depth.height);
    out += buf;
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            int sample = 0;
            if (depth.valid_at(x, y))
                sample = 1 + int(std::lround((depth.at(x, y) - near) / (far - near) * 65534.0));
            std::snprintf(buf, sizeof(buf), x + 1 == depth.width ? "%d\n" : "%d ", sample);
            out += buf;
        }
    }
    return out;
}

DepthImage read_depth_pgm(const std::string& bytes) {
    const NetpbmHeader h = parse_header(bytes, 3);
    if (h.magic != "P2" && h.magic != "P5")
        throw ParseError("bad magic '" + h.magic + "' for a depth map", 0);
    if (h.maxval != 65535)
        throw ParseError("depth map must be 16-bit (maxval 65535)", 0);
    if (!h.have_range)
        throw ParseError("depth map lacks the '# near <v> far <v>' comment", 0);
    if (!(std::isfinite(h.near) && std::isfinite(h.far) && h.far > h.near))
        throw ParseError("depth map near/far range is invalid", 0);

    const std::vector<int> samples = read_gray_samples(bytes, h);
    DepthImage depth(h.width, h.height);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] == 0) continue;
        depth.valid[i] = 1;
        depth.depth[i] = h.near + (samples[i] - 1) * (h.far - h.near) / 65534.0;
    }
    return depth;
}

std::string write_mask_pgm(const BinaryMask& mask) {
    if (mask.width <= 0 || mask.height <= 0)
        throw InvalidArgumentError("mask has no pixels");
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "P2\n%d %d\n255\n", mask.width, mask.height);
    out += buf;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            std::snprintf(buf, sizeof(buf), x + 1 == mask.width ? "%d\n" : "%d ",
                          mask.at(x, y) ? 255 : 0);
            out += buf;
        }
    }
    return out;
}

BinaryMask read_mask_pgm(const std::string& bytes) {
    const NetpbmHeader h = parse_header(bytes, 3);
    if (h.magic != "P2" && h.magic != "P5")
        throw ParseError("bad magic '" + h.magic + "' for a mask", 0);
    if (h.maxval != 255)
        throw ParseError("mask must be 8-bit (maxval 255)", 0);
    const std::vector<int> samples = read_gray_samples(bytes, h);
    BinaryMask mask(h.width, h.height);
    for (std::size_t i = 0; i < samples.size(); ++i) mask.bits[i] = samples[i] != 0;
    return mask;
}

std::string write_ppm(const RgbImage& image) {
    if (image.width <= 0 || image.height <= 0)
        throw InvalidArgumentError("image has no pixels");
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "P6\n%d %d\n255\n", image.width, image.height);
    out += buf;
    out.reserve(out.size() + image.pixels.size() * 3);
    for (const Vec3& c : image.pixels)
        for (int k = 0; k < 3; ++k) {
            const double clamped = std::min(1.0, std::max(0.0, c[k]));
            out.push_back(char(std::uint8_t(std::lround(clamped * 255.0))));
        }
    return out;
}

RgbImage read_ppm(const std::string& bytes) {
    const NetpbmHeader h = parse_header(bytes, 3);
    if (h.magic != "P6")
        throw ParseError("bad magic '" + h.magic + "' for an RGB image", 0);
    if (h.maxval != 255)
        throw ParseError("RGB image must be 8-bit (maxval 255)", 0);
    const std::size_t n = std::size_t(h.width) * h.height;
    if (h.data_pos + n * 3 > bytes.size())
        throw ParseError("truncated pixel data", bytes.size());
    RgbImage image(h.width, h.height);
    std::size_t pos = h.data_pos;
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k)
            image.pixels[i][k] = double(std::uint8_t(bytes[pos + k])) / 255.0;
        pos += 3;
    }
    return image;
}

void write_text_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgumentError("cannot write " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw InvalidArgumentError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgumentError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace cloudfill
