#include "cloudfill/base64.hpp"

#include <array>
#include <cstdint>

#include "cloudfill/errors.hpp"

namespace cloudfill {

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<std::int8_t, 256> make_reverse() {
    std::array<std::int8_t, 256> rev{};
    rev.fill(-1);
    for (int i = 0; i < 64; ++i) rev[std::uint8_t(kAlphabet[i])] = std::int8_t(i);
    return rev;
}
}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t n = (std::uint8_t(bytes[i]) << 16) | (std::uint8_t(bytes[i + 1]) << 8) |
                                std::uint8_t(bytes[i + 2]);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t n = std::uint8_t(bytes[i]) << 16;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t n = (std::uint8_t(bytes[i]) << 16) | (std::uint8_t(bytes[i + 1]) << 8);
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    static const std::array<std::int8_t, 256> rev = make_reverse();
    if (text.size() % 4 != 0)
        throw ParseError("base64 length must be a multiple of four", text.size());
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t n = 0;
        for (int k = 0; k < 4; ++k) {
            const char ch = text[i + k];
            if (ch == '=') {
                if (i + 4 != text.size() || k < 2)
                    throw ParseError("unexpected base64 padding", i + k);
                ++pad;
                n <<= 6;
                continue;
            }
            if (pad > 0) throw ParseError("data after base64 padding", i + k);
            const std::int8_t v = rev[std::uint8_t(ch)];
            if (v < 0) throw ParseError("invalid base64 character", i + k);
            n = (n << 6) | std::uint32_t(v);
        }
        out += char((n >> 16) & 0xff);
        if (pad < 2) out += char((n >> 8) & 0xff);
        if (pad < 1) out += char(n & 0xff);
    }
    return out;
}

}  // namespace cloudfill
