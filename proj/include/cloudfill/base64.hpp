#pragma once

#include <string>
#include <string_view>

namespace cloudfill {

/// RFC 4648 base64 without line breaks.
std::string base64_encode(std::string_view bytes);

/// Strict decode; throws ParseError on bad characters or padding.
std::string base64_decode(std::string_view text);

}  // namespace cloudfill
