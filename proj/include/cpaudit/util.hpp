#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cpaudit {

// Epoch milliseconds, UTC. All in-memory timestamps use this.
using TimestampMs = std::int64_t;

// Parses ISO-8601 timestamps like "2019-03-01T12:00:00Z",
// "2019-03-01T12:00:00.123Z" or with a numeric offset ("+05:30").
std::optional<TimestampMs> parse_iso8601(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_iso8601(TimestampMs ms);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Case-insensitive ASCII comparison.
bool iequals(std::string_view a, std::string_view b);

// Hex digests (lowercase) over arbitrary bytes.
std::string sha256_hex(std::string_view data);
std::string sha1_hex(std::string_view data);
std::string md5_hex(std::string_view data);

std::string base64_encode(std::string_view data, bool url_safe = false);
std::string hex_encode(std::string_view data);
std::string percent_encode(std::string_view data);

// Minimal URL decomposition adequate for traffic auditing.
struct ParsedUrl {
    std::string scheme;   // lowercased
    std::string host;     // lowercased, no port
    std::string port;
    std::string path;     // starts with '/' (or empty for weird inputs)
    std::string query;    // without '?'
};

std::optional<ParsedUrl> parse_url(std::string_view url);

// Shannon entropy in bits per character.
double shannon_entropy(std::string_view s);

// Writes content to path atomically (temp file in same dir, then rename).
void atomic_write_file(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace cpaudit
